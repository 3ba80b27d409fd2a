import csv
import io
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field

from app import __version__
from app.settings import settings

CSV_COLUMNS = ["command", "task", "channel", "p", "value", "reference", "verdict", "passed"]

UNCONFIRMED = "unconfirmed — optimizer lower bounds only"


class ResultEntry(BaseModel):
    """报告中的一行：CSV 取前几列，detail 只进 JSON"""

    task: str
    channel: str = ""
    p: Optional[str] = None
    value: Optional[float] = None
    reference: Optional[float] = Field(default=None, description="闭式值或右端乘积")
    verdict: str
    passed: bool
    detail: Dict[str, Any] = Field(default_factory=dict)


class Summary(BaseModel):
    total: int
    passed: int
    failed: int
    status: Literal["pass", "fail"]


class ReportDocument(BaseModel):
    tool: str = settings.name
    version: str = __version__
    command: str
    config: Dict[str, Any]
    results: List[ResultEntry]
    summary: Summary
    timings: Optional[Dict[str, float]] = None

    @classmethod
    def build(
        cls,
        command: str,
        config: Dict[str, Any],
        results: List[ResultEntry],
        timings: Optional[Dict[str, float]] = None,
    ) -> "ReportDocument":
        passed = sum(1 for r in results if r.passed)
        failed = len(results) - passed
        summary = Summary(
            total=len(results),
            passed=passed,
            failed=failed,
            status="pass" if failed == 0 else "fail",
        )
        return cls(command=command, config=config, results=results, summary=summary, timings=timings)

    @property
    def ok(self) -> bool:
        return self.summary.status == "pass"

    def to_json(self) -> str:
        exclude = None if self.timings is not None else {"timings"}
        return self.model_dump_json(indent=2, exclude=exclude) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for entry in self.results:
            row = entry.model_dump(include=set(CSV_COLUMNS))
            row["command"] = self.command
            writer.writerow({key: "" if row.get(key) is None else row[key] for key in CSV_COLUMNS})
        return buffer.getvalue()

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()

    def write(self, path: Path, fmt: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(fmt), encoding="utf-8")
