import json
import sys
from pathlib import Path
from typing import Callable, Optional

import typer
from rich.console import Console
from rich.table import Table

from app.cli.commands import cmd_check_mult, cmd_nu, cmd_search, cmd_validate, cmd_verify_lemma
from app.cli.config import RunConfig, load_config
from app.cli.report import ReportDocument
from app.common.errors import CapExceededError, ConfigError, NuPurityError
from app.common.logger import logger
from app.settings import settings

app = typer.Typer(name=settings.name, help="信道最大输出纯度 ν_p 与乘性数值核对", no_args_is_help=True)
console = Console(stderr=True)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

ConfigOption = typer.Option(None, "--config", "-c", help="YAML 配置文件")
POption = typer.Option(None, "--p", help="逗号分隔的范数阶，如 1,2,inf")
RestartsOption = typer.Option(None, "--restarts", min=1, help="随机起点数")
SeedOption = typer.Option(None, "--seed", min=0, help="随机种子")
OutOption = typer.Option(None, "--out", "-o", help="报告输出路径，缺省写 stdout")
FormatOption = typer.Option(None, "--format", help="json 或 csv")
TolOption = typer.Option(None, "--tol", help="容差覆盖")


def _overrides(p, restarts, seed, out, fmt, tol) -> dict:
    return {
        "p": [part for part in p.split(",") if part.strip()] if p else None,
        "restarts": restarts,
        "seed": seed,
        "out": str(out) if out else None,
        "format": fmt,
        "tol": tol,
    }


def _summary_table(document: ReportDocument) -> Table:
    table = Table(title=f"{settings.name} {document.command}")
    table.add_column("Task", style="cyan")
    table.add_column("Channel")
    table.add_column("p")
    table.add_column("Value", justify="right")
    table.add_column("Reference", justify="right")
    table.add_column("Verdict", style="yellow")
    table.add_column("Status")
    for entry in document.results:
        table.add_row(
            entry.task,
            entry.channel,
            entry.p or "",
            "" if entry.value is None else f"{entry.value:.12g}",
            "" if entry.reference is None else f"{entry.reference:.12g}",
            entry.verdict,
            "[green]✓[/green]" if entry.passed else "[red]✗[/red]",
        )
    return table


def _run(command: Callable[[RunConfig], ReportDocument], config_path, p, restarts, seed, out, fmt, tol) -> None:
    try:
        config = load_config(config_path, _overrides(p, restarts, seed, out, fmt, tol))
        document = command(config)
    except (ConfigError, CapExceededError) as e:
        logger.error("cli.rejected", error=str(e))
        console.print(f"[red]error:[/red] {e}")
        raise typer.Exit(code=EXIT_USAGE)
    except NuPurityError as e:
        logger.error("cli.failed", error=str(e))
        console.print(f"[red]error:[/red] {e}")
        raise typer.Exit(code=EXIT_FAIL)

    if config.out:
        document.write(Path(config.out), config.format)
    else:
        sys.stdout.write(document.render(config.format))
    console.print(_summary_table(document))
    raise typer.Exit(code=EXIT_PASS if document.ok else EXIT_FAIL)


@app.command()
def nu(
    config: Optional[Path] = ConfigOption,
    p: Optional[str] = POption,
    restarts: Optional[int] = RestartsOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    fmt: Optional[str] = FormatOption,
    tol: Optional[float] = TolOption,
):
    """计算 ν_p，去极化乘积附带闭式值"""
    _run(cmd_nu, config, p, restarts, seed, out, fmt, tol)


@app.command("check-mult")
def check_mult(
    config: Optional[Path] = ConfigOption,
    p: Optional[str] = POption,
    restarts: Optional[int] = RestartsOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    fmt: Optional[str] = FormatOption,
    tol: Optional[float] = TolOption,
):
    """比较 ν_p(Φ_1⊗...⊗Φ_n) 与 ∏ν_p(Φ_i)"""
    _run(cmd_check_mult, config, p, restarts, seed, out, fmt, tol)


@app.command("verify-lemma")
def verify_lemma(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    fmt: Optional[str] = FormatOption,
):
    """随机实例上核对迹界与置换恒等式"""
    _run(cmd_verify_lemma, config, None, None, seed, out, fmt, None)


@app.command()
def search(
    config: Optional[Path] = ConfigOption,
    p: Optional[str] = POption,
    restarts: Optional[int] = RestartsOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    fmt: Optional[str] = FormatOption,
    tol: Optional[float] = TolOption,
):
    """随机信道上搜索乘性违反候选"""
    _run(cmd_search, config, p, restarts, seed, out, fmt, tol)


@app.command()
def validate(
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    fmt: Optional[str] = FormatOption,
):
    """检查信道或 Choi 矩阵是否 CPTP"""
    _run(cmd_validate, config, None, None, None, out, fmt, None)


@app.command()
def schema():
    """打印报告文档的 JSON Schema"""
    sys.stdout.write(json.dumps(ReportDocument.model_json_schema(), indent=2) + "\n")


def cli() -> None:
    app()


if __name__ == "__main__":
    cli()
