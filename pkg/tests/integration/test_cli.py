import csv
import json
from pathlib import Path

import jsonschema
import pytest
from typer.testing import CliRunner

from app.main import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, app

ROOT = Path(__file__).resolve().parents[2]
CONFIGS = ROOT / "configs"
SCHEMA = json.loads((ROOT / "schemas" / "report.schema.json").read_text(encoding="utf-8"))

runner = CliRunner()


def invoke(*args: str):
    return runner.invoke(app, [str(arg) for arg in args])


def write_config(tmp_path: Path, text: str, name: str = "run.yaml") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def load_report(path: Path) -> dict:
    payload = json.loads(path.read_text(encoding="utf-8"))
    jsonschema.validate(payload, SCHEMA)
    return payload


def test_nu_depolarizing_report(tmp_path):
    out = tmp_path / "nu.json"
    result = invoke("nu", "--config", CONFIGS / "nu_depolarizing.yaml", "--out", out)
    assert result.exit_code == EXIT_PASS

    report = load_report(out)
    assert report["command"] == "nu"
    assert [entry["p"] for entry in report["results"]] == ["1", "2", "inf"]
    values = [entry["value"] for entry in report["results"]]
    assert values == pytest.approx([1.0, 0.790569415042, 0.75], abs=1e-9)
    assert all(entry["verdict"] == "consistent" for entry in report["results"])
    assert report["summary"]["status"] == "pass"
    assert "timings" not in report


def test_nu_report_is_byte_reproducible(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    for out in (first, second):
        result = invoke("nu", "--config", CONFIGS / "nu_depolarizing.yaml", "--p", "2", "--restarts", "4", "--out", out)
        assert result.exit_code == EXIT_PASS
    assert first.read_bytes() == second.read_bytes()


def test_nu_q_to_p_entries(tmp_path):
    config = write_config(
        tmp_path,
        "channel: {kind: depolarizing, dim: 2, q: 0.4}\np: [2]\nq: [1, 2, 3]\nrestarts: 4\nseed: 1\n",
    )
    out = tmp_path / "nu.json"
    result = invoke("nu", "--config", config, "--out", out)
    assert result.exit_code == EXIT_PASS
    tasks = [entry["task"] for entry in load_report(out)["results"]]
    assert tasks == ["nu", "q_to_p", "q_to_p"]


def test_nu_rejects_invalid_channel(tmp_path):
    config = write_config(
        tmp_path,
        "channel:\n  kind: kraus\n  matrices:\n    - [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]\n",
    )
    out = tmp_path / "nu.json"
    result = invoke("nu", "--config", config, "--out", out)
    assert result.exit_code == EXIT_FAIL
    report = load_report(out)
    assert report["results"][0]["task"] == "validate"
    assert report["results"][0]["verdict"] == "invalid channel"


def test_malformed_config_is_usage_error(tmp_path):
    config = write_config(tmp_path, "channel: {kind: depolarizing, dim: [2\n")
    result = invoke("nu", "--config", config)
    assert result.exit_code == EXIT_USAGE


def test_check_mult_depolarizing_pair(tmp_path):
    out = tmp_path / "mult.json"
    result = invoke(
        "check-mult", "--config", CONFIGS / "check_mult_qubits.yaml", "--p", "2,inf", "--restarts", "8", "--out", out
    )
    assert result.exit_code == EXIT_PASS
    report = load_report(out)
    assert [entry["verdict"] for entry in report["results"]] == ["consistent", "consistent"]
    for entry in report["results"]:
        assert entry["value"] == pytest.approx(entry["reference"], abs=1e-8)


def test_product_dimension_cap_is_usage_error(tmp_path):
    config = write_config(
        tmp_path,
        "factors:\n  - {kind: depolarizing, dim: 2, q: 0.3}\n  - {kind: depolarizing, dim: 2, q: 0.7}\n"
        "caps: {product_dim: 3}\nrestarts: 2\n",
    )
    result = invoke("check-mult", "--config", config)
    assert result.exit_code == EXIT_USAGE


def test_verify_lemma_small_batch(tmp_path):
    config = write_config(tmp_path, "seed: 5\nlemma: {trace_bound_instances: 30, cs_instances: 20}\n")
    out = tmp_path / "lemma.json"
    result = invoke("verify-lemma", "--config", config, "--out", out)
    assert result.exit_code == EXIT_PASS
    report = load_report(out)
    assert [entry["task"] for entry in report["results"]] == ["trace_bound", "cs_identity"]
    assert report["results"][0]["verdict"] == "30/30 pass"
    assert report["results"][1]["value"] <= 1e-10


def test_verify_lemma_rejects_zero_instances(tmp_path):
    config = write_config(tmp_path, "lemma: {trace_bound_instances: 0}\n")
    result = invoke("verify-lemma", "--config", config)
    assert result.exit_code == EXIT_USAGE


def test_search_writes_csv(tmp_path):
    config = write_config(
        tmp_path,
        "search: {samples: 2, family: depolarizing, factors: 2}\np: [2, inf]\nrestarts: 4\nseed: 3\nformat: csv\n",
    )
    out = tmp_path / "search.csv"
    result = invoke("search", "--config", config, "--out", out)
    assert result.exit_code == EXIT_PASS
    with out.open(encoding="utf-8", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 4
    assert {row["task"] for row in rows} == {"search"}
    assert {row["p"] for row in rows} == {"2", "inf"}


def test_validate_amplitude_damping(tmp_path):
    out = tmp_path / "validate.json"
    result = invoke("validate", "--config", CONFIGS / "validate_amplitude_damping.yaml", "--out", out)
    assert result.exit_code == EXIT_PASS
    entry = load_report(out)["results"][0]
    assert entry["verdict"] == "valid"
    assert entry["channel"].startswith("amplitude-damping")


def test_validate_transpose_choi_fails(tmp_path):
    swap = [
        [[1, 0], [0, 0], [0, 0], [0, 0]],
        [[0, 0], [0, 0], [1, 0], [0, 0]],
        [[0, 0], [1, 0], [0, 0], [0, 0]],
        [[0, 0], [0, 0], [0, 0], [1, 0]],
    ]
    config = write_config(tmp_path, json.dumps({"choi": {"dim": 2, "matrix": swap}}))
    out = tmp_path / "validate.json"
    result = invoke("validate", "--config", config, "--out", out)
    assert result.exit_code == EXIT_FAIL
    entry = load_report(out)["results"][0]
    assert entry["passed"] is False
    assert entry["reference"] == pytest.approx(-1.0)


def test_validate_needs_something(tmp_path):
    config = write_config(tmp_path, "seed: 1\n")
    result = invoke("validate", "--config", config)
    assert result.exit_code == EXIT_USAGE


def test_schema_command_prints_json_schema():
    result = invoke("schema")
    assert result.exit_code == EXIT_PASS
    schema = json.loads(result.stdout)
    assert "results" in schema["properties"]


def test_search_random_kraus_channels(tmp_path):
    config = write_config(
        tmp_path,
        "search: {samples: 2, family: kraus, dim: 2, rank: 2, factors: 2}\np: [1, 2]\nrestarts: 2\nseed: 11\n",
    )
    out = tmp_path / "search.json"
    result = invoke("search", "--config", config, "--out", out)
    assert result.exit_code == EXIT_PASS
    report = load_report(out)
    assert len(report["results"]) == 4
    for entry in report["results"]:
        if entry["p"] == "1":
            assert entry["value"] == 1.0
            assert entry["verdict"] == "consistent"


def test_nu_respects_product_dimension_cap(tmp_path):
    config = write_config(
        tmp_path,
        "factors:\n  - {kind: depolarizing, dim: 2, q: 0.3}\n  - {kind: depolarizing, dim: 2, q: 0.7}\n"
        "caps: {product_dim: 3}\nrestarts: 2\n",
    )
    result = invoke("nu", "--config", config)
    assert result.exit_code == EXIT_USAGE


def test_check_mult_three_qubits_cubic(tmp_path):
    config = write_config(
        tmp_path,
        "factors:\n  - {kind: depolarizing, dim: 2, q: 0.3}\n  - {kind: depolarizing, dim: 2, q: 0.7}\n"
        "  - {kind: depolarizing, dim: 2, q: 0.5}\np: [3]\nrestarts: 8\nseed: 7\n",
    )
    out = tmp_path / "mult.json"
    result = invoke("check-mult", "--config", config, "--out", out)
    assert result.exit_code == EXIT_PASS
    entry = load_report(out)["results"][0]
    assert entry["verdict"] == "consistent"
    closed = (0.85**3 + 0.15**3) * (0.65**3 + 0.35**3) * (0.75**3 + 0.25**3)
    assert entry["reference"] == pytest.approx(closed ** (1 / 3), abs=1e-9)
    assert entry["value"] == pytest.approx(closed ** (1 / 3), abs=1e-6)
