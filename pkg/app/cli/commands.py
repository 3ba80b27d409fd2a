import time
from contextlib import contextmanager
from typing import Dict, Iterator, List, Optional

from app.channels.choi import validate
from app.channels.schema import ProductForm, QuantumChannel, ValidityReport
from app.common.errors import ConfigError, NotHermitianError
from app.common.logger import logger
from app.lemma.service import run_cs_batch, run_trace_bound_batch
from app.purity.optimizer import check_product_dim, maximize_output_norm, norm_q_to_p_estimate
from app.purity.service import check_multiplicativity, classify_gap
from app.settings import settings

from .config import RunConfig
from .report import UNCONFIRMED, ReportDocument, ResultEntry
from .search import sample_factors


class _Timer:
    """include_timings 关闭时不记录任何时间，保证报告可逐字节复现"""

    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.values: Dict[str, float] = {}

    @contextmanager
    def measure(self, key: str) -> Iterator[None]:
        start = time.perf_counter()
        yield
        if self.enabled:
            self.values[key] = round(time.perf_counter() - start, 6)

    def result(self) -> Optional[Dict[str, float]]:
        return self.values if self.enabled else None


def _echo(config: RunConfig) -> dict:
    return config.model_dump(mode="json", exclude={"out", "format"})


def _validity_entry(report: ValidityReport) -> ResultEntry:
    return ResultEntry(
        task="validate",
        channel=report.channel,
        value=report.trace_residual,
        reference=report.min_choi_eigenvalue,
        verdict="valid" if report.passed else "invalid channel",
        passed=report.passed,
        detail=report.model_dump(),
    )


def _single_channel(config: RunConfig) -> QuantumChannel:
    channels = config.channels()
    if not channels:
        raise ConfigError("a channel (or factors) is required", location="channel")
    if len(channels) == 1:
        return channels[0]
    return ProductForm(factors=tuple(channels))


def _finish(command: str, config: RunConfig, results: List[ResultEntry], timer: _Timer) -> ReportDocument:
    document = ReportDocument.build(command, _echo(config), results, timer.result())
    log = logger.info if document.ok else logger.warning
    log(
        "cli.command.finished",
        command=command,
        status=document.summary.status,
        passed=document.summary.passed,
        failed=document.summary.failed,
    )
    return document


def cmd_nu(config: RunConfig) -> ReportDocument:
    """各 p 下的 ν_p；去极化乘积同时给出闭式值"""
    timer = _Timer(config.include_timings)
    caps = config.caps.resolve()
    channel = _single_channel(config)
    validity = validate(channel)
    if not validity.passed:
        logger.error("cli.nu.invalid_channel", channel=validity.channel, residual=validity.trace_residual)
        return _finish("nu", config, [_validity_entry(validity)], timer)
    check_product_dim(channel, caps)

    cfg = settings.optimizer
    results: List[ResultEntry] = []
    for p in config.p:
        with timer.measure(f"nu[p={p}]"):
            report = maximize_output_norm(
                channel, p, restarts=config.restarts, seed=config.seed, tol=config.tol, caps=caps
            )
        if report.closed_form is None:
            verdict, passed = "lower bound", True
        else:
            verdict = classify_gap(report.nu_p, report.closed_form, cfg.violation_tol, cfg.ascent_tol)
            passed = verdict == "consistent"
        results.append(
            ResultEntry(
                task="nu",
                channel=report.channel,
                p=report.p,
                value=report.nu_p,
                reference=report.closed_form,
                verdict=verdict,
                passed=passed,
                detail=report.model_dump(),
            )
        )
        for q in config.q:
            if float(q) > float(p):
                logger.warning("cli.nu.q_to_p.skipped", q=q, p=p, reason="q > p")
                continue
            with timer.measure(f"q_to_p[q={q},p={p}]"):
                value = norm_q_to_p_estimate(
                    channel, q, p, restarts=config.restarts, seed=config.seed, caps=caps
                )
            results.append(
                ResultEntry(
                    task="q_to_p",
                    channel=report.channel,
                    p=p,
                    value=value,
                    verdict="lower bound",
                    passed=True,
                    detail={"q": q, "inputs": "hermitian"},
                )
            )
    return _finish("nu", config, results, timer)


def cmd_check_mult(config: RunConfig) -> ReportDocument:
    """ν_p(⊗Φ_i) 对 ∏ν_p(Φ_i)；只有 consistent 计为通过"""
    timer = _Timer(config.include_timings)
    caps = config.caps.resolve()
    factors = config.channels()
    if not factors:
        raise ConfigError("factors (or a channel) are required", location="factors")

    invalid = [r for r in (validate(f) for f in factors) if not r.passed]
    if invalid:
        return _finish("check-mult", config, [_validity_entry(r) for r in invalid], timer)

    results: List[ResultEntry] = []
    for p in config.p:
        with timer.measure(f"check_mult[p={p}]"):
            report = check_multiplicativity(
                factors, p, restarts=config.restarts, seed=config.seed, tol=config.tol, caps=caps
            )
        results.append(
            ResultEntry(
                task="multiplicativity",
                channel=" ⊗ ".join(report.factors),
                p=report.p,
                value=report.lhs,
                reference=report.rhs,
                verdict=report.verdict,
                passed=report.verdict == "consistent",
                detail=report.model_dump(),
            )
        )
    return _finish("check-mult", config, results, timer)


def cmd_verify_lemma(config: RunConfig) -> ReportDocument:
    timer = _Timer(config.include_timings)
    caps = config.caps.resolve()
    lemma = config.lemma
    with timer.measure("trace_bound"):
        bound = run_trace_bound_batch(
            lemma.trace_bound_instances,
            seed=config.seed,
            m_max=lemma.m_max,
            n_max=lemma.n_max,
            dim_choices=tuple(lemma.dims),
        )
    with timer.measure("cs_identity"):
        identity = run_cs_batch(
            lemma.cs_instances,
            seed=config.seed,
            m_max=lemma.cs_m_max,
            n_max=lemma.cs_n_max,
            dim_choices=tuple(lemma.dims),
            caps=caps,
        )

    results = [
        ResultEntry(
            task="trace_bound",
            value=bound.max_lhs_over_rhs,
            reference=1.0,
            verdict=f"{bound.passed}/{bound.instances} pass",
            passed=bound.failed == 0,
            detail=bound.model_dump(),
        ),
        ResultEntry(
            task="cs_identity",
            value=identity.max_deviation,
            reference=settings.tolerances.cs_identity,
            verdict=f"{identity.passed}/{identity.instances} pass",
            passed=identity.failed == 0,
            detail=identity.model_dump(),
        ),
    ]
    return _finish("verify-lemma", config, results, timer)


def cmd_search(config: RunConfig) -> ReportDocument:
    """随机信道上的乘性探索；候选只代表优化下界之间的差距"""
    timer = _Timer(config.include_timings)
    caps = config.caps.resolve()
    search = config.search
    threshold = search.threshold if config.tol is None else config.tol
    results: List[ResultEntry] = []
    for index in range(search.samples):
        factors = sample_factors(search, config.seed, index)
        for p in config.p:
            with timer.measure(f"search[{index},p={p}]"):
                report = check_multiplicativity(
                    factors, p, restarts=config.restarts, seed=config.seed, tol=threshold, caps=caps
                )
            candidate = report.verdict == "violation candidate"
            if candidate:
                logger.warning(
                    "cli.search.candidate", sample=index, p=report.p, gap=report.gap, status=UNCONFIRMED
                )
            detail = report.model_dump()
            detail["sample"] = index
            results.append(
                ResultEntry(
                    task="search",
                    channel=" ⊗ ".join(report.factors),
                    p=report.p,
                    value=report.lhs,
                    reference=report.rhs,
                    verdict=UNCONFIRMED if candidate else report.verdict,
                    passed=not candidate,
                    detail=detail,
                )
            )
    return _finish("search", config, results, timer)


def cmd_validate(config: RunConfig) -> ReportDocument:
    timer = _Timer(config.include_timings)
    results: List[ResultEntry] = []
    if config.choi is not None:
        try:
            results.append(_validity_entry(validate(config.choi.to_choi())))
        except NotHermitianError as e:
            results.append(ResultEntry(task="validate", channel="choi", verdict=str(e), passed=False))
    for channel in config.channels():
        results.append(_validity_entry(validate(channel)))
    if not results:
        raise ConfigError("nothing to validate: give channel, factors or choi", location="channel")
    return _finish("validate", config, results, timer)
