from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

from pydantic import BaseModel

from app.common.logger import logger
from app.settings import CapSettings, settings

from .generators import random_cs_instance, random_factorized_instance
from .permutation import verify_cs_identity
from .schema import CsIdentityReport, TraceBoundReport
from .trace_bound import check_trace_bound

R = TypeVar("R", TraceBoundReport, CsIdentityReport)


class LemmaBatch(BaseModel):
    """一批实例的核对结果；failures 带完整实例描述以便重放"""

    check: str
    instances: int
    passed: int
    failed: int
    max_lhs_over_rhs: Optional[float] = None
    max_deviation: Optional[float] = None
    max_abs_sum: Optional[float] = None
    failures: List[dict]


def _run(count: int, task: Callable[[int], R], workers: int) -> List[R]:
    if count < 1:
        raise ValueError(f"instance count must be >= 1, got {count}")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task, range(count)))
    return [task(index) for index in range(count)]


def run_trace_bound_batch(
    count: int,
    seed: Optional[int] = None,
    m_max: int = 4,
    n_max: int = 4,
    dim_choices=(2, 3),
    workers: Optional[int] = None,
) -> LemmaBatch:
    seed = settings.default_seed if seed is None else seed
    workers = settings.optimizer.workers if workers is None else workers

    def task(index: int) -> TraceBoundReport:
        ops, instance = random_factorized_instance(seed, index, m_max, n_max, dim_choices)
        return check_trace_bound(ops).model_copy(update={"instance": instance})

    reports = _run(count, task, workers)
    failures = [r.model_dump() for r in reports if not r.passed]
    batch = LemmaBatch(
        check="trace_bound",
        instances=count,
        passed=count - len(failures),
        failed=len(failures),
        max_lhs_over_rhs=max((r.lhs / r.rhs for r in reports if r.rhs > 0), default=0.0),
        failures=failures,
    )
    _log(batch)
    return batch


def run_cs_batch(
    count: int,
    seed: Optional[int] = None,
    m_max: int = 3,
    n_max: int = 3,
    dim_choices=(2, 3),
    workers: Optional[int] = None,
    caps: Optional[CapSettings] = None,
) -> LemmaBatch:
    seed = settings.default_seed if seed is None else seed
    workers = settings.optimizer.workers if workers is None else workers

    def task(index: int) -> CsIdentityReport:
        ops, instance = random_cs_instance(seed, index, m_max, n_max, dim_choices)
        return verify_cs_identity(ops, caps).model_copy(update={"instance": instance})

    reports = _run(count, task, workers)
    failures = [r.model_dump() for r in reports if not r.passed]
    batch = LemmaBatch(
        check="cs_identity",
        instances=count,
        passed=count - len(failures),
        failed=len(failures),
        max_deviation=max(r.deviation for r in reports),
        max_abs_sum=max(abs(complex(*r.cs_sum)) for r in reports),
        failures=failures,
    )
    _log(batch)
    return batch


def _log(batch: LemmaBatch) -> None:
    if batch.failed:
        # 定理不应失败，失败即实现缺陷
        logger.error("lemma.batch.failed", check=batch.check, failed=batch.failed, instances=batch.instances)
    else:
        logger.info("lemma.batch.passed", check=batch.check, instances=batch.instances)
