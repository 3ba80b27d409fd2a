import math
from functools import reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.channels.schema import ProductForm, QuantumChannel
from app.common.logger import logger
from app.linalg.schema import NormOrder, NormOrderLike
from app.settings import CapSettings, settings

from .optimizer import check_product_dim, maximize_output_norm
from .schema import MultiplicativityReport, PurityReport, Verdict


def classify_gap(lhs: float, rhs: float, tol: float, ascent_tol: float) -> Verdict:
    """lhs 超出 rhs + tol 为违反候选；落在 [rhs − ascent_tol, rhs + tol] 内为一致"""
    gap = lhs - rhs
    if gap > tol:
        return "violation candidate"
    if gap >= -ascent_tol:
        return "consistent"
    return "inconclusive"


def _optimize(
    factors: Sequence[QuantumChannel],
    order: NormOrder,
    restarts: int,
    seed: int,
    caps: Optional[CapSettings],
) -> Tuple[PurityReport, List[PurityReport]]:
    factor_reports = [
        maximize_output_norm(factor, order, restarts=restarts, seed=seed, stream=index + 1, caps=caps)
        for index, factor in enumerate(factors)
    ]
    if len(factors) == 1:
        return factor_reports[0], factor_reports

    # 各因子最优态的张量积保证 lhs 不低于 rhs
    warm_start = reduce(np.kron, [r.maximizer.amplitudes for r in factor_reports])
    product = ProductForm(factors=tuple(factors))
    lhs_report = maximize_output_norm(
        product, order, restarts=restarts, seed=seed, stream=0, initial_states=[warm_start], caps=caps
    )
    return lhs_report, factor_reports


def check_multiplicativity(
    factors: Sequence[QuantumChannel],
    p: NormOrderLike,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
    caps: Optional[CapSettings] = None,
) -> MultiplicativityReport:
    """比较 ν_p(Φ_1⊗...⊗Φ_n) 与 ∏ ν_p(Φ_i)

    两边都是优化得到的下界；违反候选会以更多起点重新验证后才报告。
    """
    if not factors:
        raise ValueError("check_multiplicativity needs at least one factor")
    order = NormOrder.parse(p)
    cfg = settings.optimizer
    restarts = cfg.restarts if restarts is None else restarts
    seed = settings.default_seed if seed is None else seed
    tol = cfg.violation_tol if tol is None else tol

    product = ProductForm(factors=tuple(factors))
    check_product_dim(product, caps)

    lhs_report, factor_reports = _optimize(factors, order, restarts, seed, caps)
    rhs = math.prod(r.nu_p for r in factor_reports)
    verdict = classify_gap(lhs_report.nu_p, rhs, tol, cfg.ascent_tol)

    reverified = False
    used_restarts = restarts
    if verdict == "violation candidate":
        used_restarts = restarts * cfg.reverify_factor
        logger.warning(
            "purity.multiplicativity.reverify",
            factors=product.describe(),
            p=order.label,
            gap=lhs_report.nu_p - rhs,
            restarts=used_restarts,
        )
        lhs_report, factor_reports = _optimize(factors, order, used_restarts, seed, caps)
        rhs = math.prod(r.nu_p for r in factor_reports)
        verdict = classify_gap(lhs_report.nu_p, rhs, tol, cfg.ascent_tol)
        reverified = True

    lhs = lhs_report.nu_p
    report = MultiplicativityReport(
        factors=[f.describe() for f in factors],
        p=order.label,
        lhs=lhs,
        rhs=rhs,
        gap=lhs - rhs,
        factor_values=[r.nu_p for r in factor_reports],
        verdict=verdict,
        reverified=reverified,
        restarts=used_restarts,
        tol=tol,
        closed_form=lhs_report.closed_form,
    )
    logger.info(
        "purity.multiplicativity.checked",
        factors=product.describe(),
        p=order.label,
        gap=report.gap,
        verdict=verdict,
    )
    return report
