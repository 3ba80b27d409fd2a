"""去极化信道 ν_p 的闭式表达及其证明中的不等式链"""

import itertools
import math
from functools import reduce
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from app.channels.operations import conditional_expectation, expansion_coefficients
from app.channels.schema import DepolarizingForm
from app.common.errors import ExpansionCapError
from app.linalg.schema import NormOrder, NormOrderLike, SubsetMask
from app.settings import CapSettings, settings

from .schema import ClosedFormValue

FactorLike = Union[DepolarizingForm, Tuple[int, float]]


def _as_depolarizing(factor: FactorLike) -> DepolarizingForm:
    if isinstance(factor, DepolarizingForm):
        return factor
    d, q = factor
    return DepolarizingForm(d=d, q=q)


def closed_form_nu_p(d: int, q: float, p: NormOrderLike) -> float:
    """[(1−(d−1)q/d)^p + (d−1)(q/d)^p]^{1/p}；p = inf 时取 max(1−(d−1)q/d, q/d)"""
    order = NormOrder.parse(p)
    top = 1 - (d - 1) * q / d
    rest = q / d
    if order.is_infinite:
        return max(top, rest)
    return (top**order.value + (d - 1) * rest**order.value) ** (1 / order.value)


def closed_form_product_nu_p(factors: Sequence[FactorLike], p: NormOrderLike) -> ClosedFormValue:
    """∏ ν_p(Φ_i)；整数 p 与 p = inf 已证明，其余 p 标记为猜想"""
    order = NormOrder.parse(p)
    value = math.prod(closed_form_nu_p(f.d, f.q, order) for f in map(_as_depolarizing, factors))
    proven = order.is_integer or order.is_infinite
    return ClosedFormValue(value=value, p=order.label, regime="proven" if proven else "conjectural")


def _check_enumeration(n: int, p: int, caps: Optional[CapSettings]) -> None:
    cap = (settings.caps if caps is None else caps).expansion_factors
    if n * p > cap:
        raise ExpansionCapError(cap=cap, required=n * p, detail=f"(2^{n})^{p} subset tuples")


def _subset_tuples(factors: Sequence[DepolarizingForm], p: int):
    coefficients = expansion_coefficients(factors)
    return itertools.product(coefficients, repeat=p)


def trace_power_via_expansion(
    factors: Sequence[FactorLike], s, p: int, caps: Optional[CapSettings] = None
) -> float:
    """Tr Φ(S)^p 展开为 Σ_{L_1..L_p} 系数之积 × Tr ε_{L_1}(S)…ε_{L_p}(S)"""
    channels = [_as_depolarizing(f) for f in factors]
    _check_enumeration(len(channels), p, caps)
    dims = [f.d for f in channels]
    matrix = np.asarray(s, dtype=complex)
    cache = {
        subset.bitmask: conditional_expectation(matrix, dims, subset)
        for subset, _ in expansion_coefficients(channels)
    }
    total = 0j
    for combo in _subset_tuples(channels, p):
        weight = math.prod(w for _, w in combo)
        if weight == 0:
            continue
        product = reduce(np.matmul, [cache[subset.bitmask] for subset, _ in combo])
        total += weight * np.trace(product)
    return float(total.real)


def conditional_product_bound(s, dims: Sequence[int], subsets: Sequence[SubsetMask]) -> Tuple[float, float]:
    """|Tr ε_{L_1}(S)…ε_{L_p}(S)| 与上界 d_{∩L}/∏ d_{L_j}"""
    matrix = np.asarray(s, dtype=complex)
    factors = [conditional_expectation(matrix, dims, subset) for subset in subsets]
    product = reduce(np.matmul, factors)
    common = subsets[0]
    for subset in subsets[1:]:
        common = common.intersection(subset)
    bound = common.dim / math.prod(subset.dim for subset in subsets)
    return float(abs(np.trace(product))), bound


def trace_power_bound(factors: Sequence[FactorLike], p: int, caps: Optional[CapSettings] = None) -> float:
    """Σ_{L_1..L_p} ∏_i (q_i/d_i)^{Σθ} (1−q_i)^{Σ(1−θ)} d_i^{θ_∩}，等于闭式值的 p 次方"""
    channels = [_as_depolarizing(f) for f in factors]
    _check_enumeration(len(channels), p, caps)
    total = 0.0
    for combo in _subset_tuples(channels, p):
        subsets = [subset for subset, _ in combo]
        common = subsets[0]
        for subset in subsets[1:]:
            common = common.intersection(subset)
        weight = math.prod(w for _, w in combo)
        total += weight * common.dim / math.prod(subset.dim for subset in subsets)
    return total
