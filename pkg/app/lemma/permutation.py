"""多重指标 𝔍 与置换 𝒫：把 Tr A_1⋯A_m 写成 Σ_𝔍 β̄_𝔍 α_{𝒫𝔍}

𝒜 按 (k, s) 字典序排列，系数数组的第 a 个轴对应 pairs[a]。
"""

import math
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.common.errors import MultiIndexCapError
from app.linalg.schema import SubsetMask
from app.settings import CapSettings, settings

from .schema import CsIdentityReport, FactorizedOperator, MultiIndex, Pair, PairPermutation
from .trace_bound import check_family, common_identity, trace_of_product


def pair_set(subsets: Sequence[SubsetMask]) -> Tuple[Pair, ...]:
    """𝒜 = {(k, s) : s ∉ L_k}"""
    return tuple((k, s) for k, mask in enumerate(subsets) for s in mask.complement_indices)


def build_pair_permutation(subsets: Sequence[SubsetMask]) -> PairPermutation:
    if not subsets:
        raise ValueError("pair permutation needs at least one subset")
    m = len(subsets)
    pairs = pair_set(subsets)
    members = set(pairs)
    images: List[Pair] = []
    for k, s in pairs:
        # l = m 时回到自身，循环必然终止
        for step in range(1, m + 1):
            target = ((k + step) % m, s)
            if target in members:
                images.append(target)
                break
    return PairPermutation(m=m, pairs=pairs, images=tuple(images))


def multiindex_size(pairs: Sequence[Pair], dims: Sequence[int]) -> int:
    return math.prod(dims[s] for _, s in pairs)


def permute_multi_index(index: MultiIndex, permutation: PairPermutation) -> MultiIndex:
    """(𝒫𝔍)(c) = 𝔍(𝒫⁻¹(c))"""
    preimage = permutation.inverse()
    values = dict(zip(index.pairs, index.assignment))
    assignment = tuple(values[preimage[pair]] for pair in index.pairs)
    return MultiIndex(pairs=index.pairs, assignment=assignment, dims=index.dims)


def coefficient_tensors(ops: Sequence[FactorizedOperator]) -> Tuple[np.ndarray, np.ndarray]:
    """α_𝔍 = ∏_k α^k_{J_{L_kᶜ}}，β 同理；基为各因子的计算基"""
    alphas = [op.coefficient_tensor(op.a_vec) for op in ops]
    betas = [op.coefficient_tensor(op.b_vec) for op in ops]
    alpha = reduce(np.multiply.outer, alphas)
    beta = reduce(np.multiply.outer, betas)
    return np.asarray(alpha), np.asarray(beta)


def _check_rank_one(ops: Sequence[FactorizedOperator]) -> Tuple[int, ...]:
    dims = check_family(ops)
    if not all(op.is_rank_one for op in ops):
        raise ValueError("permutation identity needs rank-one parts")
    common = common_identity(ops)
    if not common.is_empty():
        raise ValueError(f"permutation identity needs ∩L = ∅, got factors {common.indices}")
    return dims


def _axes(permutation: PairPermutation) -> List[int]:
    position: Dict[Pair, int] = {pair: a for a, pair in enumerate(permutation.pairs)}
    return [position[permutation.image(pair)] for pair in permutation.pairs]


def cs_sum(ops: Sequence[FactorizedOperator], caps: Optional[CapSettings] = None) -> complex:
    """向量化求 Σ_𝔍 β̄_𝔍 α_{𝒫𝔍}"""
    dims = _check_rank_one(ops)
    permutation = build_pair_permutation([op.identity for op in ops])
    required = multiindex_size(permutation.pairs, dims)
    cap = (settings.caps if caps is None else caps).multiindex
    if required > cap:
        raise MultiIndexCapError(cap=cap, required=required, detail=f"m={len(ops)} dims={dims}")
    alpha, beta = coefficient_tensors(ops)
    permuted = np.transpose(alpha, _axes(permutation))
    return complex(np.sum(beta.conj() * permuted))


def cs_sum_by_enumeration(ops: Sequence[FactorizedOperator]) -> complex:
    """逐个多重指标求和，只用于小实例交叉核对"""
    dims = _check_rank_one(ops)
    permutation = build_pair_permutation([op.identity for op in ops])
    alpha, beta = coefficient_tensors(ops)
    total = 0j
    for index in MultiIndex.enumerate(permutation.pairs, dims):
        moved = permute_multi_index(index, permutation)
        total += np.conj(beta[index.assignment]) * alpha[moved.assignment]
    return complex(total)


def verify_cs_identity(ops: Sequence[FactorizedOperator], caps: Optional[CapSettings] = None) -> CsIdentityReport:
    tol = settings.tolerances
    dims = _check_rank_one(ops)
    permutation = build_pair_permutation([op.identity for op in ops])
    direct = trace_of_product(ops)
    total = cs_sum(ops, caps)
    alpha, beta = coefficient_tensors(ops)
    alpha_norm_sq = float(np.sum(np.abs(alpha) ** 2))
    beta_norm_sq = float(np.sum(np.abs(beta) ** 2))

    deviation = abs(direct - total)
    bijective = permutation.is_bijection() and permutation.preserves_factor()
    cauchy_schwarz = abs(total) <= 1 + tol.cs_identity
    norms_ok = abs(alpha_norm_sq - 1) <= tol.cs_norm and abs(beta_norm_sq - 1) <= tol.cs_norm
    return CsIdentityReport(
        m=len(ops),
        n=len(dims),
        direct_trace=(direct.real, direct.imag),
        cs_sum=(total.real, total.imag),
        deviation=deviation,
        alpha_norm_sq=alpha_norm_sq,
        beta_norm_sq=beta_norm_sq,
        multiindex_size=multiindex_size(permutation.pairs, dims),
        bijective=bijective,
        cauchy_schwarz=cauchy_schwarz,
        passed=deviation <= tol.cs_identity and bijective and cauchy_schwarz and norms_ok,
    )
