import itertools
from functools import reduce
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.common.errors import DimensionMismatchError, ExpansionCapError
from app.linalg.kernel import as_square, embed_operator, partial_trace
from app.linalg.schema import SubsetMask
from app.settings import CapSettings, settings

from .schema import DepolarizingForm, KrausForm, LeafChannel, QuantumChannel


def identity_channel(d: int) -> KrausForm:
    return KrausForm(kraus_ops=(np.eye(d, dtype=complex),), label="identity")


def weyl_operators(d: int) -> List[Tuple[Tuple[int, int], np.ndarray]]:
    """离散 Weyl（广义 Pauli）算子 W_jk = X^j Z^k，按 (j, k) 字典序"""
    shift = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    ops = []
    for j, k in itertools.product(range(d), repeat=2):
        ops.append(((j, k), np.linalg.matrix_power(shift, j) @ np.linalg.matrix_power(clock, k)))
    return ops


def kraus_of_depolarizing(d: int, q: float) -> List[np.ndarray]:
    """√(1−q(d²−1)/d²)·I 与 √(q/d²)·W_jk，(j,k)≠(0,0)；权重为零的项省略"""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"mixing parameter must lie in [0, 1], got {q}")
    identity_weight = 1.0 - q * (d * d - 1) / (d * d)
    other_weight = q / (d * d)
    ops = []
    for (j, k), w in weyl_operators(d):
        weight = identity_weight if (j, k) == (0, 0) else other_weight
        if weight > 0:
            ops.append(np.sqrt(weight) * w)
    return ops


def to_kraus(channel: QuantumChannel) -> List[np.ndarray]:
    """任意表示转换为 Kraus 列表；乘积取各因子 Kraus 的全部 Kronecker 组合"""
    if isinstance(channel, KrausForm):
        return [np.array(op) for op in channel.kraus_ops]
    if isinstance(channel, DepolarizingForm):
        return kraus_of_depolarizing(channel.d, channel.q)
    factor_ops = [to_kraus(leaf) for leaf in channel.leaves()]
    return [reduce(np.kron, combo) for combo in itertools.product(*factor_ops)]


def _check_input(channel: QuantumChannel, s) -> np.ndarray:
    matrix = as_square(s)
    if matrix.shape[0] != channel.dim:
        raise DimensionMismatchError(
            f"input of dim {matrix.shape[0]} for channel of dim {channel.dim}"
        )
    return matrix


def _kraus_sum(ops: Sequence[np.ndarray], s: np.ndarray, adjoint: bool) -> np.ndarray:
    if adjoint:
        return sum(op.conj().T @ s @ op for op in ops)
    return sum(op @ s @ op.conj().T for op in ops)


def _depolarize(s: np.ndarray, q: float) -> np.ndarray:
    d = s.shape[0]
    return (1 - q) * s + (q / d) * np.trace(s) * np.eye(d, dtype=complex)


def _apply_kraus_local(
    s: np.ndarray, dims: Sequence[int], position: int, ops: Sequence[np.ndarray], adjoint: bool
) -> np.ndarray:
    """在第 position 个因子上作用局部 Kraus 映射，其余因子保持不变"""
    n = len(dims)
    tensor = s.reshape(tuple(dims) * 2)
    out = np.zeros_like(tensor)
    for op in ops:
        k = op.conj().T if adjoint else op
        left = np.moveaxis(np.tensordot(k, tensor, axes=([1], [position])), 0, position)
        both = np.tensordot(left, k.conj(), axes=([n + position], [1]))
        out += np.moveaxis(both, -1, n + position)
    return out.reshape(s.shape)


def _apply_leaf_local(
    s: np.ndarray, dims: Sequence[int], position: int, leaf: LeafChannel, adjoint: bool
) -> np.ndarray:
    if isinstance(leaf, DepolarizingForm):
        mask = SubsetMask.from_indices(dims, [position])
        return (1 - leaf.q) * s + leaf.q * conditional_expectation(s, dims, mask)
    return _apply_kraus_local(s, dims, position, leaf.kraus_ops, adjoint)


def _apply(channel: QuantumChannel, s, adjoint: bool) -> np.ndarray:
    matrix = _check_input(channel, s)
    if isinstance(channel, DepolarizingForm):
        # 去极化信道自伴
        return _depolarize(matrix, channel.q)
    if isinstance(channel, KrausForm):
        return _kraus_sum(channel.kraus_ops, matrix, adjoint)
    dims = channel.dims
    for position, leaf in enumerate(channel.leaves()):
        matrix = _apply_leaf_local(matrix, dims, position, leaf, adjoint)
    return matrix


def apply(channel: QuantumChannel, s) -> np.ndarray:
    """Φ(S)；S 通常是厄米算子（不要求半正定）"""
    return _apply(channel, s, adjoint=False)


def adjoint_apply(channel: QuantumChannel, s) -> np.ndarray:
    """Φ*(S) = Σ A_k† S A_k"""
    return _apply(channel, s, adjoint=True)


def pure_output_spectrum(d: int, q: float) -> np.ndarray:
    """纯态输入时去极化输出的谱：单重特征值 1−(d−1)q/d 与 d−1 个 q/d（降序）"""
    return np.array([1 - (d - 1) * q / d] + [q / d] * (d - 1))


def conditional_expectation(s, dims: Sequence[int], subset: SubsetMask) -> np.ndarray:
    """ε_L(A) = Tr_L(A) ⊗ I_L/d_L，单位算子放回 L 的原始位置"""
    reduced = partial_trace(s, dims, subset)
    return embed_operator(reduced, dims, subset) / subset.dim


def expansion_coefficients(factors: Sequence[DepolarizingForm]) -> List[Tuple[SubsetMask, float]]:
    """按位掩码递增顺序列出 (L, ∏ q_i^θ (1−q_i)^{1−θ})"""
    dims = [f.d for f in factors]
    coefficients = []
    for subset in SubsetMask.all_subsets(dims):
        weight = 1.0
        for i, factor in enumerate(factors):
            weight *= factor.q if subset.theta(i) else 1 - factor.q
        coefficients.append((subset, weight))
    return coefficients


def _check_expansion_cap(n: int, caps: Optional[CapSettings]) -> None:
    cap = (settings.caps if caps is None else caps).expansion_factors
    if n > cap:
        raise ExpansionCapError(cap=cap, required=n, detail=f"2^{n} subsets")


def expansion_apply(factors: Sequence[DepolarizingForm], s, caps: Optional[CapSettings] = None) -> np.ndarray:
    """Φ = Σ_L ∏ q_i^θ (1−q_i)^{1−θ} ε_L，对全部 2^n 个子集求和"""
    _check_expansion_cap(len(factors), caps)
    dims = [f.d for f in factors]
    matrix = as_square(s)
    total = int(np.prod(dims))
    if matrix.shape[0] != total:
        raise DimensionMismatchError(f"input of dim {matrix.shape[0]} for factor dims {tuple(dims)}")
    result = np.zeros_like(matrix)
    for subset, weight in expansion_coefficients(factors):
        if weight:
            result += weight * conditional_expectation(matrix, dims, subset)
    return result
