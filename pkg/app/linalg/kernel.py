"""稠密复矩阵内核

约定：多因子空间按行主序排列，最左侧因子是变化最慢的下标。
所有函数都是输入的纯函数，不修改传入数组。
"""

from functools import reduce
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from app.common.errors import DimensionMismatchError, EigenReconstructionError, NotHermitianError
from app.settings import settings

from .schema import NormOrder, NormOrderLike, SubsetMask


def as_square(m) -> np.ndarray:
    """转换为复方阵"""
    array = np.asarray(m, dtype=complex)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {array.shape}")
    return array


def check_dims(m: np.ndarray, dims: Sequence[int]) -> None:
    total = int(np.prod(dims)) if len(dims) else 1
    if m.shape != (total, total):
        raise DimensionMismatchError(f"matrix shape {m.shape} does not match factor dims {tuple(dims)}")


def tensor_product(a, b) -> np.ndarray:
    """a ⊗ b，行主序：(a⊗b)[i·db+k, j·db+l] = a[i,j]·b[k,l]"""
    return np.kron(as_square(a), as_square(b))


def tensor_all(ops: Sequence) -> np.ndarray:
    if not ops:
        return np.ones((1, 1), dtype=complex)
    return reduce(tensor_product, ops)


def partial_trace(m, dims: Sequence[int], traced: SubsetMask) -> np.ndarray:
    """对 traced 中的因子求（未归一化的）偏迹，结果作用在补集上"""
    matrix = as_square(m)
    check_dims(matrix, dims)
    if traced.n != len(dims) or tuple(dims) != traced.dims:
        raise DimensionMismatchError(f"mask over {traced.dims} used with dims {tuple(dims)}")

    n = len(dims)
    tensor = matrix.reshape(tuple(dims) * 2)
    rows = list(range(n))
    cols = [n + i if i not in traced else i for i in range(n)]
    kept = traced.complement_indices
    out = [rows[i] for i in kept] + [cols[i] for i in kept]
    reduced = np.einsum(tensor, rows + cols, out)
    d_kept = traced.complement_dim
    return np.asarray(reduced).reshape(d_kept, d_kept)


def embed_operator(b, dims: Sequence[int], identity: SubsetMask) -> np.ndarray:
    """构造 B ⊗ I_L，并把各因子放回原始位置；B 作用在 L 的补集（按因子顺序）上"""
    part = as_square(b)
    if identity.dims != tuple(dims):
        raise DimensionMismatchError(f"mask over {identity.dims} used with dims {tuple(dims)}")
    if part.shape[0] != identity.complement_dim:
        raise DimensionMismatchError(
            f"operator of dim {part.shape[0]} cannot act on factors {identity.complement_indices}"
        )

    order = list(identity.complement_indices) + list(identity.indices)
    full = np.kron(part, np.eye(identity.dim, dtype=complex))
    n = len(dims)
    if order == list(range(n)):
        return full
    ordered_dims = [dims[i] for i in order]
    tensor = full.reshape(ordered_dims * 2)
    position = [order.index(i) for i in range(n)]
    tensor = np.transpose(tensor, position + [n + j for j in position])
    total = int(np.prod(dims))
    return tensor.reshape(total, total)


def hermitian_residual(m) -> float:
    matrix = as_square(m)
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def is_hermitian(m, rel_tol: Optional[float] = None) -> bool:
    matrix = as_square(m)
    tol = settings.tolerances.hermitian_rel if rel_tol is None else rel_tol
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    return hermitian_residual(matrix) <= tol * scale


def require_hermitian(m, rel_tol: Optional[float] = None) -> np.ndarray:
    """检查厄米性并返回对称化后的矩阵"""
    matrix = as_square(m)
    if not is_hermitian(matrix, rel_tol):
        raise NotHermitianError(
            f"matrix is not Hermitian: residual {hermitian_residual(matrix):.3e}"
        )
    return (matrix + matrix.conj().T) / 2


def hermitian_eigh(m) -> Tuple[np.ndarray, np.ndarray]:
    """特征值降序排列及对应的列特征向量"""
    matrix = require_hermitian(m)
    values, vectors = scipy.linalg.eigh(matrix)
    values, vectors = values[::-1], vectors[:, ::-1]
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    rebuilt = (vectors * values) @ vectors.conj().T
    residual = float(np.max(np.abs(rebuilt - matrix))) if matrix.size else 0.0
    if residual > settings.tolerances.eigen_reconstruction_rel * scale:
        raise EigenReconstructionError(
            f"eigendecomposition does not reconstruct the input: residual {residual:.3e}"
        )
    return values, vectors


def hermitian_spectrum(m) -> np.ndarray:
    matrix = require_hermitian(m)
    return scipy.linalg.eigvalsh(matrix)[::-1]


def schatten_norm(m, p: NormOrderLike) -> float:
    """(Σ|λ_i|^p)^{1/p}，p = inf 时为 max|λ_i|"""
    order = NormOrder.parse(p)
    magnitudes = np.abs(hermitian_spectrum(m))
    top = float(magnitudes.max()) if magnitudes.size else 0.0
    if order.is_infinite or top == 0.0:
        return top
    # 先按最大值缩放，避免大 p 时下溢
    scaled = magnitudes / top
    return top * float(np.sum(scaled**order.value)) ** (1.0 / order.value)


def operator_norm(m) -> float:
    """最大奇异值；不要求厄米，用于残差这类只含舍入噪声的矩阵"""
    matrix = as_square(m)
    return float(np.linalg.norm(matrix, 2)) if matrix.size else 0.0


def psd_power(m, exponent: float) -> np.ndarray:
    """半正定矩阵的非负实数次幂，负的数值噪声特征值截断为 0"""
    if exponent < 0:
        raise ValueError(f"exponent must be non-negative, got {exponent}")
    values, vectors = hermitian_eigh(m)
    powered = np.clip(values, 0.0, None) ** exponent
    return (vectors * powered) @ vectors.conj().T


def principal_eigenvector(m, degeneracy_tol: float = 1e-12) -> Tuple[float, np.ndarray]:
    """最大特征值对应的特征向量

    顶部特征值简并时取绝对值模式字典序最大的向量，再固定全局相位使首个非零分量为正实数。
    """
    values, vectors = hermitian_eigh(m)
    top = float(values[0])
    window = degeneracy_tol * max(1.0, abs(top))
    candidates = [vectors[:, i] for i in range(len(values)) if values[i] >= top - window]
    if len(candidates) > 1:
        candidates.sort(key=lambda v: tuple(np.round(np.abs(v), 10)), reverse=True)
    vector = candidates[0]
    return top, fix_phase(vector)


def fix_phase(vector: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    nonzero = np.flatnonzero(np.abs(vector) > eps)
    if nonzero.size == 0:
        return vector
    lead = vector[nonzero[0]]
    return vector * (abs(lead) / lead)
