"""带种子的随机采样：Haar 纯态、随机厄米矩阵、随机等距"""

from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import unitary_group

from .schema import PureState

SeedLike = Union[int, Sequence[int], np.random.Generator, None]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def crandn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """标准复高斯样本"""
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)


def haar_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    vector = crandn(rng, d)
    return vector / np.linalg.norm(vector)


def sample_haar_state(d: int, seed: SeedLike, dims: Optional[Sequence[int]] = None) -> PureState:
    """复高斯向量归一化即得 Haar 分布的纯态，同一种子结果相同"""
    vector = haar_vector(d, make_rng(seed))
    return PureState(amplitudes=vector, dims=tuple(dims) if dims else (d,))


def random_hermitian(d: int, seed: SeedLike) -> np.ndarray:
    matrix = crandn(make_rng(seed), d, d)
    return (matrix + matrix.conj().T) / 2


def random_matrix(d: int, seed: SeedLike) -> np.ndarray:
    return crandn(make_rng(seed), d, d)


def random_isometry(rows: int, cols: int, seed: SeedLike) -> np.ndarray:
    """Haar 随机酉矩阵的前 cols 列"""
    if cols > rows:
        raise ValueError(f"isometry needs rows >= cols, got {rows}x{cols}")
    if rows == 1:
        return np.ones((1, 1), dtype=complex)
    unitary = unitary_group.rvs(rows, random_state=make_rng(seed))
    return np.asarray(unitary[:, :cols], dtype=complex)


def stream_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """(seed, stream, index) 派生的独立随机流，结果与执行顺序无关"""
    return np.random.default_rng([seed, stream, index])
