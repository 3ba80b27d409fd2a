"""带种子的随机实例：实例 i 只依赖 (seed, stream, i)"""

from typing import List, Sequence, Tuple

import numpy as np

from app.linalg.sampling import crandn, haar_vector, stream_rng
from app.linalg.schema import SubsetMask

from .schema import FactorizedOperator, LemmaInstance

TRACE_BOUND_STREAM = 101
CS_STREAM = 102

# 拒绝采样上限，∩L = ∅ 的概率远高于 1/64
MAX_DRAWS = 64


def _random_dims(rng: np.random.Generator, n: int, dim_choices: Sequence[int]) -> Tuple[int, ...]:
    return tuple(int(rng.choice(dim_choices)) for _ in range(n))


def _random_nonempty_subset(rng: np.random.Generator, dims: Tuple[int, ...]) -> SubsetMask:
    n = len(dims)
    bitmask = int(rng.integers(1, 2**n))
    return SubsetMask.from_bitmask(dims, bitmask)


def _build(
    rng: np.random.Generator, dims: Tuple[int, ...], subsets: List[SubsetMask], rank_one: List[bool]
) -> List[FactorizedOperator]:
    ops = []
    for mask, is_rank_one in zip(subsets, rank_one):
        size = mask.complement_dim
        if is_rank_one:
            ops.append(FactorizedOperator.rank_one(dims, mask, haar_vector(size, rng), haar_vector(size, rng)))
        else:
            ops.append(FactorizedOperator.general(dims, mask, crandn(rng, size, size)))
    return ops


def _describe(index: int, seed: int, stream: int, dims, subsets, rank_one) -> LemmaInstance:
    return LemmaInstance(
        index=index,
        seed=seed,
        stream=stream,
        dims=list(dims),
        identity_sets=[list(mask.indices) for mask in subsets],
        rank_one=list(rank_one),
    )


def random_factorized_instance(
    seed: int,
    index: int,
    m_max: int = 4,
    n_max: int = 4,
    dim_choices: Sequence[int] = (2, 3),
) -> Tuple[List[FactorizedOperator], LemmaInstance]:
    """迹界实例：m、n 均匀取自 1..max，秩一与一般 B_k 混合"""
    rng = stream_rng(seed, TRACE_BOUND_STREAM, index)
    m = int(rng.integers(1, m_max + 1))
    n = int(rng.integers(1, n_max + 1))
    dims = _random_dims(rng, n, dim_choices)
    subsets = [_random_nonempty_subset(rng, dims) for _ in range(m)]
    rank_one = [bool(rng.integers(0, 2)) for _ in range(m)]
    ops = _build(rng, dims, subsets, rank_one)
    return ops, _describe(index, seed, TRACE_BOUND_STREAM, dims, subsets, rank_one)


def random_cs_instance(
    seed: int,
    index: int,
    m_max: int = 3,
    n_max: int = 3,
    dim_choices: Sequence[int] = (2, 3),
) -> Tuple[List[FactorizedOperator], LemmaInstance]:
    """置换恒等式实例：全部秩一，∩L = ∅（需要 m >= 2、n >= 2）"""
    if m_max < 2 or n_max < 2:
        raise ValueError(f"∩L = ∅ with nonempty L_k needs m_max, n_max >= 2, got {m_max}, {n_max}")
    rng = stream_rng(seed, CS_STREAM, index)
    m = int(rng.integers(2, m_max + 1))
    n = int(rng.integers(2, n_max + 1))
    dims = _random_dims(rng, n, dim_choices)
    subsets: List[SubsetMask] = []
    for _ in range(MAX_DRAWS):
        subsets = [_random_nonempty_subset(rng, dims) for _ in range(m)]
        common = subsets[0]
        for mask in subsets[1:]:
            common = common.intersection(mask)
        if common.is_empty():
            break
    else:
        # 兜底：L_k 取单点集 {k mod n}，交集必为空
        subsets = [SubsetMask.from_indices(dims, [k % n]) for k in range(m)]
    rank_one = [True] * m
    ops = _build(rng, dims, subsets, rank_one)
    return ops, _describe(index, seed, CS_STREAM, dims, subsets, rank_one)


def replay(instance: LemmaInstance, **limits) -> List[FactorizedOperator]:
    """按报告中的描述重建实例"""
    generator = random_cs_instance if instance.stream == CS_STREAM else random_factorized_instance
    ops, _ = generator(instance.seed, instance.index, **limits)
    return ops
