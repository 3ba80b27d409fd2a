import itertools
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.common.errors import DimensionMismatchError
from app.linalg.kernel import embed_operator, hermitian_spectrum
from app.linalg.schema import SubsetMask
from app.settings import settings

Pair = Tuple[int, int]
ComplexPair = Tuple[float, float]


class FactorizedOperator(BaseModel):
    """A = B ⊗ I_L，B 作用在 L 的补集上（因子位置保持原顺序）"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dims: Tuple[int, ...]
    identity: SubsetMask = Field(..., description="单位算子所在的因子集合 L")
    b: np.ndarray
    a_vec: Optional[np.ndarray] = None
    b_vec: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _check(self) -> "FactorizedOperator":
        if self.identity.dims != self.dims:
            raise DimensionMismatchError(f"mask over {self.identity.dims} for dims {self.dims}")
        size = self.identity.complement_dim
        if self.b.shape != (size, size):
            raise DimensionMismatchError(
                f"B must be {size}x{size} on factors {self.identity.complement_indices}, got {self.b.shape}"
            )
        if (self.a_vec is None) != (self.b_vec is None):
            raise ValueError("rank-one form needs both a_vec and b_vec")
        if self.a_vec is not None:
            tol = settings.tolerances.unit_norm
            for name, vec in (("a_vec", self.a_vec), ("b_vec", self.b_vec)):
                if vec.shape != (size,):
                    raise DimensionMismatchError(f"{name} must have length {size}, got {vec.shape}")
                if abs(np.linalg.norm(vec) - 1.0) > tol:
                    raise ValueError(f"{name} is not a unit vector")
        return self

    @classmethod
    def rank_one(cls, dims: Sequence[int], identity: SubsetMask, a_vec, b_vec) -> "FactorizedOperator":
        """B = |a⟩⟨b|"""
        a = np.asarray(a_vec, dtype=complex).reshape(-1)
        b = np.asarray(b_vec, dtype=complex).reshape(-1)
        return cls(dims=tuple(dims), identity=identity, b=np.outer(a, b.conj()), a_vec=a, b_vec=b)

    @classmethod
    def general(cls, dims: Sequence[int], identity: SubsetMask, b) -> "FactorizedOperator":
        return cls(dims=tuple(dims), identity=identity, b=np.asarray(b, dtype=complex))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def is_rank_one(self) -> bool:
        return self.a_vec is not None

    def full(self) -> np.ndarray:
        return embed_operator(self.b, self.dims, self.identity)

    def trace_norm(self) -> float:
        """‖B‖_1：秩一时为 ‖a‖·‖b‖，否则取厄米化 [[0,B],[B†,0]] 谱绝对值之和的一半"""
        if self.is_rank_one:
            return float(np.linalg.norm(self.a_vec) * np.linalg.norm(self.b_vec))
        size = self.b.shape[0]
        zero = np.zeros((size, size), dtype=complex)
        hermitized = np.block([[zero, self.b], [self.b.conj().T, zero]])
        return float(np.sum(np.abs(hermitian_spectrum(hermitized))) / 2)

    def coefficient_tensor(self, vector: np.ndarray) -> np.ndarray:
        """向量在计算基下的分量，按补集因子展开成张量"""
        shape = tuple(self.dims[s] for s in self.identity.complement_indices)
        return np.asarray(vector).reshape(shape)


class MultiIndex(BaseModel):
    """对 𝒜 中每个 (k, s) 指定基下标 j(k, s)"""

    model_config = ConfigDict(frozen=True)

    pairs: Tuple[Pair, ...]
    assignment: Tuple[int, ...]
    dims: Tuple[int, ...]

    @model_validator(mode="after")
    def _check(self) -> "MultiIndex":
        if len(self.pairs) != len(self.assignment):
            raise DimensionMismatchError(
                f"{len(self.assignment)} indices for {len(self.pairs)} pairs"
            )
        for (k, s), j in zip(self.pairs, self.assignment):
            if not 0 <= j < self.dims[s]:
                raise ValueError(f"index {j} for pair ({k}, {s}) outside 0..{self.dims[s] - 1}")
        return self

    @classmethod
    def enumerate(cls, pairs: Sequence[Pair], dims: Sequence[int]) -> Iterator["MultiIndex"]:
        ranges = [range(dims[s]) for _, s in pairs]
        for assignment in itertools.product(*ranges):
            yield cls(pairs=tuple(pairs), assignment=assignment, dims=tuple(dims))

    def value(self, pair: Pair) -> int:
        return self.assignment[self.pairs.index(pair)]


class PairPermutation(BaseModel):
    """𝒜 上的映射 (k, s) → (k ⊞ l, s)，l 为使像仍在 𝒜 中的最小正整数（模 m）"""

    model_config = ConfigDict(frozen=True)

    m: int
    pairs: Tuple[Pair, ...]
    images: Tuple[Pair, ...]

    @property
    def mapping(self) -> Dict[Pair, Pair]:
        return dict(zip(self.pairs, self.images))

    def image(self, pair: Pair) -> Pair:
        return self.mapping[pair]

    def inverse(self) -> Dict[Pair, Pair]:
        return {image: pair for pair, image in zip(self.pairs, self.images)}

    def is_bijection(self) -> bool:
        return len(set(self.images)) == len(self.pairs) and set(self.images) == set(self.pairs)

    def preserves_factor(self) -> bool:
        return all(p[1] == i[1] for p, i in zip(self.pairs, self.images))


class LemmaInstance(BaseModel):
    """可复现实例的描述：种子与实例编号即可重放"""

    index: int
    seed: int
    stream: int
    dims: List[int]
    identity_sets: List[List[int]]
    rank_one: List[bool]


class TraceBoundReport(BaseModel):
    """|Tr A_1…A_m| <= d_{∩L} ∏‖B_k‖_1"""

    m: int
    n: int
    lhs: float
    rhs: float
    common_dim: int
    passed: bool
    instance: Optional[LemmaInstance] = None


class CsIdentityReport(BaseModel):
    """Tr A_1…A_m = Σ_𝔍 β̄_𝔍 α_{𝒫𝔍} 的数值核对"""

    m: int
    n: int
    direct_trace: ComplexPair
    cs_sum: ComplexPair
    deviation: float
    alpha_norm_sq: float
    beta_norm_sq: float
    multiindex_size: int
    bijective: bool
    cauchy_schwarz: bool
    passed: bool
    instance: Optional[LemmaInstance] = None
