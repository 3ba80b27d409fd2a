import math
from functools import reduce
from typing import Iterator, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.common.errors import DimensionMismatchError, InvalidNormOrderError
from app.settings import settings

NormOrderLike = Union["NormOrder", int, float, str]


class NormOrder(BaseModel):
    """Schatten 范数阶 p，取值 p >= 1 或 inf"""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., description="范数阶，inf 表示算子范数")

    @field_validator("value")
    @classmethod
    def _check_range(cls, value: float) -> float:
        if math.isnan(value) or value < 1:
            raise InvalidNormOrderError(f"norm order must be >= 1, got {value}")
        return value

    @classmethod
    def parse(cls, raw: NormOrderLike) -> "NormOrder":
        """从数字、字符串（"inf"/"∞"/"2.5"）或 NormOrder 构造"""
        if isinstance(raw, NormOrder):
            return raw
        if isinstance(raw, str):
            text = raw.strip().lower()
            if text in ("inf", "infinity", "∞", "+inf"):
                return cls(value=math.inf)
            try:
                number = float(text)
            except ValueError as e:
                raise InvalidNormOrderError(f"cannot parse norm order {raw!r}") from e
        else:
            number = float(raw)
        if math.isnan(number) or number < 1:
            raise InvalidNormOrderError(f"norm order must be >= 1, got {raw!r}")
        return cls(value=number)

    @classmethod
    def infinity(cls) -> "NormOrder":
        return cls(value=math.inf)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    @property
    def is_integer(self) -> bool:
        return not self.is_infinite and float(self.value).is_integer()

    @property
    def label(self) -> str:
        if self.is_infinite:
            return "inf"
        if self.is_integer:
            return str(int(self.value))
        return repr(float(self.value))

    def __str__(self) -> str:
        return self.label


class SubsetMask(BaseModel):
    """张量因子的子集 L，成员位 θ_L(i)，因子下标从 0 开始"""

    model_config = ConfigDict(frozen=True)

    dims: Tuple[int, ...]
    members: Tuple[bool, ...]

    @model_validator(mode="after")
    def _check_shape(self) -> "SubsetMask":
        if len(self.dims) != len(self.members):
            raise DimensionMismatchError(
                f"mask has {len(self.members)} bits for {len(self.dims)} factors"
            )
        if any(d < 1 for d in self.dims):
            raise DimensionMismatchError(f"factor dimensions must be >= 1: {self.dims}")
        return self

    @classmethod
    def from_indices(cls, dims: Sequence[int], indices: Sequence[int]) -> "SubsetMask":
        chosen = set(indices)
        if any(i < 0 or i >= len(dims) for i in chosen):
            raise DimensionMismatchError(f"indices {sorted(chosen)} outside 0..{len(dims) - 1}")
        return cls(dims=tuple(dims), members=tuple(i in chosen for i in range(len(dims))))

    @classmethod
    def from_bitmask(cls, dims: Sequence[int], bitmask: int) -> "SubsetMask":
        return cls(
            dims=tuple(dims),
            members=tuple(bool(bitmask >> i & 1) for i in range(len(dims))),
        )

    @classmethod
    def empty(cls, dims: Sequence[int]) -> "SubsetMask":
        return cls.from_bitmask(dims, 0)

    @classmethod
    def full(cls, dims: Sequence[int]) -> "SubsetMask":
        return cls.from_bitmask(dims, (1 << len(dims)) - 1)

    @classmethod
    def all_subsets(cls, dims: Sequence[int]) -> Iterator["SubsetMask"]:
        """按位掩码递增顺序枚举全部 2^n 个子集"""
        for bitmask in range(1 << len(dims)):
            yield cls.from_bitmask(dims, bitmask)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(i for i, bit in enumerate(self.members) if bit)

    @property
    def complement_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, bit in enumerate(self.members) if not bit)

    @property
    def bitmask(self) -> int:
        return sum(1 << i for i, bit in enumerate(self.members) if bit)

    @property
    def dim(self) -> int:
        """d_L，空集为 1"""
        return reduce(lambda acc, i: acc * self.dims[i], self.indices, 1)

    @property
    def complement_dim(self) -> int:
        return reduce(lambda acc, i: acc * self.dims[i], self.complement_indices, 1)

    def theta(self, i: int) -> int:
        return int(self.members[i])

    def is_empty(self) -> bool:
        return not any(self.members)

    def _require_compatible(self, other: "SubsetMask") -> None:
        if self.dims != other.dims:
            raise DimensionMismatchError(f"masks over {self.dims} and {other.dims}")

    def complement(self) -> "SubsetMask":
        return SubsetMask(dims=self.dims, members=tuple(not b for b in self.members))

    def intersection(self, other: "SubsetMask") -> "SubsetMask":
        self._require_compatible(other)
        return SubsetMask(
            dims=self.dims, members=tuple(a and b for a, b in zip(self.members, other.members))
        )

    def union(self, other: "SubsetMask") -> "SubsetMask":
        self._require_compatible(other)
        return SubsetMask(
            dims=self.dims, members=tuple(a or b for a, b in zip(self.members, other.members))
        )

    def __contains__(self, i: object) -> bool:
        return isinstance(i, int) and 0 <= i < self.n and self.members[i]


class _MatrixModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class DensityOperator(_MatrixModel):
    """密度算子：厄米、半正定、单位迹"""

    matrix: np.ndarray
    dims: Tuple[int, ...]

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_complex(cls, value) -> np.ndarray:
        array = np.array(value, dtype=complex)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_state(self) -> "DensityOperator":
        from app.linalg.kernel import check_dims, hermitian_spectrum

        check_dims(self.matrix, self.dims)
        spectrum = hermitian_spectrum(self.matrix)
        tol = settings.tolerances
        if spectrum[-1] < tol.density_eigen:
            raise ValueError(f"density operator has eigenvalue {spectrum[-1]:.3e} < 0")
        trace = float(np.real(np.trace(self.matrix)))
        if abs(trace - 1.0) > tol.density_trace:
            raise ValueError(f"density operator trace {trace!r} differs from 1")
        return self

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


class PureState(_MatrixModel):
    """纯态的单位振幅向量"""

    amplitudes: np.ndarray
    dims: Tuple[int, ...]

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_vector(cls, value) -> np.ndarray:
        array = np.array(value, dtype=complex).reshape(-1)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_state(self) -> "PureState":
        if int(np.prod(self.dims)) != self.amplitudes.shape[0]:
            raise DimensionMismatchError(
                f"{self.amplitudes.shape[0]} amplitudes for factor dims {self.dims}"
            )
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > settings.tolerances.unit_norm:
            raise ValueError(f"pure state norm {norm!r} differs from 1")
        return self

    @classmethod
    def from_vector(cls, vector, dims: Sequence[int] | None = None) -> "PureState":
        """归一化后构造（调用方负责传入非零向量）"""
        array = np.asarray(vector, dtype=complex).reshape(-1)
        array = array / np.linalg.norm(array)
        return cls(amplitudes=array, dims=tuple(dims) if dims else (array.shape[0],))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> DensityOperator:
        return DensityOperator(matrix=self.projector(), dims=self.dims)
