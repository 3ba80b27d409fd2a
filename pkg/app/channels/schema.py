from functools import reduce
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.common.errors import DimensionMismatchError


class _ChannelModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class KrausForm(_ChannelModel):
    """Kraus 表示 Φ(S) = Σ A_k S A_k†"""

    kind: Literal["kraus"] = "kraus"
    kraus_ops: Tuple[np.ndarray, ...] = Field(..., min_length=1)
    label: Optional[str] = None

    @field_validator("kraus_ops", mode="before")
    @classmethod
    def _as_matrices(cls, value) -> Tuple[np.ndarray, ...]:
        ops = []
        for op in value:
            array = np.array(op, dtype=complex)
            array.setflags(write=False)
            ops.append(array)
        return tuple(ops)

    @model_validator(mode="after")
    def _check_shapes(self) -> "KrausForm":
        shape = self.kraus_ops[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise DimensionMismatchError(f"Kraus operators must be square, got {shape}")
        for op in self.kraus_ops:
            if op.shape != shape:
                raise DimensionMismatchError(f"Kraus operators disagree: {op.shape} vs {shape}")
        return self

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    @property
    def dims(self) -> Tuple[int, ...]:
        return (self.dim,)

    def leaves(self) -> List["LeafChannel"]:
        return [self]

    def describe(self) -> str:
        name = self.label or "kraus"
        return f"{name}(d={self.dim},ops={len(self.kraus_ops)})"


class DepolarizingForm(_ChannelModel):
    """去极化信道 Φ(S) = (1−q)S + (q/d)Tr(S)I"""

    kind: Literal["depolarizing"] = "depolarizing"
    d: int = Field(..., ge=1, description="维度")
    q: float = Field(..., ge=0.0, le=1.0, description="混合参数")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def dims(self) -> Tuple[int, ...]:
        return (self.d,)

    @property
    def boundary(self) -> bool:
        """q 取端点 0 或 1（定理要求开区间）"""
        return self.q in (0.0, 1.0)

    def leaves(self) -> List["LeafChannel"]:
        return [self]

    def describe(self) -> str:
        return f"depolarizing(d={self.d},q={self.q!r})"


class ProductForm(_ChannelModel):
    """信道的张量积 Φ_1 ⊗ ... ⊗ Φ_n"""

    kind: Literal["product"] = "product"
    factors: Tuple["QuantumChannel", ...] = Field(..., min_length=1)

    def leaves(self) -> List["LeafChannel"]:
        """展开嵌套乘积，每个叶子占据一个张量因子"""
        return [leaf for factor in self.factors for leaf in factor.leaves()]

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(leaf.dim for leaf in self.leaves())

    @property
    def dim(self) -> int:
        return reduce(lambda acc, d: acc * d, self.dims, 1)

    def describe(self) -> str:
        return " ⊗ ".join(factor.describe() for factor in self.factors)


LeafChannel = Union[KrausForm, DepolarizingForm]
QuantumChannel = Annotated[
    Union[KrausForm, DepolarizingForm, ProductForm], Field(discriminator="kind")
]
ProductForm.model_rebuild()


def is_depolarizing_product(channel: "QuantumChannel") -> bool:
    return all(isinstance(leaf, DepolarizingForm) for leaf in channel.leaves())


class ChoiMatrix(_ChannelModel):
    """Choi 矩阵 (Φ⊗id)(|Ω⟩⟨Ω|)，输出因子在前"""

    matrix: np.ndarray
    dim: int = Field(..., ge=1)

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_complex(cls, value) -> np.ndarray:
        array = np.array(value, dtype=complex)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_shape(self) -> "ChoiMatrix":
        size = self.dim * self.dim
        if self.matrix.shape != (size, size):
            raise DimensionMismatchError(
                f"Choi matrix of a dim-{self.dim} map must be {size}x{size}, got {self.matrix.shape}"
            )
        return self


class ValidityReport(BaseModel):
    """CPTP 校验结果"""

    channel: str
    dim: int
    trace_residual: float = Field(..., description="‖Σ A_k†A_k − I‖_∞")
    min_choi_eigenvalue: float
    trace_preserving: bool
    completely_positive: bool
    passed: bool
    warnings: List[str] = Field(default_factory=list)
