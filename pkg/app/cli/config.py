"""运行配置：YAML 文件 + 命令行覆盖 → RunConfig

复数一律写成 [re, im]，范数阶 ∞ 写成 "inf"。
"""

from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.channels.schema import ChoiMatrix, DepolarizingForm, KrausForm, ProductForm, QuantumChannel
from app.common.errors import ConfigError, NuPurityError
from app.linalg.schema import NormOrder
from app.settings import CapSettings, settings

ComplexEntry = Tuple[float, float]
ComplexRows = List[List[ComplexEntry]]


def complex_matrix(rows: ComplexRows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def complex_rows(matrix: np.ndarray) -> ComplexRows:
    return [[(float(z.real), float(z.imag)) for z in row] for row in np.asarray(matrix)]


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DepolarizingSpec(_Spec):
    kind: Literal["depolarizing"]
    dim: int = Field(..., ge=2)
    q: float = Field(..., ge=0.0, le=1.0)

    def to_channel(self) -> DepolarizingForm:
        return DepolarizingForm(d=self.dim, q=self.q)


class KrausSpec(_Spec):
    kind: Literal["kraus"]
    matrices: List[ComplexRows] = Field(..., min_length=1)
    label: Optional[str] = None

    @model_validator(mode="after")
    def _check_square(self) -> "KrausSpec":
        for index, rows in enumerate(self.matrices):
            size = len(rows)
            if size < 2 or any(len(row) != size for row in rows):
                raise ValueError(f"matrices[{index}] must be square with dim >= 2")
        return self

    def to_channel(self) -> KrausForm:
        return KrausForm(kraus_ops=[complex_matrix(m) for m in self.matrices], label=self.label)


class ProductSpec(_Spec):
    kind: Literal["product"]
    factors: List["ChannelSpec"] = Field(..., min_length=1)

    def to_channel(self) -> ProductForm:
        return ProductForm(factors=tuple(f.to_channel() for f in self.factors))


ChannelSpec = Annotated[Union[DepolarizingSpec, KrausSpec, ProductSpec], Field(discriminator="kind")]
ProductSpec.model_rebuild()


class ChoiSpec(_Spec):
    """直接给出 Choi 矩阵（输出因子在前）"""

    dim: int = Field(..., ge=2)
    matrix: ComplexRows

    def to_choi(self) -> ChoiMatrix:
        return ChoiMatrix(matrix=complex_matrix(self.matrix), dim=self.dim)


class LemmaConfig(_Spec):
    trace_bound_instances: int = Field(default=1000, ge=1)
    cs_instances: int = Field(default=200, ge=1)
    m_max: int = Field(default=4, ge=1)
    n_max: int = Field(default=4, ge=1)
    cs_m_max: int = Field(default=3, ge=2)
    cs_n_max: int = Field(default=3, ge=2)
    dims: List[int] = Field(default_factory=lambda: [2, 3], min_length=1)

    @field_validator("dims")
    @classmethod
    def _check_dims(cls, value: List[int]) -> List[int]:
        if any(d < 2 for d in value):
            raise ValueError("factor dimensions must be >= 2")
        return value


class SearchConfig(_Spec):
    samples: int = Field(default=8, ge=1)
    family: Literal["kraus", "depolarizing"] = "kraus"
    dim: int = Field(default=2, ge=2)
    rank: int = Field(default=2, ge=1)
    factors: int = Field(default=2, ge=1)
    threshold: float = Field(default=1e-7, gt=0)


class CapsConfig(_Spec):
    product_dim: Optional[int] = Field(default=None, ge=1)
    expansion_factors: Optional[int] = Field(default=None, ge=1)
    multiindex: Optional[int] = Field(default=None, ge=1)

    def resolve(self) -> CapSettings:
        """未给出的上限取全局默认值，返回新的 CapSettings"""
        return settings.caps.model_copy(update=self.model_dump(exclude_none=True))


class RunConfig(_Spec):
    """一次运行的完整配置；解析后 seed 必定存在"""

    channel: Optional[ChannelSpec] = None
    factors: Optional[List[ChannelSpec]] = Field(default=None, min_length=1)
    choi: Optional[ChoiSpec] = None
    p: List[str] = Field(default_factory=lambda: ["2"], min_length=1)
    q: List[str] = Field(default_factory=list)
    restarts: int = Field(default_factory=lambda: settings.optimizer.restarts, ge=1)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, lt=2**64)
    tol: Optional[float] = Field(default=None, gt=0)
    lemma: LemmaConfig = Field(default_factory=LemmaConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)
    caps: CapsConfig = Field(default_factory=CapsConfig)
    out: Optional[str] = None
    format: Literal["json", "csv"] = "json"
    include_timings: bool = False

    @field_validator("p", "q", mode="before")
    @classmethod
    def _norm_labels(cls, value: Any) -> List[str]:
        if isinstance(value, (str, int, float)):
            value = [value]
        # NormOrder.parse 抛出的 ValueError 由 pydantic 转成字段错误
        return [NormOrder.parse(raw).label for raw in value]

    def channels(self) -> List[QuantumChannel]:
        """check-mult / nu 的信道列表：factors 优先，其次单个 channel"""
        if self.factors:
            return [spec.to_channel() for spec in self.factors]
        if self.channel is not None:
            return [self.channel.to_channel()]
        return []


def _location(loc: Tuple[Union[int, str], ...]) -> str:
    return ".".join(str(part) for part in loc)


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", location=str(path)) from e
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"malformed YAML: {getattr(e, 'problem', e)}", location=where) from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", location=str(path))
    return data


def build_config(data: Dict[str, Any], source: str = "<config>") -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = f"{source}:{_location(first['loc'])}" if first["loc"] else source
        raise ConfigError(first["msg"], location=location) from e


def load_config(path: Optional[Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """命令行参数 > 配置文件 > settings 默认值"""
    data: Dict[str, Any] = _read_yaml(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    source = str(path) if path is not None else "<flags>"
    config = build_config(data, source)
    try:
        # 提前构造信道，维度错误在此暴露
        config.channels()
        if config.choi is not None:
            config.choi.to_choi()
    except (ValidationError, NuPurityError, ValueError) as e:
        raise ConfigError(str(e).splitlines()[0], location=f"{source}:channel") from e
    return config
