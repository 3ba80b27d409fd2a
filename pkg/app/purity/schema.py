from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_serializer

from app.linalg.schema import NormOrder, PureState

__all__ = [
    "ClosedFormValue",
    "MultiplicativityReport",
    "NormOrder",
    "PurityReport",
    "Verdict",
]

Verdict = Literal["consistent", "violation candidate", "inconclusive"]


class ClosedFormValue(BaseModel):
    """去极化乘积的 ν_p 闭式值；非整数 p 时仅为猜想"""

    value: float = Field(..., ge=0)
    p: str
    regime: Literal["proven", "conjectural"]


class PurityReport(BaseModel):
    """ν_p 计算结果

    nu_p 总是在 maximizer 上重新计算的输出范数，因而是真实 ν_p 的下界。
    """

    channel: str
    p: str
    nu_p: float = Field(..., ge=0)
    maximizer: PureState
    restarts: int = Field(..., description="实际使用的起点数（含热启动）")
    best_restart: int
    iterations: List[int] = Field(default_factory=list, description="每个起点的迭代次数")
    converged: bool
    monotone: bool = True
    short_circuit: bool = False
    closed_form: Optional[float] = None
    closed_form_regime: Optional[str] = None
    history: List[float] = Field(default_factory=list, exclude=True, description="最佳起点的目标值序列")

    @field_serializer("maximizer")
    def _serialize_state(self, state: PureState) -> dict:
        return {
            "dims": list(state.dims),
            "amplitudes": [[float(z.real), float(z.imag)] for z in state.amplitudes],
        }


class MultiplicativityReport(BaseModel):
    """ν_p(Φ_1⊗...⊗Φ_n) 与 ∏ν_p(Φ_i) 的比较"""

    factors: List[str]
    p: str
    lhs: float = Field(..., description="乘积信道上的优化值")
    rhs: float = Field(..., description="各因子优化值之积")
    gap: float
    factor_values: List[float]
    verdict: Verdict
    reverified: bool = False
    restarts: int
    tol: float
    closed_form: Optional[float] = None
