from typing import Any, Optional


class NuPurityError(Exception):
    """所有业务错误的基类"""


class DimensionMismatchError(NuPurityError, ValueError):
    """矩阵维度与因子维度不一致"""


class NotHermitianError(NuPurityError, ValueError):
    """输入超出厄米容差"""


class InvalidNormOrderError(NuPurityError, ValueError):
    """范数阶 p < 1 或无法解析"""


class ZeroInputError(NuPurityError, ValueError):
    """比值的分母算子为零"""


class NormRegimeError(NuPurityError, ValueError):
    """q→p 估计要求 1 <= q <= p"""


class EigenReconstructionError(NuPurityError, ArithmeticError):
    """特征分解无法在容差内重建输入"""


class CapExceededError(NuPurityError):
    """计算规模超过配置上限"""

    cap_name = "cap"

    def __init__(self, cap: int, required: int, detail: str = ""):
        self.cap = cap
        self.required = required
        message = f"{self.cap_name} exceeded: required {required}, cap {cap}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class ExpansionCapError(CapExceededError):
    cap_name = "expansion factor cap"


class DimensionCapError(CapExceededError):
    cap_name = "product dimension cap"


class MultiIndexCapError(CapExceededError):
    cap_name = "multiindex cap"


class ConfigError(NuPurityError):
    """配置文件或命令行参数错误，CLI 以退出码 2 结束"""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        prefix = f"{location}: " if location else ""
        super().__init__(f"{prefix}{message}")


class InvalidChannelError(NuPurityError):
    """信道未通过 CPTP 校验"""

    def __init__(self, report: Any):
        self.report = report
        super().__init__(
            f"{report.channel} failed validation: "
            f"trace residual {report.trace_residual:.3e}, "
            f"min Choi eigenvalue {report.min_choi_eigenvalue:.3e}"
        )
