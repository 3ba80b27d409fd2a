from typing import Optional

from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class ToleranceSettings(BaseModel):
    """数值容差配置"""

    hermitian_rel: float = Field(default=1e-12, gt=0)  # 厄米性检查（相对 max|M|）
    eigen_reconstruction_rel: float = Field(default=1e-10, gt=0)
    density_trace: float = Field(default=1e-10, gt=0)
    density_eigen: float = Field(default=-1e-10, le=0)  # 最小允许特征值
    unit_norm: float = Field(default=1e-12, gt=0)
    validity: float = Field(default=1e-9, gt=0)  # 保迹残差与 Choi 最小特征值
    trace_bound: float = Field(default=1e-10, gt=0)
    cs_identity: float = Field(default=1e-10, gt=0)
    cs_norm: float = Field(default=1e-12, gt=0)


class OptimizerSettings(BaseModel):
    """纯态上升优化器配置"""

    restarts: int = Field(default=64, ge=1)
    max_iterations: int = Field(default=1000, ge=1)
    convergence_tol: float = Field(default=1e-12, gt=0)
    monotone_slack: float = Field(default=1e-12, ge=0)
    violation_tol: float = Field(default=1e-7, gt=0)
    ascent_tol: float = Field(default=1e-6, gt=0)
    reverify_factor: int = Field(default=4, ge=1)
    workers: int = Field(default=1, ge=1)  # 重启线程数，1 表示顺序执行


class CapSettings(BaseModel):
    """规模上限"""

    product_dim: int = Field(default=64, ge=1)
    expansion_factors: int = Field(default=10, ge=1)
    multiindex: int = Field(default=1_000_000, ge=1)


class Settings(BaseSettings):
    """应用程序配置"""

    model_config = SettingsConfigDict(
        env_prefix="NUPURITY_",  # 环境变量前缀
        env_nested_delimiter="__",
        env_file=".env",  # 环境变量文件
        extra="ignore",
    )

    # 基本设置
    name: str = "nupurity"
    default_seed: int = 20240229
    log_level: str = "INFO"
    log_json: Optional[bool] = None  # None 时按 TTY 自动选择

    # 各模块配置
    tolerances: ToleranceSettings = ToleranceSettings()
    optimizer: OptimizerSettings = OptimizerSettings()
    caps: CapSettings = CapSettings()


# 创建全局设置实例
settings = Settings()
