from functools import reduce
from typing import Callable, Union

import numpy as np
import scipy.linalg

from app.common.errors import InvalidChannelError
from app.linalg.kernel import operator_norm, partial_trace, require_hermitian
from app.linalg.schema import SubsetMask
from app.settings import settings

from .operations import adjoint_apply, apply
from .schema import ChoiMatrix, DepolarizingForm, ProductForm, QuantumChannel, ValidityReport


def choi_of_linear_map(fn: Callable[[np.ndarray], np.ndarray], d: int) -> ChoiMatrix:
    """J = Σ_ij fn(|i⟩⟨j|) ⊗ |i⟩⟨j|"""
    matrix = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            matrix += np.kron(np.asarray(fn(unit), dtype=complex), unit)
    return ChoiMatrix(matrix=matrix, dim=d)


def choi(channel: QuantumChannel) -> ChoiMatrix:
    return choi_of_linear_map(lambda unit: apply(channel, unit), channel.dim)


def transpose_map(s: np.ndarray) -> np.ndarray:
    """转置映射：正但非完全正，作为负对照"""
    return np.asarray(s).T


def choi_spectrum(channel: QuantumChannel) -> np.ndarray:
    """Choi 矩阵的谱（降序）

    乘积信道的 Choi 矩阵与各因子 Choi 矩阵的张量积酉等价，谱取各因子谱的全部乘积。
    """
    if isinstance(channel, ProductForm):
        spectra = [choi_spectrum(leaf) for leaf in channel.leaves()]
        values = reduce(lambda acc, s: np.multiply.outer(acc, s).reshape(-1), spectra)
        return np.sort(values)[::-1]
    return scipy.linalg.eigvalsh(require_hermitian(choi(channel).matrix))[::-1]


def trace_residual(channel: QuantumChannel) -> float:
    """‖Φ*(I) − I‖_∞，按最大奇异值计算，不要求残差数值厄米"""
    identity = np.eye(channel.dim, dtype=complex)
    return operator_norm(adjoint_apply(channel, identity) - identity)


def _report(
    name: str, dim: int, residual: float, min_eigenvalue: float, warnings: list
) -> ValidityReport:
    tol = settings.tolerances.validity
    trace_preserving = residual <= tol
    completely_positive = min_eigenvalue >= -tol
    return ValidityReport(
        channel=name,
        dim=dim,
        trace_residual=residual,
        min_choi_eigenvalue=min_eigenvalue,
        trace_preserving=trace_preserving,
        completely_positive=completely_positive,
        passed=trace_preserving and completely_positive,
        warnings=warnings,
    )


def validate(target: Union[QuantumChannel, ChoiMatrix]) -> ValidityReport:
    """保迹残差 ‖Φ*(I) − I‖_∞ 与 Choi 最小特征值；两者都在 1e-9 内才通过"""
    if isinstance(target, ChoiMatrix):
        d = target.dim
        out_factor = SubsetMask.from_indices((d, d), [0])
        reduced = partial_trace(target.matrix, (d, d), out_factor)
        residual = operator_norm(reduced - np.eye(d))
        hermitian = require_hermitian(target.matrix, rel_tol=settings.tolerances.validity)
        min_eigenvalue = float(scipy.linalg.eigvalsh(hermitian)[0])
        return _report("choi", d, residual, min_eigenvalue, [])

    residual = trace_residual(target)
    min_eigenvalue = float(choi_spectrum(target)[-1])
    warnings = [
        f"{leaf.describe()} uses boundary mixing parameter"
        for leaf in target.leaves()
        if isinstance(leaf, DepolarizingForm) and leaf.boundary
    ]
    return _report(target.describe(), target.dim, residual, min_eigenvalue, warnings)


def require_valid(channel: QuantumChannel) -> QuantumChannel:
    report = validate(channel)
    if not report.passed:
        raise InvalidChannelError(report)
    return channel
