"""纯态上的不动点上升：ψ ← Φ*(Φ(ψψ†)^{p−1}) 的主特征向量

目标 ‖Φ(ψψ†)‖_p 关于输入是凸函数，每一步取线性化问题在纯态上的最优解，
因此目标值单调不减。
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from app.channels.choi import trace_residual
from app.channels.operations import adjoint_apply, apply
from app.channels.schema import QuantumChannel, is_depolarizing_product
from app.common.errors import DimensionCapError, NormRegimeError, ZeroInputError
from app.common.logger import logger
from app.linalg.kernel import hermitian_eigh, principal_eigenvector, psd_power, require_hermitian, schatten_norm
from app.linalg.sampling import haar_vector, random_hermitian, stream_rng
from app.linalg.schema import NormOrder, NormOrderLike, PureState
from app.settings import CapSettings, settings

from .closed_form import closed_form_product_nu_p
from .schema import PurityReport


class AscentResult(NamedTuple):
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool
    monotone: bool
    history: List[float]


def _hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def _output(channel: QuantumChannel, vector: np.ndarray) -> np.ndarray:
    return _hermitian_part(apply(channel, np.outer(vector, vector.conj())))


def _gradient(channel: QuantumChannel, rho: np.ndarray, order: NormOrder) -> np.ndarray:
    if order.is_infinite:
        _, top = principal_eigenvector(rho)
        return _hermitian_part(adjoint_apply(channel, np.outer(top, top.conj())))
    if order.is_integer:
        power = np.linalg.matrix_power(rho, int(order.value) - 1)
    else:
        power = psd_power(rho, order.value - 1)
    return _hermitian_part(adjoint_apply(channel, _hermitian_part(power)))


def _ascend(
    channel: QuantumChannel,
    order: NormOrder,
    start: np.ndarray,
    tol: float,
    max_iterations: int,
) -> AscentResult:
    slack = settings.optimizer.monotone_slack
    vector = start
    rho = _output(channel, vector)
    value = schatten_norm(rho, order)
    history = [value]
    monotone = True
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        _, candidate = principal_eigenvector(_gradient(channel, rho, order))
        candidate_rho = _output(channel, candidate)
        candidate_value = schatten_norm(candidate_rho, order)
        history.append(candidate_value)
        change = candidate_value - value
        if change < 0:
            # 下降不超过 slack 视为数值上已收敛
            monotone = change >= -slack
            converged = monotone
            break
        vector, rho, value = candidate, candidate_rho, candidate_value
        if change < tol:
            converged = True
            break
    return AscentResult(value, vector, iterations, converged, monotone, history)


def _is_trace_preserving(channel: QuantumChannel) -> bool:
    return trace_residual(channel) <= settings.tolerances.validity


def check_product_dim(channel: QuantumChannel, caps: Optional[CapSettings] = None) -> None:
    cap = (settings.caps if caps is None else caps).product_dim
    if channel.dim > cap:
        raise DimensionCapError(cap=cap, required=channel.dim, detail=channel.describe())


def _closed_form(channel: QuantumChannel, order: NormOrder):
    if not is_depolarizing_product(channel):
        return None, None
    closed = closed_form_product_nu_p(channel.leaves(), order)
    return closed.value, closed.regime


def maximize_output_norm(
    channel: QuantumChannel,
    p: NormOrderLike,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
    max_iterations: Optional[int] = None,
    initial_states: Sequence[np.ndarray] = (),
    stream: int = 0,
    workers: Optional[int] = None,
    caps: Optional[CapSettings] = None,
) -> PurityReport:
    """ν_p(Φ) 的下界：多起点上升，取最优值，平局取最小起点编号"""
    order = NormOrder.parse(p)
    cfg = settings.optimizer
    restarts = cfg.restarts if restarts is None else restarts
    seed = settings.default_seed if seed is None else seed
    tol = cfg.convergence_tol if tol is None else tol
    max_iterations = cfg.max_iterations if max_iterations is None else max_iterations
    workers = cfg.workers if workers is None else workers
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    check_product_dim(channel, caps)

    d = channel.dim
    dims = channel.dims
    closed_form, regime = _closed_form(channel, order)

    if order.value == 1 and _is_trace_preserving(channel):
        vector = haar_vector(d, stream_rng(seed, stream, 0))
        return PurityReport(
            channel=channel.describe(),
            p=order.label,
            nu_p=1.0,
            maximizer=PureState.from_vector(vector, dims),
            restarts=0,
            best_restart=0,
            iterations=[],
            converged=True,
            short_circuit=True,
            closed_form=closed_form,
            closed_form_regime=regime,
        )

    starts = [haar_vector(d, stream_rng(seed, stream, index)) for index in range(restarts)]
    for state in initial_states:
        vector = np.asarray(state, dtype=complex).reshape(-1)
        starts.append(vector / np.linalg.norm(vector))

    def run(start: np.ndarray) -> AscentResult:
        return _ascend(channel, order, start, tol, max_iterations)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(start) for start in starts]

    best_index = 0
    for index, result in enumerate(results):
        if result.value > results[best_index].value:
            best_index = index
    best = results[best_index]

    maximizer = PureState.from_vector(best.vector, dims)
    nu_p = schatten_norm(_output(channel, maximizer.amplitudes), order)
    report = PurityReport(
        channel=channel.describe(),
        p=order.label,
        nu_p=nu_p,
        maximizer=maximizer,
        restarts=len(starts),
        best_restart=best_index,
        iterations=[r.iterations for r in results],
        converged=best.converged,
        monotone=all(r.monotone for r in results),
        closed_form=closed_form,
        closed_form_regime=regime,
        history=best.history,
    )
    log = logger.info if best.converged else logger.warning
    log(
        "purity.ascent.finished",
        channel=report.channel,
        p=report.p,
        nu_p=nu_p,
        restarts=report.restarts,
        best_restart=best_index,
        converged=best.converged,
    )
    return report


def norm_1_to_p_ratio(channel: QuantumChannel, a, p: NormOrderLike) -> float:
    """‖Φ(A)‖_p / ‖A‖_1，按 1→p 范数与 ν_p 相等，它不超过 ν_p"""
    order = NormOrder.parse(p)
    matrix = require_hermitian(a)
    trace_norm = schatten_norm(matrix, 1)
    if trace_norm == 0:
        raise ZeroInputError("1→p ratio is undefined for the zero operator")
    return schatten_norm(_hermitian_part(apply(channel, matrix)), order) / trace_norm


def _signed_power(h: np.ndarray, exponent: float) -> np.ndarray:
    """U sign(λ)|λ|^e U†，先按最大 |λ| 缩放"""
    values, vectors = hermitian_eigh(h)
    top = float(np.max(np.abs(values)))
    if top == 0:
        return np.zeros_like(h)
    scaled = values / top
    powered = np.sign(scaled) * np.abs(scaled) ** exponent
    return (vectors * powered) @ vectors.conj().T


def _dual_direction(g: np.ndarray, q: NormOrder) -> np.ndarray:
    """在单位 q-球上使 Tr(G A) 最大的厄米 A"""
    if q.value == 1:
        values, vectors = hermitian_eigh(g)
        index = int(np.argmax(np.abs(values)))
        top = vectors[:, index]
        return np.sign(values[index]) * np.outer(top, top.conj())
    if q.is_infinite:
        return _signed_power(g, 0.0)
    return _signed_power(g, 1.0 / (q.value - 1))


def _p_gradient(b: np.ndarray, p: NormOrder) -> np.ndarray:
    if p.is_infinite:
        values, vectors = hermitian_eigh(b)
        index = int(np.argmax(np.abs(values)))
        top = vectors[:, index]
        return np.sign(values[index]) * np.outer(top, top.conj())
    return _signed_power(b, p.value - 1)


def _ascend_q_to_p(
    channel: QuantumChannel, q: NormOrder, p: NormOrder, start: np.ndarray, tol: float, max_iterations: int
) -> float:
    a = start / schatten_norm(start, q)
    value = schatten_norm(_hermitian_part(apply(channel, a)), p)
    for _ in range(max_iterations):
        b = _hermitian_part(apply(channel, a))
        g = _hermitian_part(adjoint_apply(channel, _p_gradient(b, p)))
        if not np.any(g):
            break
        candidate = _hermitian_part(_dual_direction(g, q))
        norm = schatten_norm(candidate, q)
        if norm == 0:
            break
        candidate = candidate / norm
        candidate_value = schatten_norm(_hermitian_part(apply(channel, candidate)), p)
        change = candidate_value - value
        if change < 0:
            break
        a, value = candidate, candidate_value
        if change < tol:
            break
    return value


def norm_q_to_p_estimate(
    channel: QuantumChannel,
    q: NormOrderLike,
    p: NormOrderLike,
    restarts: Optional[int] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
    max_iterations: Optional[int] = None,
    caps: Optional[CapSettings] = None,
) -> float:
    """max ‖Φ(A)‖_p / ‖A‖_q 在厄米输入上的下界估计（1 <= q <= p）

    q = 1 时退化为纯态上升，与 maximize_output_norm 结果一致。
    """
    q_order = NormOrder.parse(q)
    p_order = NormOrder.parse(p)
    if q_order.value > p_order.value:
        raise NormRegimeError(f"q→p estimate needs q <= p, got q={q_order} p={p_order}")

    cfg = settings.optimizer
    restarts = cfg.restarts if restarts is None else restarts
    seed = settings.default_seed if seed is None else seed
    tol = cfg.convergence_tol if tol is None else tol
    max_iterations = cfg.max_iterations if max_iterations is None else max_iterations

    if q_order.value == 1:
        return maximize_output_norm(
            channel, p_order, restarts=restarts, seed=seed, tol=tol, max_iterations=max_iterations, caps=caps
        ).nu_p
    check_product_dim(channel, caps)

    best = 0.0
    for index in range(restarts):
        start = random_hermitian(channel.dim, stream_rng(seed, 0, index))
        best = max(best, _ascend_q_to_p(channel, q_order, p_order, start, tol, max_iterations))
    logger.info(
        "purity.q_to_p.estimated",
        channel=channel.describe(),
        q=q_order.label,
        p=p_order.label,
        value=best,
        inputs="hermitian",
    )
    return best
