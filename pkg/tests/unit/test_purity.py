import math

import numpy as np
import pytest

from app.channels.operations import apply
from app.channels.schema import DepolarizingForm, KrausForm, ProductForm
from app.cli.search import random_kraus_channel
from app.common.errors import DimensionCapError, ExpansionCapError, NormRegimeError, ZeroInputError
from app.linalg.kernel import schatten_norm
from app.linalg.sampling import random_hermitian, sample_haar_state, stream_rng
from app.linalg.schema import NormOrder, SubsetMask
from app.purity import optimizer
from app.purity.closed_form import (
    closed_form_nu_p,
    closed_form_product_nu_p,
    conditional_product_bound,
    trace_power_bound,
    trace_power_via_expansion,
)
from app.purity.optimizer import maximize_output_norm, norm_1_to_p_ratio, norm_q_to_p_estimate
from app.purity.service import check_multiplicativity, classify_gap
from app.settings import CapSettings, settings


def amplitude_damping(gamma: float) -> KrausForm:
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return KrausForm(kraus_ops=[k0, k1], label="amplitude-damping")


@pytest.mark.parametrize(
    "p, expected",
    [(1, 1.0), (2, math.sqrt(0.625)), ("inf", 0.75), (3, (0.75**3 + 0.25**3) ** (1 / 3))],
)
def test_closed_form_single_qubit(p, expected):
    assert closed_form_nu_p(2, 0.5, p) == pytest.approx(expected, abs=1e-15)


def test_closed_form_identity_channel():
    for p in (1, 2, 3.5, "inf"):
        assert closed_form_nu_p(3, 0.0, p) == pytest.approx(1.0)


def test_closed_form_regimes():
    factors = [(2, 0.3), (3, 0.7)]
    assert closed_form_product_nu_p(factors, 2).regime == "proven"
    assert closed_form_product_nu_p(factors, "inf").regime == "proven"
    conjectural = closed_form_product_nu_p(factors, 2.5)
    assert conjectural.regime == "conjectural"
    assert conjectural.p == "2.5"
    assert conjectural.value == pytest.approx(closed_form_nu_p(2, 0.3, 2.5) * closed_form_nu_p(3, 0.7, 2.5))


@pytest.mark.parametrize("factors", [[(2, 0.3)], [(2, 0.3), (3, 0.7)], [(2, 0.5), (2, 0.2), (2, 0.9)]])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_trace_power_bound_equals_closed_form(factors, p):
    expected = closed_form_product_nu_p(factors, p).value ** p
    assert trace_power_bound(factors, p) == pytest.approx(expected, rel=1e-12)


def test_trace_power_via_expansion_matches_direct():
    factors = [DepolarizingForm(d=2, q=0.3), DepolarizingForm(d=3, q=0.6)]
    product = ProductForm(factors=tuple(factors))
    state = sample_haar_state(6, seed=21).projector()
    output = apply(product, state)
    for p in (2, 3):
        direct = float(np.real(np.trace(np.linalg.matrix_power(output, p))))
        assert trace_power_via_expansion(factors, state, p) == pytest.approx(direct, abs=1e-12)


def test_trace_power_enumeration_cap(monkeypatch):
    monkeypatch.setattr(settings.caps, "expansion_factors", 4)
    with pytest.raises(ExpansionCapError):
        trace_power_bound([(2, 0.5), (2, 0.5)], 3)


def test_conditional_product_bound_on_pure_states():
    dims = (2, 3)
    masks = list(SubsetMask.all_subsets(dims))
    for index in range(20):
        rng = stream_rng(5, 0, index)
        state = sample_haar_state(6, seed=rng).projector()
        chosen = [masks[int(k)] for k in rng.integers(0, len(masks), size=3)]
        lhs, bound = conditional_product_bound(state, dims, chosen)
        assert lhs <= bound + 1e-12


def test_single_depolarizing_optimum():
    report = maximize_output_norm(DepolarizingForm(d=2, q=0.5), 2, restarts=4, seed=1)
    assert report.nu_p == pytest.approx(math.sqrt(0.625), abs=1e-12)
    assert report.closed_form == pytest.approx(math.sqrt(0.625))
    assert report.closed_form_regime == "proven"
    assert report.converged
    assert report.monotone


def test_p_one_short_circuits_for_trace_preserving():
    report = maximize_output_norm(amplitude_damping(0.3), 1, restarts=4, seed=1)
    assert report.nu_p == 1.0
    assert report.short_circuit
    assert report.restarts == 0
    assert report.p == "1"


def test_p_one_without_trace_preservation_is_optimized():
    report = maximize_output_norm(KrausForm(kraus_ops=[0.5 * np.eye(2)]), 1, restarts=2, seed=1)
    assert not report.short_circuit
    assert report.nu_p == pytest.approx(0.25)


def test_p_slightly_above_one():
    channel = ProductForm(factors=(DepolarizingForm(d=2, q=0.3), amplitude_damping(0.4)))
    report = maximize_output_norm(channel, 1.000001, restarts=4, seed=2)
    assert report.nu_p <= 1 + 1e-9


def test_amplitude_damping_keeps_ground_state_pure():
    # 纯输出处的最优点是退化的，上升只以次线性速度逼近
    for p in (2, "inf"):
        report = maximize_output_norm(amplitude_damping(0.36), p, restarts=8, seed=3)
        assert 1 - 1e-4 <= report.nu_p <= 1 + 1e-12


def test_optimizer_is_deterministic_across_workers():
    channel = ProductForm(factors=(DepolarizingForm(d=2, q=0.3), DepolarizingForm(d=2, q=0.6)))
    first = maximize_output_norm(channel, 3, restarts=6, seed=9, workers=1)
    second = maximize_output_norm(channel, 3, restarts=6, seed=9, workers=3)
    assert first.nu_p == second.nu_p
    assert first.best_restart == second.best_restart
    np.testing.assert_array_equal(first.maximizer.amplitudes, second.maximizer.amplitudes)


def test_report_serializes_maximizer_as_pairs():
    report = maximize_output_norm(DepolarizingForm(d=2, q=0.2), 2, restarts=2, seed=4)
    dumped = report.model_dump()
    assert dumped["maximizer"]["dims"] == [2]
    assert all(len(pair) == 2 for pair in dumped["maximizer"]["amplitudes"])
    assert "history" not in dumped


def test_restarts_must_be_positive():
    with pytest.raises(ValueError):
        maximize_output_norm(DepolarizingForm(d=2, q=0.2), 2, restarts=0)


@pytest.mark.parametrize(
    "channel",
    [
        amplitude_damping(0.36),
        ProductForm(factors=(DepolarizingForm(d=2, q=0.3), DepolarizingForm(d=2, q=0.7))),
    ],
)
@pytest.mark.parametrize("p", [2, "inf"])
def test_one_to_p_ratio_never_exceeds_nu(channel, p):
    report = maximize_output_norm(channel, p, restarts=8, seed=5)
    for index in range(1000):
        a = random_hermitian(channel.dim, stream_rng(6, 0, index))
        assert norm_1_to_p_ratio(channel, a, p) <= report.nu_p + 1e-9
    attained = norm_1_to_p_ratio(channel, report.maximizer.projector(), p)
    assert attained == pytest.approx(report.nu_p, abs=1e-12)


def test_one_to_p_ratio_rejects_zero():
    with pytest.raises(ZeroInputError):
        norm_1_to_p_ratio(DepolarizingForm(d=2, q=0.5), np.zeros((2, 2)), 2)


def test_q_to_p_estimate():
    channel = DepolarizingForm(d=2, q=0.4)
    value = norm_q_to_p_estimate(channel, 2, 2, restarts=4, seed=1)
    assert 0.6 - 1e-9 <= value <= 1 + 1e-9
    with pytest.raises(NormRegimeError):
        norm_q_to_p_estimate(channel, 3, 2)


def test_q_equal_one_delegates_to_pure_state_ascent():
    channel = DepolarizingForm(d=2, q=0.4)
    value = norm_q_to_p_estimate(channel, 1, 2, restarts=4, seed=1)
    assert value == pytest.approx(closed_form_nu_p(2, 0.4, 2), abs=1e-12)


@pytest.mark.parametrize(
    "lhs, rhs, verdict",
    [(1.0, 1.0, "consistent"), (1.0 + 1e-6, 1.0, "violation candidate"), (0.9, 1.0, "inconclusive"), (1.0 - 1e-8, 1.0, "consistent")],
)
def test_classify_gap(lhs, rhs, verdict):
    assert classify_gap(lhs, rhs, tol=1e-7, ascent_tol=1e-6) == verdict


@pytest.mark.parametrize("p", [2, "inf"])
def test_depolarizing_pair_is_multiplicative(p):
    factors = [DepolarizingForm(d=2, q=0.3), DepolarizingForm(d=2, q=0.7)]
    report = check_multiplicativity(factors, p, restarts=8, seed=1)
    assert report.verdict == "consistent"
    assert abs(report.gap) <= 1e-8
    assert report.rhs == pytest.approx(closed_form_product_nu_p(factors, p).value, abs=1e-9)


def test_single_factor_is_trivially_consistent():
    report = check_multiplicativity([DepolarizingForm(d=3, q=0.5)], 2, restarts=4, seed=1)
    assert report.verdict == "consistent"
    assert report.gap == 0.0


def test_product_dimension_cap(monkeypatch):
    monkeypatch.setattr(settings.caps, "product_dim", 3)
    with pytest.raises(DimensionCapError) as info:
        check_multiplicativity([DepolarizingForm(d=2, q=0.5)] * 2, 2, restarts=2)
    assert info.value.cap == 3
    assert info.value.required == 4


CLOSED_FORM_GRID = [
    ([(2, 0.3)], 2),
    ([(3, 0.7)], 3),
    ([(2, 0.7)], 4),
    ([(3, 0.3)], 2),
    ([(2, 0.3), (2, 0.7)], 2),
    ([(2, 0.3), (3, 0.3)], 3),
    ([(3, 0.7), (2, 0.7)], 4),
    ([(3, 0.3), (3, 0.7)], 2),
    ([(2, 0.7), (3, 0.3)], 3),
    ([(2, 0.3), (2, 0.3)], 4),
    ([(2, 0.3), (2, 0.7), (2, 0.3)], 2),
    ([(2, 0.7), (3, 0.3), (2, 0.3)], 3),
    ([(3, 0.3), (2, 0.7), (2, 0.7)], 4),
    ([(2, 0.3), (2, 0.3), (3, 0.7)], 2),
    ([(3, 0.7), (3, 0.3), (2, 0.3)], 3),
    ([(2, 0.7), (2, 0.7), (2, 0.7)], 4),
]


@pytest.mark.slow
@pytest.mark.parametrize("factors, p", CLOSED_FORM_GRID)
def test_optimizer_reproduces_closed_form(factors, p):
    channel = ProductForm(factors=tuple(DepolarizingForm(d=d, q=q) for d, q in factors))
    closed = closed_form_product_nu_p(factors, p).value
    report = maximize_output_norm(channel, p, restarts=8, seed=2024)
    assert closed - 1e-6 <= report.nu_p <= closed + 1e-9


@pytest.mark.slow
def test_trace_preserving_channels_have_unit_nu_one():
    channels = [
        DepolarizingForm(d=3, q=0.4),
        amplitude_damping(0.2),
        ProductForm(factors=(DepolarizingForm(d=2, q=0.3), amplitude_damping(0.7))),
    ]
    for channel in channels:
        assert maximize_output_norm(channel, 1, restarts=2, seed=1).nu_p == 1.0
        assert maximize_output_norm(channel, 1.000001, restarts=4, seed=1).nu_p <= 1 + 1e-9
    assert schatten_norm(np.eye(2) / 2, 1) == pytest.approx(1.0)


def test_closed_form_qutrit_cube():
    assert closed_form_nu_p(3, 0.6, 3) == pytest.approx(0.232 ** (1 / 3), abs=1e-12)


def test_traceless_input_ratio():
    q = 0.4
    channel = DepolarizingForm(d=2, q=q)
    ratio = norm_1_to_p_ratio(channel, np.diag([1.0, -1.0]), 2)
    assert ratio == pytest.approx((1 - q) * math.sqrt(2) / 2)
    assert ratio < closed_form_nu_p(2, q, 2)


def test_q_to_p_operator_norm_of_depolarizing():
    value = norm_q_to_p_estimate(DepolarizingForm(d=2, q=0.5), 1, "inf", restarts=4, seed=1)
    assert value == pytest.approx(0.75, abs=1e-9)


def test_q_equal_p_for_identity_channel():
    value = norm_q_to_p_estimate(DepolarizingForm(d=2, q=0.0), 2, 2, restarts=3, seed=1)
    assert value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("d, rank", [(2, 2), (3, 2)])
def test_random_kraus_channels_have_unit_nu_one(d, rank):
    for index in range(20):
        channel = random_kraus_channel(d, rank, stream_rng(index, 201, 0))
        report = maximize_output_norm(channel, 1, restarts=2, seed=index)
        assert report.nu_p == 1.0
        assert report.short_circuit


def test_random_kraus_channel_ascent_runs():
    channel = random_kraus_channel(2, 2, np.random.default_rng(3))
    report = maximize_output_norm(channel, 2, restarts=4, seed=3)
    assert 1 / math.sqrt(2) - 1e-9 <= report.nu_p <= 1 + 1e-9
    assert report.monotone


@pytest.mark.parametrize(
    "channel",
    [
        DepolarizingForm(d=2, q=0.4),
        ProductForm(factors=(DepolarizingForm(d=2, q=0.3), DepolarizingForm(d=3, q=0.6))),
    ],
)
def test_nu_is_nonincreasing_in_p(channel):
    values = [maximize_output_norm(channel, p, restarts=8, seed=11).nu_p for p in (1, 2, 3, 4, "inf")]
    assert values[0] == 1.0
    for smaller, larger in zip(values, values[1:]):
        assert larger <= smaller + 1e-9


def test_nu_by_p_for_qubit_depolarizing():
    channel = DepolarizingForm(d=2, q=0.4)
    values = [maximize_output_norm(channel, p, restarts=4, seed=1).nu_p for p in (2, 3, 4, "inf")]
    assert values == pytest.approx([math.sqrt(0.68), 0.520 ** (1 / 3), 0.4112**0.25, 0.8], abs=1e-9)


def _scripted_norms(monkeypatch, values):
    script = iter(values)
    monkeypatch.setattr(optimizer, "schatten_norm", lambda m, order: next(script))


def test_ascent_decrease_beyond_slack_is_not_converged(monkeypatch):
    _scripted_norms(monkeypatch, [1.0, 0.5])
    channel = DepolarizingForm(d=2, q=0.3)
    result = optimizer._ascend(channel, NormOrder.parse(2), np.array([1.0, 0.0], dtype=complex), 1e-12, 10)
    assert not result.monotone
    assert not result.converged
    assert result.value == 1.0
    assert result.history == [1.0, 0.5]


def test_ascent_decrease_within_slack_is_converged(monkeypatch):
    _scripted_norms(monkeypatch, [1.0, 1.0 - 1e-14])
    channel = DepolarizingForm(d=2, q=0.3)
    result = optimizer._ascend(channel, NormOrder.parse(2), np.array([1.0, 0.0], dtype=complex), 1e-12, 10)
    assert result.monotone
    assert result.converged


def test_explicit_caps_bound_single_channel_optimization():
    channel = ProductForm(factors=(DepolarizingForm(d=2, q=0.3), DepolarizingForm(d=2, q=0.7)))
    with pytest.raises(DimensionCapError) as info:
        maximize_output_norm(channel, 2, restarts=2, caps=CapSettings(product_dim=3))
    assert info.value.required == 4
    report = maximize_output_norm(channel, 2, restarts=2, caps=CapSettings(product_dim=4))
    assert report.restarts >= 2


def test_explicit_caps_leave_settings_untouched():
    original = settings.caps.product_dim
    with pytest.raises(DimensionCapError):
        check_multiplicativity(
            [DepolarizingForm(d=2, q=0.5)] * 2, 2, restarts=2, caps=CapSettings(product_dim=2)
        )
    assert settings.caps.product_dim == original
