import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dvpp.control import (
    AdaptiveFactor,
    Allocator,
    DynamicFactor,
    PidConfig,
    PidController,
    ResidualFactor,
    StaticFactor,
    UnitReference,
    ResidualReference,
    adaptive_gains,
    build_desired,
    build_participation,
    desired_local_power,
    design_pole_placement,
    matching_pid_step,
    statcom_desired_power,
)
from dvpp.plants import make_pv_plant, make_wind_plant
from dvpp.tf import LtiState, RationalZ, dc_gain, discretize_first_order, freq_response, poles, polymul

T = 0.01
NOMINAL = [DynamicFactor(0.4, 3.5), DynamicFactor(0.6, 0.5), ResidualFactor(0.05)]


def cross_residual(a: RationalZ, b: RationalZ):
    """Coefficients of ``num_a*den_b - num_b*den_a`` (zero iff a == b)."""
    p, q = polymul(a.num, b.den), polymul(b.num, a.den)
    n = max(len(p), len(q))
    p = [Fraction(0)] * (n - len(p)) + p
    q = [Fraction(0)] * (n - len(q)) + q
    return [x - y for x, y in zip(p, q)]


# ---------------------------------------------------------------- desired behavior


def test_desired_realization():
    d = build_desired(6.5, 0.25, T)
    assert d.realized.num == (Fraction("-0.26"),)
    assert d.realized.den == (1, Fraction("-0.96"))
    assert dc_gain(d.realized) == -6.5


@pytest.mark.parametrize("droop, tau", [(0, 0.25), (-1, 0.25), (6.5, 0), (6.5, -0.1), (float("nan"), 1)])
def test_desired_rejects_invalid(droop, tau):
    with pytest.raises(ValueError):
        build_desired(droop, tau, T)


@pytest.mark.parametrize("tau", [0.05, 0.25, 1.0])
def test_unit_droop_step_settles_within_five_time_constants(tau):
    g = build_desired(1, tau, T).realized
    y = LtiState(g).run(np.ones(int(10 * tau / T)))
    k5 = int(round(5 * tau / T))
    assert np.all(np.abs(y[k5 + 1:] + 1) <= 0.01)
    assert abs(y[int(round(4 * tau / T)) - 1] + 1) > 0.01


@settings(max_examples=40, deadline=None)
@given(droop=st.floats(0.1, 50), tau=st.floats(0.006, 5))
def test_desired_always_stable_for_t_below_two_tau(droop, tau):
    p = poles(build_desired(droop, tau, T).realized)
    assert p.is_stable
    assert p.poles[0].real == pytest.approx(1 - T / tau, abs=1e-12)


# ---------------------------------------------------------------- participation factors


def test_participation_identity_coefficientwise():
    m = build_participation(NOMINAL, T)
    total = m[0] + m[1] + m[2]
    fast = discretize_first_order(1, 0.05, T)
    assert max(abs(float(c)) for c in cross_residual(total, fast)) <= 1e-12


def test_residual_has_zero_dc():
    m_s = build_participation(NOMINAL, T)[2]
    assert abs(dc_gain(m_s)) <= 1e-12


def test_static_factor_is_flat():
    m_w = build_participation([StaticFactor(0.4), StaticFactor(0.6)], T)[0]
    mags = [p.magnitude for p in freq_response(m_w, np.linspace(0, 300, 31))]
    assert mags == pytest.approx([0.4] * 31, abs=1e-15)


def test_gains_must_sum_to_one():
    with pytest.raises(ValueError, match="sum"):
        build_participation([DynamicFactor(0.4, 3.5), DynamicFactor(0.5, 0.5), ResidualFactor(0.05)], T)


def test_two_residuals_rejected():
    with pytest.raises(ValueError, match="residual"):
        build_participation([StaticFactor(1.0), ResidualFactor(0.05), ResidualFactor(0.1)], T)


@pytest.mark.parametrize("spec", [StaticFactor(1.5), DynamicFactor(-0.1, 1), DynamicFactor(1.0, 0)])
def test_invalid_factor_rejected(spec):
    with pytest.raises(ValueError):
        build_participation([spec], T)


def test_adaptive_cannot_mix_with_fixed_gains():
    with pytest.raises(ValueError):
        build_participation([AdaptiveFactor(3.5, 0.4), StaticFactor(0.6)], T)


# ---------------------------------------------------------------- adaptive gains


def test_nominal_capacities_give_nominal_gains():
    assert adaptive_gains([0.2, 0.3]) == [0.4, 0.6]


def test_equal_and_zero_capacities():
    assert adaptive_gains([0.7, 0.7]) == [0.5, 0.5]
    assert adaptive_gains([0.0, 0.3]) == [0.0, 1.0]


def test_all_zero_capacities_rejected():
    with pytest.raises(ValueError):
        adaptive_gains([0.0, 0.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=6).filter(lambda v: sum(v) > 0))
def test_adaptive_gains_sum_to_one(p_ref):
    assert abs(math.fsum(adaptive_gains(p_ref)) - 1) <= 1e-12


def test_allocator_refresh_keeps_sum_one_every_tick():
    alloc = Allocator([AdaptiveFactor(3.5, 0.4), AdaptiveFactor(0.5, 0.6), ResidualFactor(0.05)], build_desired())
    rng = np.random.default_rng(0)
    for k in range(500):
        alloc.step(0.002, list(rng.uniform(0, 0.5, 2)) + [0.1])
        assert abs(math.fsum(alloc.mus()) - 1) <= 1e-12


# ---------------------------------------------------------------- desired local powers


def _unit(spec):
    return UnitReference(spec, build_desired(6.5, 0.25, T))


def test_zero_frequency_gives_zero_desired_power():
    u = _unit(DynamicFactor(0.4, 3.5))
    assert all(desired_local_power(u, 0.0) == 0.0 for _ in range(200))


def test_wind_steady_state_share():
    u = _unit(DynamicFactor(0.4, 3.5))
    for _ in range(int(60 / T)):
        y = desired_local_power(u, 0.002)
    assert y == pytest.approx(-0.4 * 6.5 * 0.002, rel=1e-6)


def test_static_wind_reaches_63_percent_earlier_than_dynamic():
    final = -0.0052
    out = {}
    for name, spec in (("spf", StaticFactor(0.4)), ("dpf", DynamicFactor(0.4, 3.5))):
        u = _unit(spec)
        y = np.array([desired_local_power(u, 0.002) for _ in range(3000)])
        out[name] = int(np.argmax(y <= 0.632 * final))
    assert out["spf"] < out["dpf"]
    assert out["spf"] * T == pytest.approx(0.25, abs=0.02)


def test_steady_state_split_follows_gains():
    alloc = Allocator(NOMINAL, build_desired())
    for _ in range(int(200 / T)):
        w, p, s = alloc.step(0.002)
    assert w / p == pytest.approx(0.4 / 0.6, abs=1e-9)
    assert abs(s) < 1e-12


def test_refresh_rejected_for_fixed_factor():
    with pytest.raises(ValueError):
        desired_local_power(_unit(DynamicFactor(0.4, 3.5)), 0.001, mu=0.3)


def test_non_finite_frequency_rejected():
    with pytest.raises(ValueError):
        desired_local_power(_unit(DynamicFactor(0.4, 3.5)), float("nan"))


def test_statcom_desired_power_zero_for_zero_input():
    r = ResidualReference(ResidualFactor(0.05), build_desired())
    assert all(statcom_desired_power(r, [0.0, 0.0], 0.0) == 0.0 for _ in range(50))


def test_aggregate_equals_fast_filtered_desired():
    alloc = Allocator(NOMINAL, build_desired())
    fast = LtiState(build_desired().realized * discretize_first_order(1, 0.05, T))
    rng = np.random.default_rng(1)
    df = np.cumsum(rng.normal(0, 1e-4, 2000))
    for x in df:
        total = math.fsum(alloc.step(float(x)))
        assert abs(total - fast.step(float(x))) <= 1e-12


def test_adaptive_with_constant_capacity_equals_dynamic_bitwise():
    desired = build_desired()
    dpf = Allocator(NOMINAL, desired)
    adpf = Allocator([AdaptiveFactor(3.5, 0.4), AdaptiveFactor(0.5, 0.6), ResidualFactor(0.05)], desired)
    rng = np.random.default_rng(2)
    for x in rng.normal(0, 1e-3, 1000):
        assert dpf.step(float(x)) == adpf.step(float(x), [0.2, 0.3, 0.1])


# ---------------------------------------------------------------- PID matching


def test_zero_error_gives_zero_output():
    pid = PidController(PidConfig(1.0, 50.0, 0.1), T)
    assert all(pid.step(0.0, 0.0) == 0.0 for _ in range(100))


def test_pure_gain_plant_converges_without_steady_error():
    pid = PidController(PidConfig(0.5, 5.0), T)
    y = 0.0
    for _ in range(3000):
        y = pid.step(0.3, y)
    assert y == pytest.approx(0.3, abs=1e-12)


def test_zero_width_saturation_freezes_everything():
    pid = PidController(PidConfig(2.0, 30.0, 0.5), T)
    for k in range(200):
        assert pid.step(1.0, -0.5 * k, (0.0, 0.0)) == 0.0
    assert pid.integral == 0.0


def test_inverted_saturation_rejected():
    with pytest.raises(ValueError):
        matching_pid_step(PidController(PidConfig(1.0), T), 0.1, 0.0, (0.1, -0.1))


@settings(max_examples=50, deadline=None)
@given(
    pre=st.lists(st.floats(-1, 1), min_size=1, max_size=20),
    frozen=st.lists(st.floats(-1, 1), min_size=1, max_size=30),
    post=st.lists(st.floats(-1, 1), min_size=1, max_size=20),
)
def test_released_output_matches_held_integrator_controller(pre, frozen, post):
    cfg = PidConfig(1.5, 20.0, 0.05, 0.05)
    a, b = PidController(cfg, T), PidController(cfg, T)
    for e in pre:
        assert a.step(e, 0.0) == b.step(e, 0.0)
    for e in frozen:
        assert a.step(e, 0.0, (0.0, 0.0)) == 0.0
        b.step(e, 0.0, hold_integrator=True)
    for e in post:
        assert a.step(e, 0.0) == b.step(e, 0.0)


def test_integrator_frozen_only_while_clamped():
    pid = PidController(PidConfig(0.0, 10.0), T)
    pid.step(1.0, 0.0, (-1.0, 1.0))
    assert pid.integral == pytest.approx(0.1)
    pid.integral = 1.0
    pid.step(1.0, 0.0, (-0.5, 0.5))
    assert pid.clamped and pid.integral == 1.0


def test_pid_transfer_function_matches_stepping():
    cfg = PidConfig(1.0, 50.0, 0.2, 0.05)
    pid = PidController(cfg, T)
    C = LtiState(pid.transfer_function())
    rng = np.random.default_rng(3)
    for e in rng.normal(size=300):
        assert pid.step(float(e), 0.0) == pytest.approx(C.step(float(e)), abs=1e-9)


# ---------------------------------------------------------------- pole placement


def test_pole_placement_places_the_requested_poles():
    P = make_wind_plant().tf
    model = [0.8, 0.75, 0.7, 0.65, 0.6, 0.55, 0.5, 0.45]
    observer = [0.4, 0.35, 0.3, 0.25, 0.2, 0.15, 0.1]
    ctrl = design_pole_placement(P, model, observer)
    got = np.array([float(c) for c in ctrl.closed_loop_poly(P)])
    assert got == pytest.approx(np.poly(model + observer), abs=1e-6)


def test_pole_placement_tracks_with_unit_dc_gain():
    P = make_wind_plant().tf
    ctrl = design_pole_placement(P, [0.8, 0.75, 0.7, 0.65, 0.6, 0.55, 0.5, 0.45],
                                 [0.4, 0.35, 0.3, 0.25, 0.2, 0.15, 0.1])
    plant = LtiState(P)
    for _ in range(1500):
        y_next = plant.peek()
        plant.step(ctrl.step(-0.0052, y_next))
    assert plant.peek() == pytest.approx(-0.0052, rel=1e-6)


def test_pole_placement_needs_the_right_pole_count():
    with pytest.raises(ValueError):
        design_pole_placement(make_pv_plant().tf, [0.5], [0.4])
