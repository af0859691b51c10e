import logging
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dvpp.plants import (
    CapacityProfile,
    PlantSampleTimeWarning,
    make_plant,
    make_pv_plant,
    make_statcom_plant,
    make_wind_plant,
    to_absolute_setpoint,
)
from dvpp.tf import NearIntegratorError, dc_gain, impulse_response, poles

# Golden constants typed in independently of the package source.
PV_NUMERATOR = ["0.4028", "-1.0303", "1.0041", "-0.3767", "0.000084638"]
PV_DENOMINATOR = ["1", "-2.3955", "2.0413", "-0.7444", "0.0985", "-0.000000003575"]
WIND_NUMERATOR = ["0.1943", "-1.1346", "2.7637", "-3.5947", "2.6328", "-1.0295", "0.01679"]
WIND_DENOMINATOR = ["1", "-6.4395", "17.7314", "-27.0496", "24.677", "-13.4537", "4.0553", "-0.5208"]


def decimal_sum(values):
    from decimal import Decimal

    return Fraction(sum((Decimal(v) for v in values), Decimal(0)))


def test_pv_coefficients_digit_for_digit():
    P = make_pv_plant().tf
    assert list(P.num) == [Fraction(c) for c in PV_NUMERATOR]
    assert list(P.den) == [Fraction(c) for c in PV_DENOMINATOR]
    assert P.num[0] == Fraction("0.4028")


def test_wind_coefficients_digit_for_digit():
    P = make_wind_plant().tf
    assert list(P.num) == [Fraction(c) for c in WIND_NUMERATOR]
    assert list(P.den) == [Fraction(c) for c in WIND_DENOMINATOR]
    assert P.den[0] == 1


def test_plant_orders():
    assert (len(make_pv_plant().tf.num), make_pv_plant().tf.order) == (5, 5)
    assert (len(make_wind_plant().tf.num), make_wind_plant().tf.order) == (7, 7)


def test_coefficient_sums_match_independent_decimal_sums():
    pv, wind = make_pv_plant().tf, make_wind_plant().tf
    assert pv.num_at_1() == decimal_sum(PV_NUMERATOR) == Fraction(-7681, 500000000)
    assert pv.den_at_1() == decimal_sum(PV_DENOMINATOR) == Fraction(-4000143, 40000000000)
    assert wind.num_at_1() == decimal_sum(WIND_NUMERATOR) == Fraction(-15121, 100000)
    assert wind.den_at_1() == decimal_sum(WIND_DENOMINATOR) == Fraction(1, 10000)


def test_pv_poles_strictly_inside_unit_circle():
    assert poles(make_pv_plant().tf).is_stable


def test_wind_plant_flagged_near_integrator():
    with pytest.raises(NearIntegratorError):
        dc_gain(make_wind_plant().tf)


@pytest.mark.parametrize("make", [make_pv_plant, make_wind_plant])
def test_first_impulse_sample_is_zero(make):
    assert impulse_response(make().tf, 3)[0] == 0.0


def test_other_sample_time_warns():
    with pytest.warns(PlantSampleTimeWarning):
        make_wind_plant(0.02)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        make_pv_plant(0.01)
        make_statcom_plant(0.02)


def test_statcom_same_tick_pass_through():
    s = make_statcom_plant()
    assert s.step(0.05) == 0.05
    assert s.step(0.0) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_subnormal=True), min_size=1, max_size=100))
def test_statcom_identity_on_any_sequence(u):
    s = make_statcom_plant()
    assert [s.step(x) for x in u] == u


def test_make_plant_dispatch():
    assert make_plant("statcom").tf.num == (1,)
    with pytest.raises(KeyError):
        make_plant("hydro")


def test_absolute_setpoint_arithmetic():
    assert to_absolute_setpoint(-0.0052, 0.2, 1.1) == (pytest.approx(0.1948, abs=1e-15), False)
    assert to_absolute_setpoint(0.0, 0.37, 1.1) == (0.37, False)


def test_lower_clamp_is_logged(caplog):
    with caplog.at_level(logging.DEBUG, logger="dvpp.plants"):
        assert to_absolute_setpoint(-0.5, 0.2, 1.1) == (0.0, True)
    assert "lower clamp" in caplog.text


def test_upper_clamp():
    assert to_absolute_setpoint(2.0, 0.2, 1.1) == (1.1, True)


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(0, 2), st.floats(0, 2))
def test_clamp_keeps_power_in_range(delta, p_ref, extra):
    p_max = p_ref + extra
    p, _ = to_absolute_setpoint(delta, p_ref, p_max)
    assert 0.0 <= p <= p_max


def test_capacity_profile_is_piecewise_constant():
    prof = CapacityProfile(0.2, 1.1, [(2000, 0.1, 1.1), (500, 0.15, 0.9)])
    assert prof.at(0) == (0.2, 1.1)
    assert prof.at(500) == (0.15, 0.9)
    assert prof.at(1999) == (0.15, 0.9)
    assert prof.at(10**6) == (0.1, 1.1)
    with pytest.raises(ValueError):
        CapacityProfile(0.5, 0.4)
    with pytest.raises(ValueError):
        CapacityProfile(-0.1, 0.4)
