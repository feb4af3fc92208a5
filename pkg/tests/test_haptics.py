"""Ambient torque laws: worked values, continuity, monotonicity, signs."""

import pytest
from hypothesis import given, strategies as st

from hapticdrive.haptics import (DEFAULT_HAPTICS, accelerator_torque,
                                 brake_fraction, brake_torque,
                                 steering_torque, throttle_fraction,
                                 unilateral_endpoint_torque)

angles = st.floats(min_value=-20.0, max_value=20.0,
                   allow_nan=False, allow_infinity=False)
rates = st.floats(min_value=-500.0, max_value=500.0,
                  allow_nan=False, allow_infinity=False)


def test_steering_torque_worked_values():
    assert steering_torque(0.0, 0.0, 0.0) == pytest.approx(0.0, abs=1e-9)
    assert steering_torque(4.0, 4.0, 0.0) == pytest.approx(3.0, abs=1e-9)
    assert steering_torque(0.0, 0.0, 100.0) == pytest.approx(-0.3, abs=1e-9)
    assert steering_torque(0.0, 0.0, -100.0) == pytest.approx(0.3, abs=1e-9)


def test_accelerator_torque_worked_values():
    assert accelerator_torque(0.0, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert accelerator_torque(10.0, 0.0) == pytest.approx(3.0, abs=1e-9)
    assert accelerator_torque(12.0, 0.0) == pytest.approx(7.4, abs=1e-9)


def test_brake_torque_worked_values():
    assert brake_torque(0.0, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert brake_torque(5.0, 0.0) == pytest.approx(2.0, abs=1e-9)
    assert brake_torque(6.0, 0.0) == pytest.approx(4.2, abs=1e-9)


def test_endpoint_term_continuity_at_travel_limit():
    k = DEFAULT_HAPTICS.endpoint_stiffness
    assert unilateral_endpoint_torque(10.0, 10.0, k) == 0.0
    h = 1e-7
    below = accelerator_torque(10.0 - h, 0.0)
    at = accelerator_torque(10.0, 0.0)
    above = accelerator_torque(10.0 + h, 0.0)
    slope_below = (at - below) / h
    slope_above = (above - at) / h
    assert abs(at - 3.0) <= 1e-12
    assert slope_below == pytest.approx(0.2, abs=1e-5)
    assert slope_above == pytest.approx(0.2 + 2.0, abs=1e-5)


def test_endpoint_stiffness_is_ten_times_spring():
    assert DEFAULT_HAPTICS.endpoint_stiffness == 10.0 * DEFAULT_HAPTICS.pedal_stiffness
    assert DEFAULT_HAPTICS.endpoint_stiffness == pytest.approx(2.0, abs=1e-12)


@given(theta=angles, rate=rates)
def test_accelerator_monotone_in_angle(theta, rate):
    assert accelerator_torque(theta + 0.5, rate) > accelerator_torque(theta, rate)


@given(rate=rates.filter(lambda r: r != 0.0))
def test_steering_friction_opposes_motion(rate):
    t = steering_torque(0.0, 0.0, rate)
    assert t != 0.0
    assert (t < 0) == (rate > 0)


@given(theta=angles, rate=rates)
def test_torque_laws_are_pure(theta, rate):
    assert accelerator_torque(theta, rate) == accelerator_torque(theta, rate)
    assert brake_torque(theta, rate) == brake_torque(theta, rate)
    assert steering_torque(theta, theta, rate) == steering_torque(theta, theta, rate)


def test_pedal_fraction_mapping():
    assert throttle_fraction(-3.0) == 0.0
    assert throttle_fraction(5.0) == 0.5
    assert throttle_fraction(10.0) == 1.0
    assert throttle_fraction(12.0) == 1.0
    assert brake_fraction(2.5) == 0.5
    assert brake_fraction(7.0) == 1.0
