"""Trial measures: batch functions, streaming equivalence, report IO."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hapticdrive.constants import TICK_DT, TRUE_TARGET_SPEED
from hapticdrive.metrics import (LogTooShort, MetricsReport,
                                 NeverReachedTarget, StreamingMetrics,
                                 format_report_table, metrics_report,
                                 pedaling_speed, predictive_errors,
                                 steering_errors, velocity_error,
                                 write_reports_csv)
from hapticdrive.runlog import RunLogBuilder
from hapticdrive.skillnet import Normalizer, init_skillnet
from hapticdrive.track import build_training_path


def _norm(control_lo=-30.0, control_hi=30.0):
    lo = np.array([control_lo, 0.0, -20.0, 700.0, 0.01, 0.01, 0.01, 0.01, 0.01])
    hi = np.array([control_hi, 25.0, 20.0, 2500.0, 1.0, 1.0, 1.0, 1.0, 1.0])
    return Normalizer(lo, hi)


def _zero_net(channel="steer", norm=None):
    net = init_skillnet(norm or _norm(), channel, seed=0)
    net.weights = [np.zeros_like(w) for w in net.weights]
    net.biases = [np.zeros_like(b) for b in net.biases]
    return net


def _build_log(n=120, theta_s=None, theta_a=None, v=None, theta_a_dot=None,
               xs=None, ys=None, headings=None):
    b = RunLogBuilder()
    theta_s = theta_s if theta_s is not None else np.zeros(n)
    theta_a = theta_a if theta_a is not None else np.zeros(n)
    v = v if v is not None else np.full(n, 10.0)
    theta_a_dot = theta_a_dot if theta_a_dot is not None else np.zeros(n)
    xs = xs if xs is not None else np.arange(n) * 0.2
    ys = ys if ys is not None else np.zeros(n)
    headings = headings if headings is not None else np.zeros(n)
    for k in range(n):
        b.append("N", t=k * TICK_DT, x=xs[k], y=ys[k], heading=headings[k],
                 v=v[k], yaw_rate=0.0, rpm=900.0, theta_s=theta_s[k],
                 theta_s_dot=0.0, theta_a=theta_a[k], theta_a_dot=theta_a_dot[k],
                 theta_b=0.0, theta_b_dot=0.0,
                 d1=40.0, d2=50.0, d3=60.0, d4=50.0, d5=40.0,
                 tq_assist_s=0.0, tq_assist_a=0.0, tq_feedback_s=0.0,
                 tq_feedback_a=0.0, tq_feedback_b=0.0, tq_driver_s=0.0,
                 tq_driver_a=0.0, tq_driver_b=0.0)
    return b.build()


# -- predictive errors -----------------------------------------------------

def test_predictive_errors_zero_for_perfect_model():
    # constant channels at the normalizer midpoint: the zero net is exact
    log = _build_log(theta_s=np.zeros(120), theta_a=np.full(120, 1.0))
    net_s = _zero_net("steer")
    net_a = _zero_net("accel", _norm(-3.0, 5.0))  # midpoint 1.0
    es, ea = predictive_errors(log, net_s, net_a)
    assert es == pytest.approx(0.0, abs=1e-12)
    assert ea == pytest.approx(0.0, abs=1e-12)


def test_predictive_errors_constant_offset():
    log = _build_log(theta_s=np.full(120, 3.0), theta_a=np.full(120, 1.0))
    net_s = _zero_net("steer")          # predicts 0, actual 3
    net_a = _zero_net("accel", _norm(-3.0, 5.0))
    es, ea = predictive_errors(log, net_s, net_a)
    assert es == pytest.approx(3.0 / 60.0 * 100.0, abs=1e-9)
    assert ea == pytest.approx(0.0, abs=1e-12)


def test_predictive_errors_too_short():
    log = _build_log(n=50)
    with pytest.raises(LogTooShort):
        predictive_errors(log, _zero_net(), _zero_net("accel", _norm(-3, 5)))


# -- steering errors ----------------------------------------------------------

def test_steering_errors_on_midline():
    path = build_training_path(0.0)
    log = _build_log(xs=np.linspace(1, 500, 120))
    e_d, e_delta = steering_errors(log, path)
    assert e_d == pytest.approx(0.0, abs=1e-9)
    assert e_delta == pytest.approx(0.0, abs=1e-9)


def test_steering_errors_constant_offset():
    path = build_training_path(0.0)
    log = _build_log(xs=np.linspace(1, 500, 120), ys=np.full(120, 0.5))
    e_d, e_delta = steering_errors(log, path)
    assert e_d == pytest.approx(0.5, abs=1e-9)
    assert e_delta == pytest.approx(0.0, abs=1e-9)


# -- velocity error ---------------------------------------------------------------

def test_velocity_error_zero_after_exact_hold():
    v = np.concatenate([np.linspace(0, TRUE_TARGET_SPEED, 50),
                        np.full(70, TRUE_TARGET_SPEED)])
    assert velocity_error(_build_log(v=v)) == pytest.approx(0.0, abs=1e-12)


def test_velocity_error_constant_offset_after_crossing():
    v = np.concatenate([np.linspace(0, 18.4, 60), np.full(60, 18.4)])
    # first crossing at the sample >= 17.4; strictly-after samples all 18.4?
    # construct explicitly to avoid ramp samples after the crossing
    v = np.concatenate([np.linspace(0, 17.0, 58), [17.5], np.full(61, 18.4)])
    e = velocity_error(_build_log(v=v))
    assert e == pytest.approx(1.0, abs=1e-12)


def test_velocity_error_requires_crossing():
    with pytest.raises(NeverReachedTarget):
        velocity_error(_build_log(v=np.full(120, 12.0)))
    with pytest.raises(NeverReachedTarget):
        velocity_error(_build_log(v=np.concatenate(
            [np.full(119, 12.0), [TRUE_TARGET_SPEED]])))


# -- pedaling speed ---------------------------------------------------------------

def test_pedaling_speed_constant_angle():
    assert pedaling_speed(_build_log()) == 0.0


def test_pedaling_speed_alternating_rate():
    rates = np.tile([2.0, -2.0], 60)
    assert pedaling_speed(_build_log(theta_a_dot=rates)) == pytest.approx(2.0, abs=1e-12)


def test_pedaling_speed_matches_finite_difference_oracle():
    # quadratic pedal trajectory: central differences are exact
    t = np.arange(120) * TICK_DT
    theta = 0.3 * t * t + 0.1 * t
    rate = 0.6 * t + 0.1
    log = _build_log(theta_a=theta, theta_a_dot=rate)
    fd = (theta[2:] - theta[:-2]) / (2 * TICK_DT)
    oracle = math.sqrt(float(np.mean(np.square(np.abs(fd)))))
    ours = math.sqrt(float(np.mean(np.square(rate[1:-1]))))
    assert ours == pytest.approx(oracle, abs=1e-6)
    assert pedaling_speed(log) == pytest.approx(
        math.sqrt(float(np.mean(np.square(rate)))), abs=1e-12)


# -- invariance properties ----------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_rms_metrics_permutation_and_scaling(seed):
    rng = np.random.default_rng(seed)
    rates = rng.uniform(-5, 5, 80)
    perm = rng.permutation(80)
    a = pedaling_speed(_build_log(n=80, theta_a_dot=rates))
    b = pedaling_speed(_build_log(n=80, theta_a_dot=rates[perm]))
    assert a == pytest.approx(b, abs=1e-12)
    c = pedaling_speed(_build_log(n=80, theta_a_dot=3.0 * rates))
    assert c == pytest.approx(3.0 * a, rel=1e-12)


# -- streaming ---------------------------------------------------------------------

def test_streaming_matches_batch_on_synthetic_channels():
    rng = np.random.default_rng(4)
    n = 200
    e_d = rng.uniform(-1, 1, n)
    e_delta = rng.uniform(-5, 5, n)
    v = np.linspace(10, 19, n)
    rate = rng.uniform(-3, 3, n)
    sm = StreamingMetrics()
    for k in range(n):
        sm.push(e_d[k], e_delta[k], v[k], rate[k], 0.0, 0.0)
    snap = sm.snapshot()
    assert snap["lane_distance_rms"] == pytest.approx(
        math.sqrt(np.mean(e_d ** 2)), abs=1e-12)
    assert snap["heading_error_rms"] == pytest.approx(
        math.sqrt(np.mean(e_delta ** 2)), abs=1e-12)
    assert snap["pedal_speed_rms"] == pytest.approx(
        math.sqrt(np.mean(np.abs(rate) ** 2)), abs=1e-12)
    crossing = int(np.nonzero(v >= TRUE_TARGET_SPEED)[0][0])
    batch_ev = math.sqrt(np.mean((v[crossing + 1:] - TRUE_TARGET_SPEED) ** 2))
    assert snap["velocity_error_rms"] == pytest.approx(batch_ev, abs=1e-12)


# -- reports -------------------------------------------------------------------------

def test_metrics_report_and_csv(tmp_path):
    path = build_training_path(0.0)
    log = _build_log(xs=np.linspace(1, 500, 120), v=np.full(120, 18.0))
    rep = metrics_report(log, path, label="demo")
    assert rep.pred_steer_pct is None
    assert rep.lane_distance_rms == pytest.approx(0.0, abs=1e-9)
    assert rep.velocity_error_rms == pytest.approx(0.6, abs=1e-9)
    assert rep.n_samples == 120
    out = tmp_path / "reports.csv"
    write_reports_csv([rep], out)
    lines = out.read_text().splitlines()
    assert lines[0] == MetricsReport.csv_header()
    assert lines[1].startswith("demo,N,120,")
    table = format_report_table([rep])
    assert "demo" in table and "Ed[m]" in table
