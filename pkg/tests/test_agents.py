"""Synthetic drivers: intents, limb torque, shared-control equilibria."""

import dataclasses
import math

import numpy as np
import pytest

from hapticdrive.agents import (EXPERT_PRESET, NOVICE_PRESET, AgentParams,
                                DriverAgent, agent_torques,
                                pure_pursuit_wheel_angle, perturbed_preset,
                                skill_preset)
from hapticdrive.constants import DEVICE_DT, TRUE_TARGET_SPEED
from hapticdrive.guidance import GuidanceGains, PidState, pid_steering_assist
from hapticdrive.plant import (DEFAULT_DEVICES, DEFAULT_VEHICLE, DeviceState,
                               VehicleState, step_device)
from hapticdrive.track import build_training_path

QUIET = dataclasses.replace(EXPERT_PRESET, noise_sigma_steer=0.0,
                            noise_sigma_accel=0.0)


def test_presets_contrast():
    assert EXPERT_PRESET.reaction_delay < NOVICE_PRESET.reaction_delay
    assert EXPERT_PRESET.noise_sigma_steer < NOVICE_PRESET.noise_sigma_steer
    assert EXPERT_PRESET.arm_stiffness > NOVICE_PRESET.arm_stiffness
    assert skill_preset("expert") is EXPERT_PRESET
    assert skill_preset("novice") is NOVICE_PRESET


def test_equilibrium_intents_on_midline_at_speed():
    path = build_training_path(0.0)
    agent = DriverAgent(path, QUIET, seed=0)
    state = VehicleState(x=100.0, y=0.0, heading=0.0, v=TRUE_TARGET_SPEED)
    for _ in range(30):  # flush the delay queue
        intent_s, intent_a = agent.tick(state)
    assert intent_s == pytest.approx(0.0, abs=1e-9)
    assert 0.0 < intent_a < 4.0  # cruise-hold pedal intent


def test_pursuit_steers_back_from_left_offset():
    path = build_training_path(0.0)
    theta = pure_pursuit_wheel_angle(path, (100.0, 1.0), 0.0, 15.0,
                                     QUIET, DEFAULT_VEHICLE)
    assert theta < 0.0  # left of midline: steer right


def test_pursuit_steers_into_left_curve():
    path = build_training_path(math.radians(90))
    pos = path.point_at(250.0)
    theta = pure_pursuit_wheel_angle(path, pos, path.heading_at(250.0),
                                     15.0, QUIET, DEFAULT_VEHICLE)
    assert theta > 5.0


def test_limb_torque_zero_at_rest_on_intent():
    dev = DeviceState(theta_s=5.0, theta_a=2.0)
    t_s, t_a, t_b = agent_torques(5.0, 2.0, dev, EXPERT_PRESET)
    assert (t_s, t_a) == (0.0, 0.0)
    assert t_b == pytest.approx(0.0, abs=1e-12)


def test_limb_torque_spring_damper_law():
    dev = DeviceState(theta_s=3.0, theta_s_dot=10.0)
    t_s, _, _ = agent_torques(5.0, 0.0, dev, EXPERT_PRESET)
    expected = EXPERT_PRESET.arm_stiffness * 2.0 - EXPERT_PRESET.arm_damping * 10.0
    assert t_s == pytest.approx(expected, abs=1e-12)


def _settle_shared_wheel(arm_stiffness: float, intent: float, desired: float,
                         steps: int = 24000) -> float:
    """Integrate wheel + arm + proportional guidance until steady state."""
    params = dataclasses.replace(EXPERT_PRESET, arm_stiffness=arm_stiffness,
                                 arm_damping=0.08)
    gains = GuidanceGains(kp=0.60, ki=0.0, kd=0.0)
    pid = PidState()
    dev = DeviceState()
    for _ in range(steps):
        t_s, _, _ = agent_torques(intent, 0.0, dev, params)
        assist = pid_steering_assist(dev.theta_s - desired, pid, DEVICE_DT, gains)
        fb = -assist - 5.0 * 0.002 * dev.theta_s_dot
        dev = step_device(dev, (fb, 0.0, 0.0), (t_s, 0.0, 0.0))
    return dev.theta_s


def test_static_force_balance_between_arm_and_guidance():
    intent, desired = 10.0, 2.0
    k_arm, k_pid = 0.5, 0.60
    theta = _settle_shared_wheel(k_arm, intent, desired)
    expected = (k_arm * intent + k_pid * desired) / (k_arm + k_pid)
    assert theta == pytest.approx(expected, abs=0.02)


def test_stiffer_arm_pulls_steady_state_toward_intent():
    intent, desired = 10.0, 2.0
    thetas = [_settle_shared_wheel(k, intent, desired)
              for k in (0.2, 0.5, 1.0, 2.0)]
    assert all(b > a for a, b in zip(thetas, thetas[1:]))
    assert all(desired < t < intent for t in thetas)


def test_agent_deterministic_given_seed():
    path = build_training_path(0.0)
    state = VehicleState(x=50.0, y=0.3, heading=0.01, v=12.0)
    a = DriverAgent(path, NOVICE_PRESET, seed=9)
    b = DriverAgent(path, NOVICE_PRESET, seed=9)
    for _ in range(50):
        assert a.tick(state) == b.tick(state)


def test_zero_noise_is_deterministic_controller():
    path = build_training_path(0.0)
    state = VehicleState(x=50.0, y=0.0, heading=0.0, v=17.4)
    a = DriverAgent(path, QUIET, seed=1)
    b = DriverAgent(path, QUIET, seed=2)  # seed must not matter without noise
    for _ in range(50):
        assert a.tick(state) == b.tick(state)


def test_perturbed_presets_differ_but_keep_noise():
    rng = np.random.default_rng(0)
    variants = [perturbed_preset(EXPERT_PRESET, rng) for _ in range(5)]
    lookaheads = {v.lookahead_time for v in variants}
    assert len(lookaheads) == 5
    for v in variants:
        assert v.noise_sigma_steer == EXPERT_PRESET.noise_sigma_steer
        assert abs(v.lookahead_time - EXPERT_PRESET.lookahead_time) \
            <= 0.1 * EXPERT_PRESET.lookahead_time + 1e-12


def test_delay_queue_length():
    assert EXPERT_PRESET.delay_ticks == 5
    assert NOVICE_PRESET.delay_ticks == 15
