"""Synthetic drivers standing in for human participants.

An agent forms intended wheel/pedal angles (pure pursuit for steering, a
PI speed law for the accelerator), delays them by its reaction time,
perturbs them with smooth seeded noise, and then acts on the devices
through limb impedance: torque proportional to the gap between intent and
the actual device angle. Torque-domain coupling is what lets guidance
physically pull an agent's hand, and lets a stiff hand overpower guidance.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .constants import TICK_DT, TRUE_TARGET_SPEED
from .plant import DeviceState, VehicleParams, VehicleState
from .track import TrackPath, closest_midline_point, wrap_angle


@dataclass(frozen=True)
class AgentParams:
    lookahead_time: float = 1.2        # s, pure-pursuit horizon
    min_lookahead: float = 12.0        # m, bounds the wheel response at crawl
    pursuit_gain: float = 1.0
    speed_kp: float = 1.2              # deg per (m/s) of speed error
    speed_ki: float = 0.25             # deg per m of accumulated error
    speed_feedforward: float = 2.0     # deg, rough cruise pedal intent
    speed_integral_span: float = 2.0   # deg, trim authority of the integral
    pedal_rate_limit: float = 12.0     # deg/s, how fast intent may slew
    reaction_delay: float = 0.1        # s, multiple of the tick period
    noise_sigma_steer: float = 0.5     # deg, stationary std of intent noise
    noise_sigma_accel: float = 0.1     # deg
    noise_corr_time: float = 2.0       # s, noise correlation time
    lane_wander_sigma: float = 0.0     # m, slow in-lane drift of the aim point
    lane_wander_corr_time: float = 8.0  # s
    arm_stiffness: float = 0.5         # N*m/deg
    arm_damping: float = 0.05          # N*m*s/deg
    leg_stiffness: float = 1.0
    leg_damping: float = 0.05
    target_speed: float = TRUE_TARGET_SPEED

    @property
    def delay_ticks(self) -> int:
        return int(round(self.reaction_delay / TICK_DT))


EXPERT_PRESET = AgentParams()
NOVICE_PRESET = AgentParams(
    lookahead_time=0.7,
    reaction_delay=0.3,
    noise_sigma_steer=2.0,
    noise_sigma_accel=0.6,
    noise_corr_time=1.0,
    arm_stiffness=0.2,
    arm_damping=0.02,
    speed_kp=0.8,
    speed_ki=0.15,
    pedal_rate_limit=30.0,
    leg_stiffness=0.5,
    leg_damping=0.03,
)

PRESETS = {"expert": EXPERT_PRESET, "novice": NOVICE_PRESET}


def skill_preset(tag: str) -> AgentParams:
    return PRESETS[tag]


def perturbed_preset(base: AgentParams, rng: np.random.Generator,
                     spread: float = 0.10) -> AgentParams:
    """An individual variant of a preset: control gains jittered, noise and
    impedance kept; used to emulate a pool of distinct drivers."""
    def j(v):
        return float(v * (1.0 + rng.uniform(-spread, spread)))
    return replace(base,
                   lookahead_time=j(base.lookahead_time),
                   pursuit_gain=j(base.pursuit_gain),
                   speed_kp=j(base.speed_kp),
                   speed_ki=j(base.speed_ki))


class _OrnsteinUhlenbeck:
    """Exact-discretization OU noise: stationary std sigma, seeded."""

    def __init__(self, sigma: float, corr_time: float, rng: np.random.Generator):
        self.sigma = sigma
        self.decay = math.exp(-TICK_DT / corr_time)
        self.scale = sigma * math.sqrt(1.0 - self.decay * self.decay)
        self.rng = rng
        self.value = float(rng.normal(0.0, sigma)) if sigma > 0 else 0.0

    def step(self) -> float:
        if self.sigma == 0.0:
            return 0.0
        self.value = self.value * self.decay + self.scale * float(self.rng.normal())
        return self.value


def pure_pursuit_wheel_angle(path: TrackPath, position: tuple[float, float],
                             heading: float, v: float, params: AgentParams,
                             vehicle: VehicleParams,
                             aim_offset: float = 0.0) -> float:
    """Intended wheel angle (deg) toward the midline look-ahead point;
    ``aim_offset`` shifts the aim point laterally (left positive)."""
    q = closest_midline_point(path, position)
    d_look = max(params.min_lookahead, v * params.lookahead_time)
    s_target = min(q.s + d_look, path.total_length)
    tx, ty = path.point_at(s_target)
    if aim_offset != 0.0:
        h_t = path.heading_at(s_target)
        tx -= aim_offset * math.sin(h_t)
        ty += aim_offset * math.cos(h_t)
    dx, dy = tx - position[0], ty - position[1]
    dist = math.hypot(dx, dy)
    if dist < 1e-9:
        return 0.0
    alpha = wrap_angle(math.atan2(dy, dx) - heading)
    delta = math.atan2(2.0 * vehicle.wheelbase * math.sin(alpha), dist)
    return math.degrees(delta) * vehicle.steering_ratio * params.pursuit_gain


class DriverAgent:
    """Stateful per-session driver: intent pipeline plus limb impedance."""

    def __init__(self, path: TrackPath, params: AgentParams, seed: int,
                 vehicle: VehicleParams = VehicleParams()):
        self.path = path
        self.params = params
        self.vehicle = vehicle
        rng = np.random.default_rng(seed)
        self._noise_s = _OrnsteinUhlenbeck(params.noise_sigma_steer,
                                           params.noise_corr_time, rng)
        self._noise_a = _OrnsteinUhlenbeck(params.noise_sigma_accel,
                                           params.noise_corr_time, rng)
        self._wander = _OrnsteinUhlenbeck(params.lane_wander_sigma,
                                          params.lane_wander_corr_time, rng)
        n_delay = params.delay_ticks
        self._queue_s: deque[float] = deque([0.0] * n_delay, maxlen=max(1, n_delay + 1))
        self._queue_a: deque[float] = deque([0.0] * n_delay, maxlen=max(1, n_delay + 1))
        self._speed_integral = 0.0
        self._prev_raw_a = 0.0
        self.intent_s = 0.0
        self.intent_a = 0.0

    def tick(self, state: VehicleState) -> tuple[float, float]:
        """Update intents from the current vehicle state; 50 Hz."""
        p = self.params
        raw_s = pure_pursuit_wheel_angle(self.path, (state.x, state.y),
                                         state.heading, state.v, p, self.vehicle,
                                         aim_offset=self._wander.step())
        err_v = p.target_speed - state.v
        raw_a = p.speed_feedforward + p.speed_kp * err_v \
            + p.speed_ki * self._speed_integral
        # integrate only while unsaturated, and cap the trim authority
        if -2.0 < raw_a < 10.0 and p.speed_ki > 0:
            self._speed_integral += err_v * TICK_DT
            cap = p.speed_integral_span / p.speed_ki
            self._speed_integral = min(max(self._speed_integral, -cap), cap)
            raw_a = p.speed_feedforward + p.speed_kp * err_v \
                + p.speed_ki * self._speed_integral
        raw_a = min(max(raw_a, -2.0), 10.0)
        slew = p.pedal_rate_limit * TICK_DT
        raw_a = min(max(raw_a, self._prev_raw_a - slew), self._prev_raw_a + slew)
        self._prev_raw_a = raw_a

        self._queue_s.append(raw_s)
        self._queue_a.append(raw_a)
        self.intent_s = self._queue_s[0] + self._noise_s.step()
        self.intent_a = self._queue_a[0] + self._noise_a.step()
        return (self.intent_s, self.intent_a)

    def torques(self, dev: DeviceState) -> tuple[float, float, float]:
        """Limb torques on (wheel, accelerator, brake); 800 Hz."""
        return agent_torques(self.intent_s, self.intent_a, dev, self.params)


def agent_torques(intent_s: float, intent_a: float, dev: DeviceState,
                  params: AgentParams, intent_b: float = 0.0) -> tuple[float, float, float]:
    """Spring-damper limb law per axis; the brake foot hovers at its intent
    (normally zero) through the same leg impedance."""
    t_s = params.arm_stiffness * (intent_s - dev.theta_s) \
        - params.arm_damping * dev.theta_s_dot
    t_a = params.leg_stiffness * (intent_a - dev.theta_a) \
        - params.leg_damping * dev.theta_a_dot
    t_b = params.leg_stiffness * (intent_b - dev.theta_b) \
        - params.leg_damping * dev.theta_b_dot
    return (t_s, t_a, t_b)
