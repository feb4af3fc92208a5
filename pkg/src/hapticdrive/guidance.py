"""Shared-control guidance: desired-angle sources, PID steering assist,
unilateral pedal assist, and the 50-to-800 Hz reference smoothing.

Three methods:

* N - no guidance; the devices render only the ambient torques.
* G - desired angles come from the skill models' live predictions.
* C - desired wheel angle from look-ahead path errors; the pedal gets an
  overspeed cue by snapping the virtual endpoint to zero travel.

Torque values returned here follow the laws' published form: positive
assist opposes positive error. The device loop applies steering guidance
negated (so the wheel is pulled toward the desired angle) and pedal assist
through the usual pedal resist convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .constants import (KMH_PER_MS, OVERSPEED_KMH, SUBSTEPS_PER_TICK,
                        TICK_DT)
from .track import TrackPath, closest_midline_point, signed_lateral_offset, wrap_angle

METHODS = ("N", "G", "C")


@dataclass(frozen=True)
class GuidanceGains:
    kp: float = 0.60           # N*m/deg
    ki: float = 0.12           # N*m/(deg*s) on the running integral
    kd: float = 0.06           # N*m*s/deg
    stable_damping_factor: float = 5.0   # times the ambient wheel damping
    heading_gain: float = 7.65           # deg per deg of look-ahead error
    lateral_gain: float = 1.00           # deg per m of lateral error
    lookahead_time: float = 1.0          # s
    overspeed_kmh: float = OVERSPEED_KMH
    keep_alignment_torque: bool = False  # re-add ambient alignment under G/C


DEFAULT_GAINS = GuidanceGains()


class ReferenceSmoother:
    """Zero-order hold to 800 Hz plus a 16-tap moving average.

    One 50-Hz input per tick, one filtered output per sub-tick; a step
    input ramps to the new value in exactly one tick's worth of sub-ticks.
    Output is always inside the envelope of the contributing inputs.
    """

    def __init__(self, window: int = SUBSTEPS_PER_TICK):
        self.window = window
        self._held: float | None = None
        self._ring: list[float] = []
        self._idx = 0

    def push_tick(self, value: float) -> None:
        if self._held is None:
            self._ring = [value] * self.window
        self._held = value

    def step(self) -> float:
        if self._held is None:
            raise RuntimeError("smoother stepped before any input")
        self._ring[self._idx] = self._held
        self._idx = (self._idx + 1) % self.window
        return math.fsum(self._ring) / self.window


@dataclass
class PidState:
    """Integral accumulator that restarts whenever the error touches or
    crosses zero; the error signal is treated as zero-order-held between
    sub-ticks, so the integral is a plain rectangle sum."""

    integral: float = 0.0
    prev_error: float | None = None

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = None


def pid_steering_assist(error: float, state: PidState, dt: float,
                        gains: GuidanceGains = DEFAULT_GAINS) -> float:
    """PID assist magnitude for one sub-tick (positive opposes positive
    error); updates the integral/derivative state in place."""
    prev = state.prev_error
    crossed = (error == 0.0
               or (prev is not None and (prev == 0.0 or (prev > 0) != (error > 0))))
    if crossed:
        state.integral = 0.0
    if error != 0.0:
        state.integral += error * dt
    derivative = 0.0 if prev is None else (error - prev) / dt
    state.prev_error = error
    return gains.kp * error + gains.ki * state.integral + gains.kd * derivative


def nn_pedal_assist(theta_a: float, theta_hat_a: float,
                    endpoint_stiffness: float) -> float:
    """Unilateral pedal assist: resists only past the desired angle."""
    if theta_a < theta_hat_a:
        return 0.0
    return endpoint_stiffness * (theta_a - theta_hat_a)


def conventional_desired_steer(e_p: float, e_d: float,
                               gains: GuidanceGains = DEFAULT_GAINS) -> float:
    """Desired wheel angle (deg) from look-ahead and lateral errors."""
    return gains.heading_gain * e_p + gains.lateral_gain * e_d


def conventional_pedal_endpoint(v_kmh: float, accel_max_deg: float,
                                accel_min_deg: float = 0.0,
                                gains: GuidanceGains = DEFAULT_GAINS) -> float:
    """Virtual pedal endpoint: normal travel below the overspeed criterion,
    zero travel at or above it (an immediate upward cue)."""
    return accel_max_deg if v_kmh < gains.overspeed_kmh else accel_min_deg


def conventional_pedal_error(theta_a: float, v_kmh: float,
                             accel_max_deg: float = 10.0,
                             accel_min_deg: float = 0.0,
                             gains: GuidanceGains = DEFAULT_GAINS) -> float:
    """Pedal error against the overspeed-switched endpoint; torque follows
    only when the error is non-negative (unilateral law)."""
    return theta_a - conventional_pedal_endpoint(v_kmh, accel_max_deg,
                                                 accel_min_deg, gains)


def lookahead_errors(path: TrackPath, position: tuple[float, float],
                     heading: float, v: float,
                     lookahead_time: float = 1.0) -> tuple[float, float, float]:
    """(e_p, e_d, e_delta): look-ahead direction error and heading error in
    degrees, signed lateral offset in meters (left of midline positive).

    e_p is the bearing of the midline point one look-ahead distance further
    along the path, relative to the heading (positive when the target lies
    to the left). When the look-ahead point coincides with the position,
    e_p degenerates to the (negated) heading error.
    """
    q = closest_midline_point(path, position)
    e_d = signed_lateral_offset(path, position, q)
    e_delta = math.degrees(wrap_angle(heading - q.tangent_heading))
    s_ahead = min(q.s + v * lookahead_time, path.total_length)
    tx, ty = path.point_at(s_ahead)
    dx, dy = tx - position[0], ty - position[1]
    if math.hypot(dx, dy) < 1e-9:
        e_p = -e_delta
    else:
        e_p = math.degrees(wrap_angle(math.atan2(dy, dx) - heading))
    return e_p, e_d, e_delta


class SteeringGuidance:
    """Per-session steering guidance state: reference smoother plus PID.

    ``sub_step`` runs once per 800-Hz sub-tick and returns the torque to
    apply on the wheel axis (already negated and combined with the extra
    stabilizing damping of the guidance mode).
    """

    def __init__(self, gains: GuidanceGains, steer_damping: float):
        self.gains = gains
        self.smoother = ReferenceSmoother()
        self.pid = PidState()
        self.stable_damping = gains.stable_damping_factor * steer_damping
        self.last_assist = 0.0   # published law value, for logging/UI

    def push_desired(self, theta_s_d: float) -> None:
        self.smoother.push_tick(theta_s_d)

    def sub_step(self, theta_s: float, theta_s_dot: float, dt: float) -> float:
        desired = self.smoother.step()
        assist = pid_steering_assist(theta_s - desired, self.pid, dt, self.gains)
        self.last_assist = assist
        return -assist - self.stable_damping * theta_s_dot
