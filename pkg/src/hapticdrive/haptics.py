"""Ambient torque feedback laws for the steering wheel and pedals.

All three laws are pure functions of instantaneous device state. Sign
conventions, fixed project-wide:

* Steering torques are returned ready to apply on the wheel axis
  (positive = counterclockwise at the rim); the damping and Coulomb terms
  therefore come out negative when the wheel rotates positive.
* Pedal torques are returned in the resist convention: positive pushes
  the foot upward (toward smaller pedal angle). The device loop negates
  them when integrating the pedal axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable


@dataclass(frozen=True)
class HapticParams:
    """Torque-law constants; defaults are the tuned production values."""

    shaft_gain: float = 0.75            # m, column transmission gain
    steer_damping: float = 0.002        # N*m*s/deg
    steer_friction: float = 0.1         # N*m, Coulomb magnitude
    pedal_stiffness: float = 0.2        # N*m/deg, accelerator and brake
    pedal_damping: float = 0.001        # N*m*s/deg
    accel_rest_deg: float = -5.0        # spring anchor below the travel start
    brake_rest_deg: float = -5.0
    accel_max_deg: float = 10.0         # virtual endpoint angles
    brake_max_deg: float = 5.0
    gravity_comp: Callable[[float], float] = field(default=lambda theta: 0.0)

    @property
    def endpoint_stiffness(self) -> float:
        """Unilateral endpoint spring; fixed at ten times the pedal spring."""
        return 10.0 * self.pedal_stiffness


DEFAULT_HAPTICS = HapticParams()


def unilateral_endpoint_torque(theta: float, endpoint_deg: float,
                               stiffness: float) -> float:
    """Resisting torque felt only past a virtual endpoint angle."""
    if theta < endpoint_deg:
        return 0.0
    return stiffness * (theta - endpoint_deg)


def steering_torque(f_fl: float, f_fr: float, theta_s_dot: float,
                    params: HapticParams = DEFAULT_HAPTICS) -> float:
    """Wheel torque: self-alignment from the front-tire lateral forces plus
    viscous and Coulomb friction opposing the rotation."""
    align = params.shaft_gain * 0.5 * (f_fl + f_fr)
    damping = -params.steer_damping * theta_s_dot
    if theta_s_dot > 0.0:
        friction = -params.steer_friction
    elif theta_s_dot < 0.0:
        friction = params.steer_friction
    else:
        friction = 0.0
    return align + damping + friction


def accelerator_torque(theta_a: float, theta_a_dot: float,
                       params: HapticParams = DEFAULT_HAPTICS,
                       endpoint_deg: float | None = None) -> float:
    """Accelerator resist torque: restoring spring from the rest anchor,
    unilateral endpoint spring, viscous damping, gravity compensation.

    ``endpoint_deg`` overrides the virtual endpoint (used by guidance);
    None keeps the standard travel endpoint.
    """
    if endpoint_deg is None:
        endpoint_deg = params.accel_max_deg
    spring = params.pedal_stiffness * (theta_a - params.accel_rest_deg)
    endpoint = unilateral_endpoint_torque(theta_a, endpoint_deg,
                                          params.endpoint_stiffness)
    damping = params.pedal_damping * theta_a_dot
    return spring + endpoint + damping + params.gravity_comp(theta_a)


def brake_torque(theta_b: float, theta_b_dot: float,
                 params: HapticParams = DEFAULT_HAPTICS,
                 endpoint_deg: float | None = None) -> float:
    """Brake resist torque; same structure as the accelerator with a 5 deg
    travel endpoint."""
    if endpoint_deg is None:
        endpoint_deg = params.brake_max_deg
    spring = params.pedal_stiffness * (theta_b - params.brake_rest_deg)
    endpoint = unilateral_endpoint_torque(theta_b, endpoint_deg,
                                          params.endpoint_stiffness)
    damping = params.pedal_damping * theta_b_dot
    return spring + endpoint + damping + params.gravity_comp(theta_b)


def throttle_fraction(theta_a: float, params: HapticParams = DEFAULT_HAPTICS) -> float:
    """Normalized throttle command from the accelerator angle."""
    return min(max(theta_a, 0.0), params.accel_max_deg) / params.accel_max_deg


def brake_fraction(theta_b: float, params: HapticParams = DEFAULT_HAPTICS) -> float:
    """Normalized brake command from the brake angle."""
    return min(max(theta_b, 0.0), params.brake_max_deg) / params.brake_max_deg
