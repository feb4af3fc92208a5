"""Vehicle and control-device dynamics.

The vehicle is a rear-axle kinematic bicycle with simple longitudinal
dynamics (flat engine torque through one effective gear, quadratic drag,
rolling resistance, brake force). The wheel and both pedals are simulated
as rigid axes driven by driver torque plus feedback torque, integrated
semi-implicitly at 800 Hz with stiff-spring travel stops.

Front lateral tire forces come in two frames:

* ``lateral_front_forces`` returns the physical tire-frame forces
  (positive points left; together they balance the front-axle share of the
  centripetal force, each saturated).
* ``column_reaction_forces`` converts them to the steering-column frame the
  torque feedback law consumes: negated (the column transmits the road's
  reaction, which re-centers the wheel) and scaled down to the magnitudes a
  power-assisted column delivers at the rim. Feeding raw tire-frame values
  into the feedback law would rail the wheel against its torque limit at
  any speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import DEVICE_DT, TICK_DT


class NonFinite(RuntimeError):
    """A state component left the finite range."""


TAU = 2.0 * math.pi


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1900.0                  # kg
    wheelbase: float = 2.9                # m
    width: float = 1.8                    # m
    length: float = 5.0                   # m
    steering_ratio: float = 12.0          # wheel deg per road-wheel deg
    cornering_stiffness_front: float = 80e3   # N/rad, whole front axle
    tire_force_max: float = 8e3           # N per wheel, saturation
    column_scale: float = 500.0           # tire-frame N per column-frame N
    wheel_radius: float = 0.32            # m
    # Single effective gear, calibrated so 17.4 m/s corresponds to 2000 RPM.
    effective_drive_ratio: float = 2000.0 * (TAU * 0.32) / (17.4 * 60.0)
    idle_rpm: float = 800.0
    max_engine_torque: float = 400.0      # N*m, flat map
    max_brake_force: float = 10e3         # N at full pedal
    drag_coefficient: float = 0.40        # N/(m/s)^2 lumped aero term
    rolling_resistance: float = 0.012     # fraction of weight
    gravity: float = 9.81


DEFAULT_VEHICLE = VehicleParams()


@dataclass(frozen=True)
class VehicleState:
    """Pose plus the sensed channels: speed, yaw rate (deg/s), engine RPM,
    and the column-frame front lateral forces."""

    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    v: float = 0.0
    yaw_rate: float = 0.0        # deg/s, positive left
    rpm: float = 800.0
    f_fl: float = 0.0            # column frame, N
    f_fr: float = 0.0

    def require_finite(self) -> None:
        for name in ("x", "y", "heading", "v", "yaw_rate", "rpm", "f_fl", "f_fr"):
            if not math.isfinite(getattr(self, name)):
                raise NonFinite(f"vehicle state field {name} is not finite")


def engine_rpm(v: float, params: VehicleParams = DEFAULT_VEHICLE) -> float:
    """Engine speed through the single effective gear, floored at idle."""
    if v < 0:
        raise ValueError("v must be non-negative")
    return max(params.idle_rpm,
               v / (TAU * params.wheel_radius) * params.effective_drive_ratio * 60.0)


def lateral_front_forces(v: float, road_wheel_angle: float,
                         params: VehicleParams = DEFAULT_VEHICLE) -> tuple[float, float]:
    """Tire-frame lateral forces on the two front wheels, positive left.

    The pseudo slip angle is the one that makes the (unsaturated) axle force
    carry the front share of the centripetal force implied by the kinematic
    yaw rate; each wheel takes half, saturated independently.
    """
    omega = v * math.tan(road_wheel_angle) / params.wheelbase  # rad/s
    front_share = 0.5  # CG centered between the axles
    slip = front_share * params.mass * v * omega / params.cornering_stiffness_front
    per_wheel = 0.5 * params.cornering_stiffness_front * slip
    per_wheel = min(max(per_wheel, -params.tire_force_max), params.tire_force_max)
    return (per_wheel, per_wheel)


def column_reaction_forces(f_fl: float, f_fr: float,
                           params: VehicleParams = DEFAULT_VEHICLE) -> tuple[float, float]:
    """Tire-frame forces mapped to the steering-column frame (see module
    docstring): negated and scaled so the alignment feedback re-centers the
    wheel at rim-scale magnitudes."""
    return (-f_fl / params.column_scale, -f_fr / params.column_scale)


def step_vehicle(state: VehicleState, throttle: float, brake: float,
                 road_wheel_angle: float, dt: float = TICK_DT,
                 params: VehicleParams = DEFAULT_VEHICLE) -> VehicleState:
    """One 50-Hz vehicle update (semi-implicit: speed first, then pose)."""
    throttle = min(max(throttle, 0.0), 1.0)
    brake = min(max(brake, 0.0), 1.0)

    f_drive = throttle * params.max_engine_torque * params.effective_drive_ratio \
        / params.wheel_radius
    f_drag = params.drag_coefficient * state.v * state.v
    f_roll = params.rolling_resistance * params.mass * params.gravity if state.v > 0 else 0.0
    f_brake = brake * params.max_brake_force if state.v > 0 else 0.0
    accel = (f_drive - f_drag - f_roll - f_brake) / params.mass
    v = max(0.0, state.v + accel * dt)

    omega = v * math.tan(road_wheel_angle) / params.wheelbase  # rad/s
    heading = state.heading + omega * dt
    x = state.x + v * math.cos(heading) * dt
    y = state.y + v * math.sin(heading) * dt

    tire_fl, tire_fr = lateral_front_forces(v, road_wheel_angle, params)
    f_fl, f_fr = column_reaction_forces(tire_fl, tire_fr, params)
    nxt = VehicleState(
        x=x, y=y, heading=heading, v=v,
        yaw_rate=math.degrees(omega),
        rpm=engine_rpm(v, params),
        f_fl=f_fl, f_fr=f_fr,
    )
    nxt.require_finite()
    return nxt


# -- devices ---------------------------------------------------------------


@dataclass(frozen=True)
class DeviceParams:
    inertia_steer: float = 0.002    # N*m*s^2/deg
    inertia_accel: float = 0.0012
    inertia_brake: float = 0.0012
    steer_travel_deg: float = 459.0         # symmetric hard-stop simulation
    accel_travel_deg: tuple[float, float] = (0.0, 10.0)
    brake_travel_deg: tuple[float, float] = (0.0, 5.0)
    stop_stiffness: float = 40.0    # N*m/deg, travel-stop spring
    stop_damping: float = 0.3       # N*m*s/deg while intruding
    steer_torque_max: float = 16.58  # N*m, instantaneous feedback clamp
    pedal_torque_max: float = 27.8


DEFAULT_DEVICES = DeviceParams()


@dataclass(frozen=True)
class DeviceState:
    theta_s: float = 0.0
    theta_s_dot: float = 0.0
    theta_a: float = 0.0
    theta_a_dot: float = 0.0
    theta_b: float = 0.0
    theta_b_dot: float = 0.0

    def require_finite(self) -> None:
        for name in ("theta_s", "theta_s_dot", "theta_a", "theta_a_dot",
                     "theta_b", "theta_b_dot"):
            if not math.isfinite(getattr(self, name)):
                raise NonFinite(f"device state field {name} is not finite")


def _stop_torque(theta: float, theta_dot: float, lo: float, hi: float,
                 params: DeviceParams) -> float:
    if theta < lo:
        return params.stop_stiffness * (lo - theta) - params.stop_damping * theta_dot
    if theta > hi:
        return params.stop_stiffness * (hi - theta) - params.stop_damping * theta_dot
    return 0.0


def _step_axis(theta: float, theta_dot: float, torque: float, inertia: float,
               lo: float, hi: float, params: DeviceParams,
               dt: float) -> tuple[float, float]:
    torque += _stop_torque(theta, theta_dot, lo, hi, params)
    theta_dot += torque / inertia * dt
    theta += theta_dot * dt
    return theta, theta_dot


def step_device(dev: DeviceState, feedback: tuple[float, float, float],
                driver: tuple[float, float, float], dt: float = DEVICE_DT,
                params: DeviceParams = DEFAULT_DEVICES) -> DeviceState:
    """One 800-Hz device update for all three axes.

    ``feedback`` carries the rendered torques (steer, accel, brake): the
    steering value is applied as-is on its axis, the pedal values are in
    the resist convention and enter negated. ``driver`` torques act in the
    positive-angle direction on every axis. Feedback is clamped to the
    actuator limits before application.
    """
    fb_s = min(max(feedback[0], -params.steer_torque_max), params.steer_torque_max)
    fb_a = min(max(feedback[1], -params.pedal_torque_max), params.pedal_torque_max)
    fb_b = min(max(feedback[2], -params.pedal_torque_max), params.pedal_torque_max)

    th_s, om_s = _step_axis(dev.theta_s, dev.theta_s_dot, driver[0] + fb_s,
                            params.inertia_steer, -params.steer_travel_deg,
                            params.steer_travel_deg, params, dt)
    th_a, om_a = _step_axis(dev.theta_a, dev.theta_a_dot, driver[1] - fb_a,
                            params.inertia_accel, *params.accel_travel_deg,
                            params, dt)
    th_b, om_b = _step_axis(dev.theta_b, dev.theta_b_dot, driver[2] - fb_b,
                            params.inertia_brake, *params.brake_travel_deg,
                            params, dt)
    nxt = DeviceState(th_s, om_s, th_a, om_a, th_b, om_b)
    nxt.require_finite()
    return nxt


def road_wheel_angle(theta_s_deg: float,
                     params: VehicleParams = DEFAULT_VEHICLE) -> float:
    """Road-wheel steer angle in radians from the wheel angle in degrees."""
    return math.radians(theta_s_deg) / params.steering_ratio
