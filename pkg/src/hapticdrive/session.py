"""Dual-rate driving session: one 50-Hz vehicle/logic tick wrapping exactly
sixteen 800-Hz device sub-steps.

Per tick: sense (rays, hazards, lane errors), update driver intent, update
the model predictions, refresh the guidance references, run the device
sub-steps (ambient or guidance torque plus driver torque), then advance the
vehicle with the resulting pedal/wheel commands. Simulated time only; the
service layer adds wall-clock pacing for human driving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .agents import DriverAgent, agent_torques
from .config import SessionConfig
from .constants import (DEVICE_DT, KMH_PER_MS, SUBSTEPS_PER_TICK, TICK_DT,
                        TRUE_TARGET_KMH)
from .guidance import (ReferenceSmoother, SteeringGuidance,
                       conventional_desired_steer, conventional_pedal_endpoint,
                       lookahead_errors)
from .haptics import (DEFAULT_HAPTICS, HapticParams, accelerator_torque,
                      brake_fraction, brake_torque, steering_torque,
                      throttle_fraction, unilateral_endpoint_torque)
from .metrics import StreamingMetrics
from .plant import (DEFAULT_DEVICES, DEFAULT_VEHICLE, DeviceParams,
                    DeviceState, NonFinite, VehicleParams, VehicleState,
                    road_wheel_angle, step_device, step_vehicle)
from .runlog import RunLog, RunLogBuilder
from .skillnet import SkillNet, StreamingPredictor, compute_env_features
from .track import OutOfRange, TrackPath, boundary_ray_fan, \
    closest_midline_point, signed_lateral_offset, wrap_angle

COMPLETION_MARGIN = 0.5  # m before the path end that counts as arrival


class SimulationDiverged(RuntimeError):
    """A plant state went non-finite during the run."""


@dataclass
class ExternalInput:
    """One tick of client input: intended angles (driven through the same
    limb impedance as agents) or raw torques."""

    steer_intent: float = 0.0
    accel_intent: float = 0.0
    brake_intent: float = 0.0
    raw_torque: bool = False
    steer_torque: float = 0.0
    accel_torque: float = 0.0
    brake_torque: float = 0.0


class Session:
    """One driving trial; owns all mutable simulation state."""

    def __init__(self, cfg: SessionConfig, path: TrackPath | None = None,
                 net_s: SkillNet | None = None, net_a: SkillNet | None = None,
                 vehicle_params: VehicleParams = DEFAULT_VEHICLE,
                 device_params: DeviceParams = DEFAULT_DEVICES,
                 haptic_params: HapticParams = DEFAULT_HAPTICS):
        self.cfg = cfg
        self.path = path if path is not None else cfg.path.build()
        self.vehicle_params = vehicle_params
        self.device_params = device_params
        self.haptics = haptic_params
        self.method = cfg.method
        self.gains = cfg.gains

        x0, y0, h0 = self.path.start_pose
        off = cfg.start_lateral_offset
        from .plant import engine_rpm
        self.vehicle = VehicleState(x=x0 - off * math.sin(h0),
                                    y=y0 + off * math.cos(h0), heading=h0,
                                    v=cfg.start_speed,
                                    rpm=engine_rpm(cfg.start_speed, vehicle_params))
        self.devices = DeviceState()
        self.agent = None
        if cfg.driver.kind == "agent":
            self.agent = DriverAgent(self.path, cfg.driver.agent_params(),
                                     cfg.driver.seed, vehicle_params)

        self.net_s, self.net_a = net_s, net_a
        self.predictor = StreamingPredictor(net_s, net_a)
        self.steer_guidance = SteeringGuidance(cfg.gains, haptic_params.steer_damping)
        self.pedal_smoother = ReferenceSmoother()
        steer_range = net_s.normalizer.control_range if net_s else None
        accel_range = net_a.normalizer.control_range if net_a else None
        self.metrics = StreamingMetrics(steer_range, accel_range)
        self.builder = RunLogBuilder()
        self.tick_index = 0
        self.substeps_total = 0
        self.done = False
        self.done_reason = ""
        self.last_frame: dict = {}

        self._jolts: list[tuple[float, float, float]] = []
        self._jolt_idx = 0
        if cfg.steer_jolt is not None:
            import numpy as np
            amp, width, gap = cfg.steer_jolt
            rng = np.random.default_rng(cfg.driver.seed + 777)
            t = 2.0 + float(rng.exponential(gap))  # let the launch settle
            while t < cfg.duration_cap:
                sign = 1.0 if rng.random() < 0.5 else -1.0
                self._jolts.append((t, t + width, sign * amp))
                t += width + float(rng.exponential(gap))

    def _jolt_torque(self, t: float) -> float:
        while self._jolt_idx < len(self._jolts) and t >= self._jolts[self._jolt_idx][1]:
            self._jolt_idx += 1
        if self._jolt_idx < len(self._jolts):
            start, end, amp = self._jolts[self._jolt_idx]
            if start <= t < end:
                return amp
        return 0.0

    # -- guidance plumbing -------------------------------------------------

    def _guidance_active(self) -> bool:
        if self.method == "N" or self.gains_inert():
            return False
        if self.method == "G" and not self.predictor.warm:
            return False  # warm-up: behave like N
        return True

    def gains_inert(self) -> bool:
        g = self.gains
        return g.kp == 0.0 and g.ki == 0.0 and g.kd == 0.0 \
            and g.stable_damping_factor == 0.0

    def set_method(self, method: str) -> None:
        if method not in ("N", "G", "C"):
            raise ValueError(f"unknown method {method!r}")
        if method != self.method:
            self.method = method
            self.steer_guidance.pid.reset()

    # -- main loop -----------------------------------------------------------

    def tick(self, external: ExternalInput | None = None) -> dict:
        """Advance one 50-Hz tick; returns the state frame for that tick."""
        if self.done:
            return self.last_frame
        veh = self.vehicle
        dev = self.devices
        pose = (veh.x, veh.y, veh.heading)

        rays = boundary_ray_fan(self.path, pose)
        z = compute_env_features(rays)
        try:
            q = closest_midline_point(self.path, (veh.x, veh.y))
        except OutOfRange:
            # hopelessly far off course: end the run cleanly
            self.done = True
            self.done_reason = "off_course"
            if self.last_frame:
                self.last_frame["done"] = True
                self.last_frame["done_reason"] = self.done_reason
            return self.last_frame
        e_d = signed_lateral_offset(self.path, (veh.x, veh.y), q)
        e_delta = math.degrees(wrap_angle(veh.heading - q.tangent_heading))

        self.predictor.push(dev.theta_s, dev.theta_a, veh.v, veh.yaw_rate,
                            veh.rpm, z)
        theta_hat_s, theta_hat_a = self.predictor.predict()

        if self.agent is not None:
            intent_s, intent_a = self.agent.tick(veh)
            intent_b = 0.0
        elif external is not None:
            intent_s, intent_a = external.steer_intent, external.accel_intent
            intent_b = external.brake_intent
        else:
            intent_s = intent_a = intent_b = 0.0

        # one desired-angle source per method, shared torque path downstream
        v_kmh = veh.v * KMH_PER_MS
        if self.method == "C":
            e_p, e_d_c, _ = lookahead_errors(self.path, (veh.x, veh.y),
                                             veh.heading, veh.v,
                                             self.gains.lookahead_time)
            theta_s_desired = conventional_desired_steer(e_p, e_d_c, self.gains)
            pedal_endpoint = conventional_pedal_endpoint(
                v_kmh, self.haptics.accel_max_deg, 0.0, self.gains)
        else:
            theta_s_desired = theta_hat_s
            pedal_endpoint = None  # G: smoothed prediction; N: travel end
        self.steer_guidance.push_desired(theta_s_desired)
        self.pedal_smoother.push_tick(theta_hat_a)

        guided = self._guidance_active()
        tq = self._run_substeps(guided, pedal_endpoint,
                                (intent_s, intent_a, intent_b), external)

        self.metrics.push(e_d, e_delta, veh.v, dev.theta_a_dot,
                          dev.theta_s, dev.theta_a,
                          theta_hat_s if (self.net_s and self.net_a) else None,
                          theta_hat_a if (self.net_s and self.net_a) else None)
        self.builder.append(
            self.method,
            t=self.tick_index * TICK_DT,
            x=veh.x, y=veh.y, heading=veh.heading, v=veh.v,
            yaw_rate=veh.yaw_rate, rpm=veh.rpm,
            theta_s=dev.theta_s, theta_s_dot=dev.theta_s_dot,
            theta_a=dev.theta_a, theta_a_dot=dev.theta_a_dot,
            theta_b=dev.theta_b, theta_b_dot=dev.theta_b_dot,
            d1=rays[0], d2=rays[1], d3=rays[2], d4=rays[3], d5=rays[4],
            **tq,
        )

        frame = {
            "tick": self.tick_index,
            "t": self.tick_index * TICK_DT,
            "x": veh.x, "y": veh.y, "heading": veh.heading,
            "v": veh.v, "v_kmh": v_kmh,
            "speedometer_kmh": v_kmh * 60.0 / TRUE_TARGET_KMH,
            "theta_s": dev.theta_s, "theta_a": dev.theta_a,
            "theta_b": dev.theta_b,
            "theta_hat_s": theta_hat_s, "theta_hat_a": theta_hat_a,
            "e_d": e_d, "e_delta": e_delta, "s": q.s,
            "method": self.method, "warm": self.predictor.warm,
            "guidance_active": guided,
            "tq_assist_s": tq["tq_assist_s"], "tq_assist_a": tq["tq_assist_a"],
            "tq_feedback_s": tq["tq_feedback_s"],
            "tq_feedback_a": tq["tq_feedback_a"],
            "metrics": self.metrics.snapshot(),
            "done": False,
        }

        # advance the vehicle with the post-substep device commands
        dev = self.devices
        try:
            self.vehicle = step_vehicle(
                veh,
                throttle_fraction(dev.theta_a, self.haptics),
                brake_fraction(dev.theta_b, self.haptics),
                road_wheel_angle(dev.theta_s, self.vehicle_params),
                TICK_DT, self.vehicle_params)
        except NonFinite as exc:
            raise SimulationDiverged(str(exc)) from exc

        self.tick_index += 1
        if q.s >= self.path.total_length - COMPLETION_MARGIN:
            self.done = True
            self.done_reason = "completed"
        elif self.tick_index * TICK_DT >= self.cfg.duration_cap:
            self.done = True
            self.done_reason = "duration_cap"
        # post-step state, so scripted clients can track without physics
        frame["next"] = {"x": self.vehicle.x, "y": self.vehicle.y,
                         "heading": self.vehicle.heading, "v": self.vehicle.v,
                         "yaw_rate": self.vehicle.yaw_rate,
                         "rpm": self.vehicle.rpm}
        frame["done"] = self.done
        frame["done_reason"] = self.done_reason
        self.last_frame = frame
        return frame

    def _run_substeps(self, guided: bool, pedal_endpoint: float | None,
                      intents: tuple[float, float, float],
                      external: ExternalInput | None) -> dict:
        """Sixteen 800-Hz device updates; returns the last sub-step torques."""
        dev = self.devices
        veh = self.vehicle
        par = self.haptics
        tq: dict[str, float] = {}
        raw = external is not None and external.raw_torque
        t_tick = self.tick_index * TICK_DT
        for sub in range(SUBSTEPS_PER_TICK):
            if self.agent is not None:
                if self.cfg.zero_steer_driver:
                    _, t_a, t_b = self.agent.torques(dev)
                    t_s = 0.0
                else:
                    t_s, t_a, t_b = self.agent.torques(dev)
                if self._jolts:
                    t_s += self._jolt_torque(t_tick + sub * DEVICE_DT)
            elif external is not None and raw:
                t_s, t_a, t_b = (external.steer_torque, external.accel_torque,
                                 external.brake_torque)
            elif external is not None:
                t_s, t_a, t_b = _external_impedance_torques(intents, dev)
            else:
                t_s = t_a = t_b = 0.0

            if guided:
                fb_s = self.steer_guidance.sub_step(dev.theta_s, dev.theta_s_dot,
                                                    DEVICE_DT)
                if self.gains.keep_alignment_torque:
                    fb_s += par.shaft_gain * 0.5 * (veh.f_fl + veh.f_fr)
                assist_s = self.steer_guidance.last_assist
                endpoint = (self.pedal_smoother.step() if self.method == "G"
                            else pedal_endpoint)
                fb_a = accelerator_torque(dev.theta_a, dev.theta_a_dot, par,
                                          endpoint_deg=endpoint)
                assist_a = unilateral_endpoint_torque(dev.theta_a, endpoint,
                                                      par.endpoint_stiffness)
            else:
                self.pedal_smoother.step()  # keep the filter primed
                fb_s = steering_torque(veh.f_fl, veh.f_fr, dev.theta_s_dot, par)
                fb_a = accelerator_torque(dev.theta_a, dev.theta_a_dot, par)
                assist_s = 0.0
                assist_a = 0.0
            fb_b = brake_torque(dev.theta_b, dev.theta_b_dot, par)

            try:
                dev = step_device(dev, (fb_s, fb_a, fb_b), (t_s, t_a, t_b),
                                  DEVICE_DT, self.device_params)
            except NonFinite as exc:
                raise SimulationDiverged(str(exc)) from exc
            self.substeps_total += 1
            tq = {
                "tq_assist_s": assist_s, "tq_assist_a": assist_a,
                "tq_feedback_s": fb_s, "tq_feedback_a": fb_a,
                "tq_feedback_b": fb_b,
                "tq_driver_s": t_s, "tq_driver_a": t_a, "tq_driver_b": t_b,
            }
        self.devices = dev
        return tq

    def run(self) -> RunLog:
        """Run to completion (path end or duration cap) and build the log."""
        while not self.done:
            self.tick()
        log = self.builder.build()
        log.manifest = {
            "config": _config_manifest(self.cfg),
            "done_reason": self.done_reason,
            "track": _track_text(self.path),
        }
        return log


def _external_impedance_torques(intents, dev: DeviceState):
    """Keyboard/gamepad intents become torque through a fixed firm limb."""
    from .agents import EXPERT_PRESET
    return agent_torques(intents[0], intents[1], dev, EXPERT_PRESET, intents[2])


def _config_manifest(cfg: SessionConfig) -> dict:
    from .config import session_config_to_dict
    return session_config_to_dict(cfg)


def _track_text(path: TrackPath) -> str:
    from .track import dump_track
    return dump_track(path)


def run_session(cfg: SessionConfig, path: TrackPath | None = None,
                net_s: SkillNet | None = None,
                net_a: SkillNet | None = None) -> RunLog:
    """Convenience wrapper: build a session, run it, return the log."""
    return Session(cfg, path=path, net_s=net_s, net_a=net_a).run()
