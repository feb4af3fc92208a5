"""Trial measures: model-prediction errors, lane-keeping errors, velocity
error, and pedaling speed.

Batch functions operate on finished logs; ``StreamingMetrics`` accumulates
the same quantities tick by tick inside a live session. Angle measures are
reported in degrees, distances in meters, speeds in m/s; the prediction
errors are percentages of the expert corpus's control range.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .constants import TAP_SPACING, TRUE_TARGET_SPEED, WARMUP_SAMPLES
from .skillnet import SkillNet, assemble_dataset, forward
from .track import TrackPath, closest_midline_point, signed_lateral_offset, wrap_angle


class LogTooShort(ValueError):
    """Log has no complete prediction window."""


class NeverReachedTarget(ValueError):
    """Speed never reached the target, so the velocity error is undefined."""


@dataclass(frozen=True)
class MetricsReport:
    """One run's measures; velocity error is None when undefined."""

    pred_steer_pct: float | None
    pred_accel_pct: float | None
    lane_distance_rms: float
    heading_error_rms: float
    velocity_error_rms: float | None
    pedal_speed_rms: float
    n_samples: int
    method: str = "N"
    label: str = ""

    CSV_COLUMNS = ("label", "method", "n_samples", "pred_steer_pct",
                   "pred_accel_pct", "lane_distance_rms", "heading_error_rms",
                   "velocity_error_rms", "pedal_speed_rms")

    def csv_row(self) -> str:
        vals = []
        for col in self.CSV_COLUMNS:
            v = getattr(self, col)
            vals.append("" if v is None else (v if isinstance(v, str) else repr(v)))
        return ",".join(str(v) for v in vals)

    @staticmethod
    def csv_header() -> str:
        return ",".join(MetricsReport.CSV_COLUMNS)


def _rms(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(values))))


def predictive_errors(log, net_s: SkillNet, net_a: SkillNet) -> tuple[float, float]:
    """Normalized RMS prediction errors (percent) of both models on a log."""
    out = []
    for net, channel in ((net_s, "steer"), (net_a, "accel")):
        x, y = assemble_dataset(log, channel)
        if len(y) == 0:
            raise LogTooShort(
                f"log of {len(log.theta_s)} samples has no prediction window")
        err = forward(net, x) - y
        out.append(_rms(err) / net.normalizer.control_range * 100.0)
    return (out[0], out[1])


def steering_errors(log, path: TrackPath) -> tuple[float, float]:
    """(RMS lateral distance to the lane midline, RMS heading error deg)."""
    e_d = np.empty(len(log))
    e_delta = np.empty(len(log))
    x, y, heading = log.x, log.y, log.heading
    for i in range(len(log)):
        q = closest_midline_point(path, (x[i], y[i]))
        e_d[i] = signed_lateral_offset(path, (x[i], y[i]), q)
        e_delta[i] = math.degrees(wrap_angle(heading[i] - q.tangent_heading))
    return (_rms(e_d), _rms(e_delta))


def velocity_error(log, target_speed: float = TRUE_TARGET_SPEED) -> float:
    """RMS speed error over the samples strictly after the speed first
    reaches the target."""
    v = np.asarray(log.v, dtype=float)
    above = np.nonzero(v >= target_speed)[0]
    if len(above) == 0:
        raise NeverReachedTarget(
            f"peak speed {v.max():.2f} m/s below target {target_speed}")
    start = above[0] + 1
    if start >= len(v):
        raise NeverReachedTarget("target reached only at the final sample")
    return _rms(v[start:] - target_speed)


def pedaling_speed(log) -> float:
    """RMS magnitude of the accelerator angular velocity (deg/s)."""
    return _rms(np.abs(np.asarray(log.theta_a_dot, dtype=float)))


def metrics_report(log, path: TrackPath, net_s: SkillNet | None = None,
                   net_a: SkillNet | None = None, label: str = "") -> MetricsReport:
    log.validate()
    if net_s is not None and net_a is not None:
        pred_s, pred_a = predictive_errors(log, net_s, net_a)
    else:
        pred_s = pred_a = None
    e_d, e_delta = steering_errors(log, path)
    try:
        e_v = velocity_error(log)
    except NeverReachedTarget:
        e_v = None
    return MetricsReport(
        pred_steer_pct=pred_s, pred_accel_pct=pred_a,
        lane_distance_rms=e_d, heading_error_rms=e_delta,
        velocity_error_rms=e_v, pedal_speed_rms=pedaling_speed(log),
        n_samples=len(log), method=log.method[0] if len(log) else "N",
        label=label,
    )


class _RmsAccumulator:
    __slots__ = ("sum_sq", "n")

    def __init__(self):
        self.sum_sq = 0.0
        self.n = 0

    def push(self, value: float) -> None:
        self.sum_sq += value * value
        self.n += 1

    @property
    def value(self) -> float | None:
        if self.n == 0:
            return None
        return math.sqrt(self.sum_sq / self.n)


class StreamingMetrics:
    """Tick-by-tick accumulation matching the batch functions.

    Prediction errors pair each model output with the control angle that
    arrives one horizon later; pairs anchored inside the warm-up are
    skipped, mirroring the batch window rule.
    """

    def __init__(self, steer_range: float | None = None,
                 accel_range: float | None = None,
                 target_speed: float = TRUE_TARGET_SPEED):
        self.steer_range = steer_range
        self.accel_range = accel_range
        self.target_speed = target_speed
        self._tick = 0
        self._pending: deque[tuple[int, float, float]] = deque()
        self._pred_s = _RmsAccumulator()
        self._pred_a = _RmsAccumulator()
        self._lane = _RmsAccumulator()
        self._heading = _RmsAccumulator()
        self._speed = _RmsAccumulator()
        self._pedal = _RmsAccumulator()
        self._crossed = False

    def push(self, e_d: float, e_delta_deg: float, v: float,
             theta_a_dot: float, theta_s: float, theta_a: float,
             theta_hat_s: float | None = None,
             theta_hat_a: float | None = None) -> None:
        k = self._tick
        self._lane.push(e_d)
        self._heading.push(e_delta_deg)
        self._pedal.push(abs(theta_a_dot))
        if self._crossed:
            self._speed.push(v - self.target_speed)
        elif v >= self.target_speed:
            self._crossed = True  # strictly-after rule: skip the crossing tick
        if self._pending and self._pending[0][0] == k - TAP_SPACING:
            anchor, hat_s, hat_a = self._pending.popleft()
            if anchor >= WARMUP_SAMPLES:
                self._pred_s.push(hat_s - theta_s)
                self._pred_a.push(hat_a - theta_a)
        if theta_hat_s is not None and theta_hat_a is not None:
            self._pending.append((k, theta_hat_s, theta_hat_a))
        self._tick += 1

    def snapshot(self) -> dict:
        """Metrics so far; prediction errors in percent when ranges known."""
        def pct(acc: _RmsAccumulator, rng: float | None):
            if rng is None or acc.value is None:
                return None
            return acc.value / rng * 100.0
        return {
            "pred_steer_pct": pct(self._pred_s, self.steer_range),
            "pred_accel_pct": pct(self._pred_a, self.accel_range),
            "lane_distance_rms": self._lane.value,
            "heading_error_rms": self._heading.value,
            "velocity_error_rms": self._speed.value,
            "pedal_speed_rms": self._pedal.value,
            "n_samples": self._tick,
        }


def write_reports_csv(reports: list[MetricsReport], filename) -> None:
    with open(filename, "w") as fh:
        fh.write(MetricsReport.csv_header() + "\n")
        for r in reports:
            fh.write(r.csv_row() + "\n")


def format_report_table(reports: list[MetricsReport]) -> str:
    """Human-readable fixed-width table of per-run measures."""
    headers = ("label", "method", "Es,p%", "Ea,p%", "Ed[m]", "Edelta[deg]",
               "Ev[m/s]", "Omega_a[deg/s]")
    rows = []
    for r in reports:
        def fmt(v, nd=3):
            return "-" if v is None else f"{v:.{nd}f}"
        rows.append((r.label or "-", r.method, fmt(r.pred_steer_pct),
                     fmt(r.pred_accel_pct), fmt(r.lane_distance_rms),
                     fmt(r.heading_error_rms), fmt(r.velocity_error_rms),
                     fmt(r.pedal_speed_rms)))
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)
