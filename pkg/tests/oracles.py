"""Independent reference implementations the tests check against.

Everything here deliberately avoids the code paths under test: dense
sampling instead of analytic projection, marching instead of intersection,
finite differences instead of backprop, plain Python loops instead of
numpy matmuls.
"""

from __future__ import annotations

import math

import numpy as np

from hapticdrive.track import TrackPath, is_on_road


class DenseMidline:
    """Brute-force closest-point queries on a finely sampled midline."""

    def __init__(self, path: TrackPath, spacing: float = 0.005):
        n = int(math.ceil(path.total_length / spacing)) + 1
        self.ss = np.linspace(0.0, path.total_length, n)
        self.pts = np.array([path.point_at(float(s)) for s in self.ss])

    def closest(self, position) -> tuple[float, float]:
        """(s, distance) of the nearest sample."""
        d2 = np.sum((self.pts - np.asarray(position)) ** 2, axis=1)
        i = int(np.argmin(d2))
        return float(self.ss[i]), float(math.sqrt(d2[i]))

    def rms_lane_distance(self, xs, ys) -> float:
        total = 0.0
        for x, y in zip(xs, ys):
            _, d = self.closest((x, y))
            total += d * d
        return math.sqrt(total / len(xs))


def ray_march_distance(path: TrackPath, pose, offset_deg: float,
                       step: float = 0.01, cap: float = 60.0) -> float:
    """March along the ray until the point leaves the road; bisect the
    crossing. Returns the cap when the ray stays on the road throughout."""
    ox, oy, heading = pose
    bearing = heading - math.radians(offset_deg)
    dx, dy = math.cos(bearing), math.sin(bearing)
    t = 0.0
    while t <= cap:
        if not is_on_road(path, (ox + t * dx, oy + t * dy)):
            lo, hi = max(0.0, t - step), t
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if is_on_road(path, (ox + mid * dx, oy + mid * dy)):
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)
        t += step
    return cap


def manual_forward(weights, biases, x) -> float:
    """Straight-line float re-evaluation of the network on one normalized
    input vector (no numpy linear algebra)."""
    a = [float(v) for v in x]
    last = len(weights) - 1
    for li, (w, b) in enumerate(zip(weights, biases)):
        n_in, n_out = w.shape
        nxt = []
        for j in range(n_out):
            acc = float(b[j])
            for i in range(n_in):
                acc += a[i] * float(w[i, j])
            nxt.append(math.tanh(acc) if li != last else acc)
        a = nxt
    return a[0]


def finite_difference_gradients(net, xn, yn, h: float = 1e-5):
    """Central-difference gradient of the cost for every weight and bias."""
    from hapticdrive.skillnet import cost

    grads_w, grads_b = [], []
    for w in net.weights:
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            orig = w[idx]
            w[idx] = orig + h
            c_plus = cost(net, xn, yn)
            w[idx] = orig - h
            c_minus = cost(net, xn, yn)
            w[idx] = orig
            g[idx] = (c_plus - c_minus) / (2 * h)
        grads_w.append(g)
    for b in net.biases:
        g = np.zeros_like(b)
        for idx in np.ndindex(b.shape):
            orig = b[idx]
            b[idx] = orig + h
            c_plus = cost(net, xn, yn)
            b[idx] = orig - h
            c_minus = cost(net, xn, yn)
            b[idx] = orig
            g[idx] = (c_plus - c_minus) / (2 * h)
        grads_b.append(g)
    return grads_w, grads_b


def fit_circle_radius(xs, ys) -> float:
    """Mean distance to the centroid; exact for full uniform laps."""
    cx, cy = float(np.mean(xs)), float(np.mean(ys))
    return float(np.mean(np.hypot(np.asarray(xs) - cx, np.asarray(ys) - cy)))


def rectangle_integral_since_zero(errors, dt: float) -> float:
    """Zero-order-hold integral of the error sequence, restarting whenever
    the error touches or crosses zero (the PID accumulator's contract)."""
    total = 0.0
    prev = None
    for e in errors:
        crossed = e == 0.0 or (prev is not None
                               and (prev == 0.0 or (prev > 0) != (e > 0)))
        if crossed:
            total = 0.0
        if e != 0.0:
            total += e * dt
        prev = e
    return total
