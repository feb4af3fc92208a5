"""Two-lane driving paths assembled from straight and constant-radius arc segments.

The segment chain describes the midline of the first (right) lane; the road
surface extends one half lane to the right of it and one and a half lanes to
the left (the second lane). All geometric queries other modules need live
here: point/heading/curvature at an arc length, globally closest midline
point, signed lateral offset, and ray distances to the outer road edges.

Arc sweeps are stored canonically in degrees so the text serialization
round-trips bit-exact (degrees<->radians conversion is not an exact inverse
in floating point); radians are derived on demand.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .constants import RAY_CAP, RAY_OFFSETS_DEG

TWO_PI = 2.0 * math.pi


class OutOfRange(ValueError):
    """Query position is farther from the path than the supported region."""


class OutsideRoad(ValueError):
    """Pose is not on the two-lane road surface."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


@dataclass(frozen=True)
class Straight:
    length: float

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"straight length must be positive, got {self.length}")


@dataclass(frozen=True)
class Arc:
    """Constant-radius arc; positive sweep turns left."""

    radius: float
    sweep_deg: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"arc radius must be positive, got {self.radius}")
        if self.sweep_deg == 0:
            raise ValueError("arc sweep must be nonzero")

    @property
    def sweep(self) -> float:
        return math.radians(self.sweep_deg)

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    @property
    def turn_sign(self) -> float:
        return 1.0 if self.sweep_deg > 0 else -1.0


Segment = Straight | Arc


@dataclass(frozen=True)
class PathQuery:
    """Result of a midline query: arc length, point, tangent, curvature."""

    s: float
    point: tuple[float, float]
    tangent_heading: float
    curvature: float


@dataclass(frozen=True)
class TrackPath:
    """Immutable two-lane path; safe to share across concurrent readers."""

    segments: tuple[Segment, ...]
    lane_width: float = 3.5
    num_lanes: int = 2
    start_pose: tuple[float, float, float] = (0.0, 0.0, 0.0)
    seed: int | None = None
    # derived, filled in __post_init__
    total_length: float = field(init=False)
    _cum: tuple[float, ...] = field(init=False, repr=False)
    _starts: tuple[tuple[float, float, float], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.segments:
            raise ValueError("path needs at least one segment")
        cum = [0.0]
        starts = [self.start_pose]
        x, y, h = self.start_pose
        for seg in self.segments:
            if isinstance(seg, Straight):
                x += seg.length * math.cos(h)
                y += seg.length * math.sin(h)
            else:
                x, y, h = _arc_end(x, y, h, seg)
            cum.append(cum[-1] + seg.length)
            starts.append((x, y, h))
        object.__setattr__(self, "total_length", cum[-1])
        object.__setattr__(self, "_cum", tuple(cum))
        object.__setattr__(self, "_starts", tuple(starts))

    # -- basic parameterization ------------------------------------------

    def segment_start(self, i: int) -> tuple[float, float, float]:
        return self._starts[i]

    def _locate(self, s: float) -> tuple[int, float]:
        s = min(max(s, 0.0), self.total_length)
        i = bisect_right(self._cum, s) - 1
        if i >= len(self.segments):
            i = len(self.segments) - 1
        return i, s - self._cum[i]

    def point_at(self, s: float) -> tuple[float, float]:
        i, u = self._locate(s)
        x0, y0, h0 = self._starts[i]
        seg = self.segments[i]
        if isinstance(seg, Straight):
            return (x0 + u * math.cos(h0), y0 + u * math.sin(h0))
        sgn = seg.turn_sign
        cx = x0 - sgn * seg.radius * math.sin(h0)
        cy = y0 + sgn * seg.radius * math.cos(h0)
        h = h0 + sgn * u / seg.radius
        return (cx + sgn * seg.radius * math.sin(h), cy - sgn * seg.radius * math.cos(h))

    def heading_at(self, s: float) -> float:
        """Tangent heading; accumulates over segments (not wrapped)."""
        i, u = self._locate(s)
        h0 = self._starts[i][2]
        seg = self.segments[i]
        if isinstance(seg, Straight):
            return h0
        return h0 + seg.turn_sign * u / seg.radius

    def curvature_at(self, s: float) -> float:
        i, _ = self._locate(s)
        seg = self.segments[i]
        if isinstance(seg, Straight):
            return 0.0
        return seg.turn_sign / seg.radius

    # -- lateral extent of the road surface ------------------------------

    @property
    def offset_right_edge(self) -> float:
        """Signed lateral offset of the right road edge (left positive)."""
        return -0.5 * self.lane_width

    @property
    def offset_left_edge(self) -> float:
        """Signed lateral offset of the left road edge (second lane outer)."""
        return 1.5 * self.lane_width


def _arc_end(x0: float, y0: float, h0: float, seg: Arc) -> tuple[float, float, float]:
    sgn = seg.turn_sign
    cx = x0 - sgn * seg.radius * math.sin(h0)
    cy = y0 + sgn * seg.radius * math.cos(h0)
    h1 = h0 + seg.sweep
    return (cx + sgn * seg.radius * math.sin(h1), cy - sgn * seg.radius * math.cos(h1), h1)


# -- construction ---------------------------------------------------------

TRAINING_SEGMENT_LENGTH = 200.0  # each of the three pieces of a training path


def build_training_path(sweep: float, lane_width: float = 3.5) -> TrackPath:
    """Three-piece training path: 200 m straight, 200 m curve, 200 m straight.

    ``sweep`` is the signed curve angle in radians, |sweep| <= pi; the curve
    radius follows from the fixed 200 m arc length. sweep == 0 degenerates
    to a 600 m straight path.
    """
    if abs(sweep) > math.pi + 1e-12:
        raise ValueError(f"|sweep| must be <= pi, got {sweep}")
    legs: list[Segment] = [Straight(TRAINING_SEGMENT_LENGTH)]
    if sweep == 0.0:
        legs.append(Straight(TRAINING_SEGMENT_LENGTH))
    else:
        radius = TRAINING_SEGMENT_LENGTH / abs(sweep)
        legs.append(Arc(radius, math.degrees(sweep)))
    legs.append(Straight(TRAINING_SEGMENT_LENGTH))
    return TrackPath(tuple(legs), lane_width=lane_width)


# Random complex paths: parameter ranges and segment-type transition odds.
RANDOM_LENGTH_RANGE = (100.0, 150.0)   # straight length and arc radius, m
RANDOM_SWEEP_RANGE_DEG = (45.0, 135.0)
P_CURVE_TO_STRAIGHT = 0.4              # else the opposite-direction curve


def generate_random_path(seed: int, target_length: float,
                         lane_width: float = 3.5) -> TrackPath:
    """Random two-lane path: straights and alternating-direction curves.

    Starts with a straight. A straight is followed by a left or right curve
    with equal probability; a curve is followed by a straight with
    probability 0.4, otherwise by a curve in the opposite direction. The
    final segment is truncated so the total length is exactly
    ``target_length``.
    """
    if target_length <= 0:
        raise ValueError("target_length must be positive")
    rng = np.random.default_rng(seed)
    segments: list[Segment] = []
    cum = 0.0
    prev_turn = 0.0  # 0 straight, +1 left curve, -1 right curve
    while cum < target_length:
        if not segments or prev_turn == 0.0:
            if not segments:
                nxt = "S"
            else:
                nxt = "L" if rng.random() < 0.5 else "R"
        else:
            if rng.random() < P_CURVE_TO_STRAIGHT:
                nxt = "S"
            else:
                nxt = "L" if prev_turn < 0 else "R"
        remaining = target_length - cum
        if nxt == "S":
            length = float(rng.uniform(*RANDOM_LENGTH_RANGE))
            if length > remaining:
                length = remaining
            segments.append(Straight(length))
            prev_turn = 0.0
        else:
            radius = float(rng.uniform(*RANDOM_LENGTH_RANGE))
            sweep_deg = float(rng.uniform(*RANDOM_SWEEP_RANGE_DEG))
            if nxt == "R":
                sweep_deg = -sweep_deg
            arc = Arc(radius, sweep_deg)
            if arc.length > remaining:
                sweep_deg = math.copysign(math.degrees(remaining / radius), sweep_deg)
                arc = Arc(radius, sweep_deg)
            segments.append(arc)
            prev_turn = 1.0 if nxt == "L" else -1.0
        cum += segments[-1].length
    return TrackPath(tuple(segments), lane_width=lane_width, seed=seed)


# -- queries --------------------------------------------------------------

QUERY_REGION = 200.0  # m, supported distance from the midline for queries


def _closest_on_segment(path: TrackPath, i: int,
                        px: float, py: float) -> tuple[float, float]:
    """(distance, local arc length) of the closest point of segment i."""
    x0, y0, h0 = path._starts[i]
    seg = path.segments[i]
    if isinstance(seg, Straight):
        ux, uy = math.cos(h0), math.sin(h0)
        t = (px - x0) * ux + (py - y0) * uy
        t = min(max(t, 0.0), seg.length)
        dx, dy = px - (x0 + t * ux), py - (y0 + t * uy)
        return (math.hypot(dx, dy), t)
    sgn = seg.turn_sign
    cx = x0 - sgn * seg.radius * math.sin(h0)
    cy = y0 + sgn * seg.radius * math.cos(h0)
    rp = math.hypot(px - cx, py - cy)
    # Angle of P around the center, converted to swept arc length from the
    # segment start; interior hits beat endpoint clamping.
    a0 = math.atan2(y0 - cy, x0 - cx)
    ap = math.atan2(py - cy, px - cx)
    delta = math.fmod(sgn * (ap - a0), TWO_PI)
    if delta < 0.0:
        delta += TWO_PI
    swept = delta * seg.radius
    if swept <= seg.length:
        return (abs(rp - seg.radius), swept)
    x1, y1, _ = path._starts[i + 1]
    d_start = math.hypot(px - x0, py - y0)
    d_end = math.hypot(px - x1, py - y1)
    if d_start <= d_end:
        return (d_start, 0.0)
    return (d_end, seg.length)


def closest_midline_point(path: TrackPath, position: tuple[float, float]) -> PathQuery:
    """Globally closest first-lane midline point; ties break to smaller s."""
    px, py = position
    best_d = math.inf
    best_s = 0.0
    for i in range(len(path.segments)):
        d, u = _closest_on_segment(path, i, px, py)
        s = path._cum[i] + u
        if d < best_d - 1e-12 or (abs(d - best_d) <= 1e-12 and s < best_s):
            best_d, best_s = d, s
    if best_d > QUERY_REGION:
        raise OutOfRange(f"position {position} is {best_d:.1f} m from the path")
    return PathQuery(
        s=best_s,
        point=path.point_at(best_s),
        tangent_heading=path.heading_at(best_s),
        curvature=path.curvature_at(best_s),
    )


def signed_lateral_offset(path: TrackPath, position: tuple[float, float],
                          query: PathQuery | None = None) -> float:
    """Signed distance from the first-lane midline, left of midline positive."""
    if query is None:
        query = closest_midline_point(path, position)
    mx, my = query.point
    h = query.tangent_heading
    return -(position[0] - mx) * math.sin(h) + (position[1] - my) * math.cos(h)


def is_on_road(path: TrackPath, position: tuple[float, float],
               margin: float = 1e-9) -> bool:
    """True if the position lies on the two-lane road surface."""
    try:
        q = closest_midline_point(path, position)
    except OutOfRange:
        return False
    lat = signed_lateral_offset(path, position, q)
    # Beyond the path ends the closest point is a segment endpoint and the
    # distance exceeds the lateral component; reject those too.
    d = math.hypot(position[0] - q.point[0], position[1] - q.point[1])
    if d - abs(lat) > 1e-6:
        return False
    return path.offset_right_edge - margin <= lat <= path.offset_left_edge + margin


def _ray_vs_straight_edge(ox, oy, dx, dy, ax, ay, ux, uy, length) -> float | None:
    """Smallest t >= 0 with O + t*d on the edge segment, else None."""
    # Solve O + t*d = A + w*u by Cramer's rule.
    den = dx * uy - dy * ux
    if abs(den) < 1e-15:
        return None
    wx, wy = ax - ox, ay - oy
    t = (wx * uy - wy * ux) / den
    w = (dy * wx - dx * wy) / den
    if t >= 0.0 and 0.0 <= w <= length:
        return t
    return None


def _ray_vs_arc_edge(ox, oy, dx, dy, cx, cy, radius, a0, sweep_sign, arc_len) -> float | None:
    """Smallest t >= 0 with O + t*d on the arc edge, else None."""
    fx, fy = ox - cx, oy - cy
    b = fx * dx + fy * dy
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - c
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    best = None
    for t in (-b - root, -b + root):
        if t < 0.0:
            continue
        hx, hy = ox + t * dx - cx, oy + t * dy - cy
        ah = math.atan2(hy, hx)
        delta = math.fmod(sweep_sign * (ah - a0), TWO_PI)
        if delta < 0.0:
            delta += TWO_PI
        if delta * radius <= arc_len:
            if best is None or t < best:
                best = t
    return best


def _edge_elements(path: TrackPath, i: int):
    """Yield the two road-edge primitives of segment i."""
    x0, y0, h0 = path._starts[i]
    seg = path.segments[i]
    nx, ny = -math.sin(h0), math.cos(h0)  # left normal at segment start
    for off in (path.offset_right_edge, path.offset_left_edge):
        if isinstance(seg, Straight):
            yield ("line", x0 + off * nx, y0 + off * ny,
                   math.cos(h0), math.sin(h0), seg.length)
        else:
            sgn = seg.turn_sign
            cx = x0 - sgn * seg.radius * math.sin(h0)
            cy = y0 + sgn * seg.radius * math.cos(h0)
            r_edge = seg.radius - sgn * off
            if r_edge <= 0.0:
                continue  # edge degenerates inside the turn center
            ex, ey = x0 + off * nx, y0 + off * ny
            a0 = math.atan2(ey - cy, ex - cx)
            yield ("arc", cx, cy, r_edge, a0, sgn, r_edge * abs(seg.sweep))


def ray_distance_unchecked(path: TrackPath, pose: tuple[float, float, float],
                           offset_deg: float) -> float:
    """Ray distance to the nearest road edge, capped, no on-road check.

    Positive offsets point to the driver's right. Rays that leave through
    the open path ends without meeting an edge return the cap.
    """
    ox, oy, heading = pose
    bearing = heading - math.radians(offset_deg)
    dx, dy = math.cos(bearing), math.sin(bearing)
    best = RAY_CAP
    for i in range(len(path.segments)):
        for el in _edge_elements(path, i):
            if el[0] == "line":
                t = _ray_vs_straight_edge(ox, oy, dx, dy, el[1], el[2], el[3], el[4], el[5])
            else:
                t = _ray_vs_arc_edge(ox, oy, dx, dy, el[1], el[2], el[3], el[4], el[5], el[6])
            if t is not None and t < best:
                best = t
    return best


def boundary_ray_distance(path: TrackPath, pose: tuple[float, float, float],
                          offset_deg: float) -> float:
    """Distance along one sensing ray to the road edge, capped at 60 m.

    ``offset_deg`` must be one of the five sensing offsets; the pose must be
    on the road surface.
    """
    if offset_deg not in RAY_OFFSETS_DEG:
        raise ValueError(f"offset {offset_deg} not in {RAY_OFFSETS_DEG}")
    if not is_on_road(path, (pose[0], pose[1])):
        raise OutsideRoad(f"pose {pose} is not on the road")
    return ray_distance_unchecked(path, pose, offset_deg)


def boundary_ray_fan(path: TrackPath, pose: tuple[float, float, float]) -> list[float]:
    """All five sensing-ray distances, left to right, no on-road check."""
    return [ray_distance_unchecked(path, pose, off) for off in RAY_OFFSETS_DEG]


# -- serialization --------------------------------------------------------

def dump_track(path: TrackPath) -> str:
    """Line-delimited text form; floats use repr so parsing is bit-exact."""
    seed = "-" if path.seed is None else str(path.seed)
    lines = [f"H {path.lane_width!r} {seed}"]
    for seg in path.segments:
        if isinstance(seg, Straight):
            lines.append(f"S {seg.length!r}")
        else:
            lines.append(f"A {seg.radius!r} {seg.sweep_deg!r}")
    return "\n".join(lines) + "\n"


def parse_track(text: str) -> TrackPath:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("H "):
        raise ValueError("track text must start with an 'H' header line")
    _, lane_width, seed = lines[0].split()
    segments: list[Segment] = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "S":
            segments.append(Straight(float(parts[1])))
        elif parts[0] == "A":
            segments.append(Arc(float(parts[1]), float(parts[2])))
        else:
            raise ValueError(f"unknown segment line: {ln!r}")
    return TrackPath(tuple(segments), lane_width=float(lane_width),
                     seed=None if seed == "-" else int(seed))


def save_track(path: TrackPath, filename) -> None:
    with open(filename, "w") as fh:
        fh.write(dump_track(path))


def load_track(filename) -> TrackPath:
    with open(filename) as fh:
        return parse_track(fh.read())


def midline_polyline(path: TrackPath, spacing: float = 2.0) -> np.ndarray:
    """Sampled midline points, shape (n, 2); used for display and oracles."""
    n = max(2, int(math.ceil(path.total_length / spacing)) + 1)
    ss = np.linspace(0.0, path.total_length, n)
    return np.array([path.point_at(float(s)) for s in ss])


def corridor_min_separation(path: TrackPath, spacing: float = 2.0,
                            s_gap: float = 40.0) -> float:
    """Smallest distance between midline points at least s_gap apart along s.

    Used to confirm a random path does not fold back onto itself (metrics
    and the ray fan assume a locally unique corridor).
    """
    pts = midline_polyline(path, spacing)
    n = len(pts)
    gap = int(s_gap / spacing)
    best = math.inf
    for i in range(n):
        lo = i + gap
        if lo >= n:
            break
        d2 = np.min(np.sum((pts[lo:] - pts[i]) ** 2, axis=1))
        best = min(best, math.sqrt(float(d2)))
    return best
