"""Skill models: tapped-delay features and shallow networks trained on
logged driving.

Two independent networks share one architecture (45-32-24-16-8-1, tanh
hidden layers, linear output): one maps delayed wheel/state/hazard samples
to the wheel angle one horizon ahead, the other does the same for the
accelerator. Training is full-batch gradient descent with an adaptive
learning rate; the cost is the RMS prediction error divided by the control
channel's range (so a cost of 0.01 means 1 % of the expert's angle range).

Feature vector layout (45 values): 5 taps of the control channel, newest
first; then 5 lag-major blocks of (v, yaw rate, rpm); then 5 lag-major
blocks of the five hazard features.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import TAP_COUNT, TAP_SPACING, WARMUP_SAMPLES

HIDDEN_SIZES = (32, 24, 16, 8)
INPUT_SIZE = (1 + 3 + 5) * TAP_COUNT  # 45
NUM_BASE_CHANNELS = 9  # control, v, yaw rate, rpm, z1..z5

MODEL_FORMAT_VERSION = 1


class TooSmall(ValueError):
    """Dataset cannot be split into three non-empty parts."""


class IndexOutOfRange(IndexError):
    """Window index violates the tap/label reach of the log."""


class DidNotConverge(RuntimeError):
    """Training hit the epoch cap before the validation tolerance.

    Carries the partially trained ``net``, its final validation ``cost``,
    and the full ``history`` so the caller can decide what to do.
    """

    def __init__(self, net: "SkillNet", cost: float, history: "TrainHistory"):
        super().__init__(f"validation cost {cost:.4%} did not reach tolerance")
        self.net = net
        self.cost = cost
        self.history = history


def compute_env_features(distances) -> np.ndarray:
    """Hazard features from capped boundary distances: z = 1 / (1 + d)."""
    d = np.asarray(distances, dtype=float)
    return 1.0 / (1.0 + d)


# -- normalization ---------------------------------------------------------


@dataclass(frozen=True)
class Normalizer:
    """Per-channel min-max mapping to [-1, 1], shared by train and inference.

    ``lo``/``hi`` hold the expert-corpus extrema of the nine base channels
    in feature order (control, v, yaw rate, rpm, z1..z5); the label shares
    the control channel's extrema.
    """

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if self.lo.shape != (NUM_BASE_CHANNELS,) or self.hi.shape != (NUM_BASE_CHANNELS,):
            raise ValueError("normalizer needs one (lo, hi) pair per base channel")
        if not np.all(self.hi > self.lo):
            raise ValueError("every channel needs hi > lo")

    @property
    def control_range(self) -> float:
        """Angle range of the control channel in physical units."""
        return float(self.hi[0] - self.lo[0])

    def _feature_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.concatenate([
            np.repeat(self.lo[0], TAP_COUNT),
            np.tile(self.lo[1:4], TAP_COUNT),
            np.tile(self.lo[4:], TAP_COUNT),
        ])
        hi = np.concatenate([
            np.repeat(self.hi[0], TAP_COUNT),
            np.tile(self.hi[1:4], TAP_COUNT),
            np.tile(self.hi[4:], TAP_COUNT),
        ])
        return lo, hi

    def normalize_features(self, x: np.ndarray) -> np.ndarray:
        lo, hi = self._feature_bounds()
        return 2.0 * (x - lo) / (hi - lo) - 1.0

    def normalize_label(self, y):
        return 2.0 * (np.asarray(y, dtype=float) - self.lo[0]) / (self.hi[0] - self.lo[0]) - 1.0

    def denormalize_label(self, yn):
        return (np.asarray(yn, dtype=float) + 1.0) * 0.5 * (self.hi[0] - self.lo[0]) + self.lo[0]


def fit_normalizer(channel_samples: dict[str, np.ndarray]) -> Normalizer:
    """Extrema over raw corpus channels: keys control, v, yaw_rate, rpm, z
    (z is an (n, 5) array)."""
    lo = np.empty(NUM_BASE_CHANNELS)
    hi = np.empty(NUM_BASE_CHANNELS)
    for i, key in enumerate(("control", "v", "yaw_rate", "rpm")):
        arr = np.asarray(channel_samples[key], dtype=float)
        lo[i], hi[i] = arr.min(), arr.max()
    z = np.asarray(channel_samples["z"], dtype=float)
    lo[4:] = z.min(axis=0)
    hi[4:] = z.max(axis=0)
    return Normalizer(lo, hi)


# -- windows ----------------------------------------------------------------


@dataclass(frozen=True)
class FeatureWindow:
    """One tapped-delay training example in physical units."""

    features: np.ndarray  # shape (45,)
    label: float
    channel: str  # "steer" or "accel"

    @property
    def control_taps(self) -> np.ndarray:
        return self.features[:TAP_COUNT]

    @property
    def state_taps(self) -> np.ndarray:
        return self.features[TAP_COUNT:TAP_COUNT * 4]

    @property
    def hazard_taps(self) -> np.ndarray:
        return self.features[TAP_COUNT * 4:]


def _log_channels(log, channel: str):
    control = np.asarray(log.theta_s if channel == "steer" else log.theta_a, dtype=float)
    state = np.column_stack([np.asarray(log.v, dtype=float),
                             np.asarray(log.yaw_rate, dtype=float),
                             np.asarray(log.rpm, dtype=float)])
    z = compute_env_features(np.asarray(log.rays, dtype=float))
    return control, state, z


def valid_window_indices(n_samples: int, stride: int = 1) -> np.ndarray:
    """Window anchors k with full tap reach and an in-log label."""
    first = WARMUP_SAMPLES
    last = n_samples - 1 - TAP_SPACING
    if last < first:
        return np.empty(0, dtype=int)
    return np.arange(first, last + 1, stride)


def _feature_matrix(control, state, z, ks: np.ndarray) -> np.ndarray:
    cols = [control[ks - i * TAP_SPACING][:, None] for i in range(TAP_COUNT)]
    for i in range(TAP_COUNT):
        cols.append(state[ks - i * TAP_SPACING])
    for i in range(TAP_COUNT):
        cols.append(z[ks - i * TAP_SPACING])
    return np.hstack(cols)


def assemble_features(log, k: int, channel: str) -> FeatureWindow:
    """The single window anchored at sample k of a log."""
    control, state, z = _log_channels(log, channel)
    n = len(control)
    if k < WARMUP_SAMPLES or k + TAP_SPACING > n - 1:
        raise IndexOutOfRange(
            f"k={k} outside [{WARMUP_SAMPLES}, {n - 1 - TAP_SPACING}]")
    ks = np.array([k])
    x = _feature_matrix(control, state, z, ks)[0]
    return FeatureWindow(features=x, label=float(control[k + TAP_SPACING]),
                         channel=channel)


def assemble_dataset(log, channel: str, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """All valid windows of one log as (features, labels) arrays."""
    control, state, z = _log_channels(log, channel)
    ks = valid_window_indices(len(control), stride)
    if len(ks) == 0:
        return np.empty((0, INPUT_SIZE)), np.empty(0)
    return _feature_matrix(control, state, z, ks), control[ks + TAP_SPACING]


def assemble_corpus(logs, channel: str, stride: int = 1) -> tuple[np.ndarray, np.ndarray, Normalizer]:
    """Pool windows of many logs and fit the normalizer on the raw channels."""
    xs, ys = [], []
    controls, vs, omegas, rpms, zs = [], [], [], [], []
    for log in logs:
        x, y = assemble_dataset(log, channel, stride)
        if len(y):
            xs.append(x)
            ys.append(y)
        control, state, z = _log_channels(log, channel)
        controls.append(control)
        vs.append(state[:, 0])
        omegas.append(state[:, 1])
        rpms.append(state[:, 2])
        zs.append(z)
    norm = fit_normalizer({
        "control": np.concatenate(controls),
        "v": np.concatenate(vs),
        "yaw_rate": np.concatenate(omegas),
        "rpm": np.concatenate(rpms),
        "z": np.vstack(zs),
    })
    return np.vstack(xs), np.concatenate(ys), norm


# -- network -----------------------------------------------------------------


@dataclass
class TrainHistory:
    train_costs: list[float] = field(default_factory=list)
    val_costs: list[float] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)
    best_epoch: int = -1
    converged: bool = False


@dataclass
class SkillNet:
    """Feed-forward net with attached normalizer; immutable once trained."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    normalizer: Normalizer
    channel: str = "steer"
    history: TrainHistory = field(default_factory=TrainHistory)

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)


def init_skillnet(normalizer: Normalizer, channel: str, seed: int) -> SkillNet:
    """Seeded uniform init in +-1/sqrt(fan_in) per layer."""
    rng = np.random.default_rng(seed)
    sizes = (INPUT_SIZE,) + HIDDEN_SIZES + (1,)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_in, n_out)))
        biases.append(rng.uniform(-bound, bound, size=n_out))
    return SkillNet(weights=weights, biases=biases, normalizer=normalizer,
                    channel=channel)


def forward_normalized(net: SkillNet, xn: np.ndarray) -> np.ndarray:
    a = xn
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if i != last:
            a = np.tanh(a)
    return a[..., 0]


def forward(net: SkillNet, x: np.ndarray):
    """Physical-units prediction for one window (1-D) or a batch (2-D)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xn = net.normalizer.normalize_features(np.atleast_2d(x))
    yn = forward_normalized(net, xn)
    y = net.normalizer.denormalize_label(yn)
    return float(y[0]) if single else y


def cost(net: SkillNet, xn: np.ndarray, yn: np.ndarray) -> float:
    """Range-normalized RMS prediction error (0.01 means 1 %)."""
    d = forward_normalized(net, xn) - yn
    return float(np.sqrt(np.mean(d * d))) / 2.0


def backprop_gradient(net: SkillNet, xn: np.ndarray,
                      yn: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Exact gradient of the cost w.r.t. every weight and bias."""
    acts = [xn]
    a = xn
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if i != last:
            a = np.tanh(a)
        acts.append(a)
    d = acts[-1][:, 0] - yn
    n = len(yn)
    rms = math.sqrt(float(np.mean(d * d)))
    if rms == 0.0:
        return ([np.zeros_like(w) for w in net.weights],
                [np.zeros_like(b) for b in net.biases])
    # cost = rms / 2, so dC/dd_i = d_i / (2 n rms)
    delta = (d / (2.0 * n * rms))[:, None]
    grads_w = [np.empty(0)] * len(net.weights)
    grads_b = [np.empty(0)] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (1.0 - acts[i] * acts[i])
    return grads_w, grads_b


def split_dataset(n: int, fractions=(0.70, 0.15, 0.15), seed: int = 0):
    """Disjoint, exhaustive, seeded random index split."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    if n < 3:
        raise TooSmall(f"need at least 3 windows, got {n}")
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    if n_train == 0 or n_val == 0 or n - n_train - n_val <= 0:
        raise TooSmall(f"split of {n} windows leaves an empty part")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]


@dataclass(frozen=True)
class TrainConfig:
    tolerance: float = 0.010       # validation cost target (fraction)
    initial_lr: float = 0.5
    lr_grow: float = 1.05          # after an epoch that lowered the cost
    lr_shrink: float = 0.7         # after a rejected step
    reject_threshold: float = 0.04  # relative cost rise that rejects a step
    max_epochs: int = 8000
    fractions: tuple[float, float, float] = (0.70, 0.15, 0.15)
    seed: int = 0
    strict: bool = True            # raise DidNotConverge at the epoch cap


STEER_TOLERANCE = 0.010
ACCEL_TOLERANCE = 0.045


def train(x: np.ndarray, y: np.ndarray, normalizer: Normalizer, channel: str,
          config: TrainConfig = TrainConfig()) -> SkillNet:
    """Full-batch adaptive-learning-rate gradient descent.

    Steps that raise the training cost by more than the rejection threshold
    are undone and shrink the rate; accepted improvements grow it. Stops as
    soon as the validation cost drops below the tolerance; returns the
    best-validation weights either way.

    Descent uses the squared-error gradient (the RMS-cost gradient scaled
    by 8*cost, which is exact): both share the minimizer, but the RMS
    surface steepens without bound as the cost approaches zero, which
    starves the adaptive rate. Acceptance and termination still use the
    range-normalized RMS cost.
    """
    net = init_skillnet(normalizer, channel, config.seed)
    xn = normalizer.normalize_features(np.asarray(x, dtype=float))
    yn = normalizer.normalize_label(np.asarray(y, dtype=float))
    i_tr, i_val, _ = split_dataset(len(yn), config.fractions, config.seed)
    x_tr, y_tr = xn[i_tr], yn[i_tr]
    x_val, y_val = xn[i_val], yn[i_val]

    hist = net.history
    lr = config.initial_lr
    c_train = cost(net, x_tr, y_tr)
    best_val = math.inf
    best = None

    for epoch in range(config.max_epochs):
        grads_w, grads_b = backprop_gradient(net, x_tr, y_tr)
        scale = lr * 8.0 * c_train  # RMS-cost gradient -> squared-error gradient
        saved_w = [w.copy() for w in net.weights]
        saved_b = [b.copy() for b in net.biases]
        for w, gw in zip(net.weights, grads_w):
            w -= scale * gw
        for b, gb in zip(net.biases, grads_b):
            b -= scale * gb
        c_new = cost(net, x_tr, y_tr)
        if c_new > c_train * (1.0 + config.reject_threshold):
            net.weights = saved_w
            net.biases = saved_b
            lr *= config.lr_shrink
        else:
            if c_new < c_train:
                lr *= config.lr_grow
            c_train = c_new
        c_val = cost(net, x_val, y_val)
        hist.train_costs.append(c_train)
        hist.val_costs.append(c_val)
        hist.learning_rates.append(lr)
        if c_val < best_val:
            best_val = c_val
            best = ([w.copy() for w in net.weights], [b.copy() for b in net.biases])
            hist.best_epoch = epoch
        if c_val < config.tolerance:
            hist.converged = True
            break

    if best is not None:
        net.weights, net.biases = best
    if not hist.converged and config.strict:
        raise DidNotConverge(net, best_val, hist)
    return net


# -- streaming inference ------------------------------------------------------


class StreamingPredictor:
    """Live tapped-delay buffers feeding both nets once per 50-Hz tick.

    Until the buffers cover the oldest tap the predictions fall back to the
    measured angles (guidance stays passive through the warm-up).
    """

    def __init__(self, net_s: SkillNet | None, net_a: SkillNet | None):
        self.net_s = net_s
        self.net_a = net_a
        self._theta_s: list[float] = []
        self._theta_a: list[float] = []
        self._state: list[tuple[float, float, float]] = []
        self._z: list[np.ndarray] = []

    @property
    def warm(self) -> bool:
        return len(self._theta_s) > WARMUP_SAMPLES

    def push(self, theta_s: float, theta_a: float, v: float, yaw_rate: float,
             rpm: float, z) -> None:
        keep = WARMUP_SAMPLES + 1
        self._theta_s.append(theta_s)
        self._theta_a.append(theta_a)
        self._state.append((v, yaw_rate, rpm))
        self._z.append(np.asarray(z, dtype=float))
        if len(self._theta_s) > keep:
            del self._theta_s[0]
            del self._theta_a[0]
            del self._state[0]
            del self._z[0]

    def _window(self, control: list[float]) -> np.ndarray:
        taps = [-1 - i * TAP_SPACING for i in range(TAP_COUNT)]
        parts = [np.array([control[t] for t in taps])]
        parts.append(np.concatenate([np.asarray(self._state[t]) for t in taps]))
        parts.append(np.concatenate([self._z[t] for t in taps]))
        return np.concatenate(parts)

    def predict(self) -> tuple[float, float]:
        """(wheel, accelerator) predictions for one horizon ahead."""
        if not self._theta_s:
            return (0.0, 0.0)
        if not self.warm:
            return (self._theta_s[-1], self._theta_a[-1])
        theta_hat_s = (forward(self.net_s, self._window(self._theta_s))
                       if self.net_s is not None else self._theta_s[-1])
        theta_hat_a = (forward(self.net_a, self._window(self._theta_a))
                       if self.net_a is not None else self._theta_a[-1])
        return (theta_hat_s, theta_hat_a)


# -- persistence --------------------------------------------------------------


def save_skillnet(net: SkillNet, filename) -> None:
    """Binary container (npz): exact float64 round-trip."""
    arrays = {
        "version": np.array([MODEL_FORMAT_VERSION]),
        "norm_lo": net.normalizer.lo,
        "norm_hi": net.normalizer.hi,
        "meta": np.frombuffer(json.dumps({
            "channel": net.channel,
            "sizes": list(net.sizes),
            "final_train_cost": net.history.train_costs[-1] if net.history.train_costs else None,
            "final_val_cost": net.history.val_costs[-1] if net.history.val_costs else None,
            "best_epoch": net.history.best_epoch,
            "converged": net.history.converged,
        }).encode(), dtype=np.uint8),
    }
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"w{i}"] = w
        arrays[f"b{i}"] = b
    np.savez(filename, **arrays)


def load_skillnet(filename) -> SkillNet:
    data = np.load(filename)
    version = int(data["version"][0])
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    meta = json.loads(bytes(data["meta"]).decode())
    weights, biases = [], []
    i = 0
    while f"w{i}" in data:
        weights.append(data[f"w{i}"])
        biases.append(data[f"b{i}"])
        i += 1
    net = SkillNet(weights=weights, biases=biases,
                   normalizer=Normalizer(data["norm_lo"], data["norm_hi"]),
                   channel=meta["channel"])
    net.history.converged = bool(meta["converged"])
    net.history.best_epoch = int(meta["best_epoch"])
    return net
