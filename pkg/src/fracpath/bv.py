"""Exact bounded-variation calculus for piecewise-linear and jump functions.

Continuous functions are piecewise linear (:class:`PiecewiseLinearFn`); pure
jump functions are right-continuous step functions (:class:`StepFn`); a
continuous part plus a jump overlay is a :class:`MixedFn`. For these classes
the running maximum, the record set ``{f* = f}``, the Jordan decomposition and
the Lebesgue-Stieltjes measure of intervals are all computable exactly up to
one rounding per crossing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .fbm import SampledPath

__all__ = [
    "PiecewiseLinearFn",
    "StepFn",
    "MixedFn",
    "JordanPair",
    "RecordSet",
    "running_max",
    "total_variation",
    "jordan_decompose",
    "ls_measure",
    "record_set",
    "record_integral",
    "record_integral_step",
    "jump_gaps",
    "ac_check",
    "record_tolerance",
    "random_pl",
    "random_jump_fn",
]


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """Continuous function given by linear interpolation between knots."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        knots = np.array(self.knots, dtype=float)
        values = np.array(self.values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
            raise ValueError("need at least two knots with matching values")
        if knots[0] != 0.0:
            raise ValueError("knots must start at 0")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        knots.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    @property
    def horizon(self) -> float:
        return float(self.knots[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def __call__(self, t):
        return np.interp(t, self.knots, self.values)

    def left_limit(self, t):
        return self(t)

    @classmethod
    def constant(cls, value: float, horizon: float = 1.0) -> "PiecewiseLinearFn":
        return cls([0.0, horizon], [value, value])


@dataclass(frozen=True)
class StepFn:
    """Right-continuous pure-jump function on ``[0, horizon]``.

    ``jumps`` holds ``(time, size)`` pairs with times in ``(0, horizon]``.
    """

    initial_value: float
    jumps: tuple = ()
    horizon: float = 1.0

    def __post_init__(self) -> None:
        jumps = tuple((float(t), float(s)) for t, s in self.jumps)
        times = [t for t, _ in jumps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("jump times must be strictly increasing")
        if times and not (0.0 < times[0] and times[-1] <= self.horizon):
            raise ValueError("jump times must lie in (0, horizon]")
        if any(s == 0.0 for _, s in jumps):
            raise ValueError("jump sizes must be nonzero")
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "initial_value", float(self.initial_value))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def jump_times(self) -> np.ndarray:
        return np.array([t for t, _ in self.jumps])

    @property
    def jump_sizes(self) -> np.ndarray:
        return np.array([s for _, s in self.jumps])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="right")
        levels = self.initial_value + np.concatenate([[0.0], np.cumsum(self.jump_sizes)])
        out = levels[idx]
        return float(out) if out.ndim == 0 else out

    def left_limit(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="left")
        levels = self.initial_value + np.concatenate([[0.0], np.cumsum(self.jump_sizes)])
        out = levels[idx]
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MixedFn:
    """Continuous piecewise-linear part plus a jump overlay.

    ``f(t) = continuous(t) + jumps(t) - jumps.initial_value``, so ``f(0)`` is
    ``continuous(0)``.
    """

    continuous: PiecewiseLinearFn
    jumps: StepFn

    def __post_init__(self) -> None:
        if self.continuous.horizon != self.jumps.horizon:
            raise ValueError("continuous part and jumps must share the horizon")

    @property
    def horizon(self) -> float:
        return self.continuous.horizon

    def __call__(self, t):
        return self.continuous(t) + self.jumps(t) - self.jumps.initial_value

    def left_limit(self, t):
        return self.continuous(t) + self.jumps.left_limit(t) - self.jumps.initial_value


BVFn = Union[PiecewiseLinearFn, StepFn, MixedFn]


@dataclass(frozen=True)
class JordanPair:
    """Positive and negative variation functions, ``f - f(0) = V - W``."""

    positive_variation: PiecewiseLinearFn
    negative_variation: PiecewiseLinearFn


@dataclass(frozen=True)
class RecordSet:
    """Disjoint, ordered closed intervals ``[a, b]`` (``a == b`` for points)."""

    segments: tuple = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.segments))


def record_tolerance(values) -> float:
    return 1e-12 * (1.0 + float(np.max(np.abs(values))))


def _pl_running_max(knots, values, level=-np.inf):
    """Refined knots, f values and f* values for a PL piece.

    ``level`` is the running maximum carried in from before the piece.
    """
    out_t = [knots[0]]
    out_f = [values[0]]
    m = max(level, values[0])
    out_m = [m]
    for t0, t1, v0, v1 in zip(knots[:-1], knots[1:], values[:-1], values[1:]):
        if v1 > m and v0 < m:
            tc = t0 + (m - v0) / (v1 - v0) * (t1 - t0)
            if t0 < tc < t1:
                out_t.append(tc)
                out_f.append(m)
                out_m.append(m)
        m = max(m, v1)
        out_t.append(t1)
        out_f.append(v1)
        out_m.append(m)
    return np.array(out_t), np.array(out_f), np.array(out_m)


def running_max(f):
    """Maximum-so-far ``f*(t) = max_{s <= t} f(s)`` in the input's representation.

    For piecewise-linear input a knot is inserted wherever ``f`` climbs back
    through its previous maximum.
    """
    if isinstance(f, SampledPath):
        return SampledPath(f.times, np.maximum.accumulate(f.values))
    if isinstance(f, PiecewiseLinearFn):
        t, _, m = _pl_running_max(f.knots, f.values)
        return PiecewiseLinearFn(t, m)
    if isinstance(f, StepFn):
        level = f.initial_value
        jumps = []
        for tau, size in f.jumps:
            value = f(tau)
            if value > level:
                jumps.append((tau, value - level))
                level = value
        return StepFn(f.initial_value, jumps, f.horizon)
    if isinstance(f, MixedFn):
        raise TypeError("running_max of a MixedFn is not closed in this class; "
                        "use record_integral_step")
    raise TypeError(f"unsupported input {type(f).__name__}")


def total_variation(f) -> float:
    """Exact total variation on ``[0, horizon]``."""
    if isinstance(f, PiecewiseLinearFn):
        return float(np.sum(np.abs(np.diff(f.values))))
    if isinstance(f, StepFn):
        return float(np.sum(np.abs(f.jump_sizes)))
    if isinstance(f, MixedFn):
        return total_variation(f.continuous) + total_variation(f.jumps)
    raise TypeError(f"unsupported input {type(f).__name__}")


def jordan_decompose(f: PiecewiseLinearFn) -> JordanPair:
    dv = np.diff(f.values)
    pos = np.concatenate([[0.0], np.cumsum(np.maximum(dv, 0.0))])
    neg = np.concatenate([[0.0], np.cumsum(np.maximum(-dv, 0.0))])
    return JordanPair(PiecewiseLinearFn(f.knots, pos), PiecewiseLinearFn(f.knots, neg))


def ls_measure(
    f,
    a: float,
    b: float,
    *,
    left_open: bool = True,
    right_open: bool = False,
) -> float:
    """Lebesgue-Stieltjes measure ``mu_f`` of the interval from ``a`` to ``b``.

    The default is the half-open ``(a, b]``. Atoms sit at jump times;
    ``mu_f({0}) = 0``.
    """
    if not 0.0 <= a <= b <= f.horizon:
        raise ValueError(f"interval [{a}, {b}] outside [0, {f.horizon}]")
    if a == b and (left_open or right_open):
        return 0.0
    upper = f.left_limit(b) if right_open else f(b)
    lower = f(a) if left_open or a == 0.0 else f.left_limit(a)
    return float(upper - lower)


def _record_runs(is_rec, seg_rec):
    """Index pairs of maximal runs of record knots joined by record sub-segments."""
    runs = []
    start = None
    last = is_rec.size - 1
    for i in range(is_rec.size):
        if start is None and is_rec[i]:
            start = i
        if start is not None and (i == last or not seg_rec[i]):
            runs.append((start, i))
            start = None
    return runs


def _pl_records(knots, values, level=-np.inf):
    t, fv, mv = _pl_running_max(knots, values, level)
    scale = fv if np.isinf(level) else np.append(fv, level)
    is_rec = mv - fv <= record_tolerance(scale)
    seg_rec = np.zeros(t.size, dtype=bool)
    seg_rec[:-1] = is_rec[:-1] & is_rec[1:] & (fv[1:] >= fv[:-1])
    runs = _record_runs(is_rec, seg_rec)
    segments = [(float(t[i]), float(t[j])) for i, j in runs]
    rise = sum(fv[j] - fv[i] for i, j in runs)
    return segments, rise, mv[-1]


def record_set(f: PiecewiseLinearFn) -> RecordSet:
    """Closed set ``{t : f*(t) = f(t)}`` as maximal intervals."""
    segments, _, _ = _pl_records(f.knots, f.values)
    return RecordSet(tuple(segments))


def record_integral(f: PiecewiseLinearFn) -> float:
    """``int 1{f* = f} d mu_f``: total rise of ``f`` over its record segments."""
    _, rise, _ = _pl_records(f.knots, f.values)
    return float(rise)


def ac_check(f: PiecewiseLinearFn) -> float:
    """``int_E f' dm``: slope times overlap length, summed over the record set."""
    rs = record_set(f)
    slopes = f.slopes
    total = 0.0
    for a, b in rs:
        if b <= a:
            continue
        lo = np.maximum(f.knots[:-1], a)
        hi = np.minimum(f.knots[1:], b)
        overlap = np.clip(hi - lo, 0.0, None)
        total += float(np.dot(slopes, overlap))
    return total


def _as_mixed(f) -> MixedFn:
    if isinstance(f, MixedFn):
        return f
    if isinstance(f, StepFn):
        pl = PiecewiseLinearFn.constant(f.initial_value, f.horizon)
        return MixedFn(pl, StepFn(0.0, f.jumps, f.horizon))
    if isinstance(f, PiecewiseLinearFn):
        return MixedFn(f, StepFn(0.0, (), f.horizon))
    raise TypeError(f"unsupported input {type(f).__name__}")


def _pieces(f: MixedFn):
    """Continuous pieces between jumps: ``(start, end, knots, values)``.

    Values are the full function ``f`` (jump offsets included) on the piece.
    """
    cont = f.continuous
    bounds = [0.0, *f.jumps.jump_times.tolist()]
    ends = [*f.jumps.jump_times.tolist(), cont.horizon]
    for a, b in zip(bounds, ends):
        inner = cont.knots[(cont.knots > a) & (cont.knots < b)]
        knots = np.concatenate([[a], inner, [b]]) if b > a else np.array([a])
        offset = f.jumps(a) - f.jumps.initial_value
        yield a, b, knots, cont(knots) + offset


def _walk_jumps(f):
    """Shared pass for :func:`record_integral_step` and :func:`jump_gaps`."""
    f = _as_mixed(f)
    tol = 1e-12 * (1.0 + total_variation(f) + abs(f(0.0)))
    level = -np.inf
    integral = 0.0
    gaps = []
    for a, b, knots, values in _pieces(f):
        if a > 0.0:
            before = float(f.left_limit(a))
            landing = float(f(a))
            if landing >= level - tol:
                integral += landing - before
                gaps.append((a, level - before))
            level = max(level, before)
        if knots.size >= 2:
            _, rise, top = _pl_records(knots, values, level)
            integral += rise
            level = max(level, top)
        else:
            level = max(level, values[0])
    return f, integral, level, gaps


def record_integral_step(f) -> tuple[float, float]:
    """Record integral for functions with jumps, and its failure residual.

    Atoms at jumps that land at or above the previous running maximum are
    counted in full. Returns ``(integral, residual)`` with
    ``residual = f*(T) - f(0) - integral``; it equals minus the sum of the gaps
    ``f*(tau-) - f(tau-)`` over those jumps.
    """
    f, integral, top, _ = _walk_jumps(f)
    residual = (top - float(f(0.0))) - integral
    return float(integral), float(residual)


def jump_gaps(f) -> list[tuple[float, float]]:
    """``(tau, f*(tau-) - f(tau-))`` for every jump reaching the running maximum."""
    return _walk_jumps(f)[3]


def random_pl(rng: np.random.Generator, horizon: float = 1.0, max_knots: int = 50) -> PiecewiseLinearFn:
    """Random continuous PL function: 2..max_knots knots, values uniform in [-1, 1]."""
    k = int(rng.integers(2, max_knots + 1))
    inner = np.sort(rng.uniform(0.0, horizon, size=k - 2))
    knots = np.concatenate([[0.0], inner, [horizon]])
    if np.any(np.diff(knots) <= 0):
        return random_pl(rng, horizon, max_knots)
    return PiecewiseLinearFn(knots, rng.uniform(-1.0, 1.0, size=k))


def random_jump_fn(rng: np.random.Generator, horizon: float = 1.0, continuous: bool = False):
    """Random step (or PL plus jumps) function with a record-breaking jump from below.

    The jump list always contains a new maximum, a drop strictly below it and
    a jump back above it; further random jumps follow.
    """
    top = rng.uniform(0.5, 1.5)
    drop = rng.uniform(0.1, 1.0)
    rise = drop + rng.uniform(0.05, 1.0)
    sizes = [top, -drop, rise, *rng.normal(0.0, 1.0, size=int(rng.integers(0, 6)))]
    sizes = [s for s in sizes if s != 0.0]
    times = np.sort(rng.uniform(0.0, horizon, size=len(sizes)))
    if times[0] == 0.0 or np.any(np.diff(times) <= 0):
        return random_jump_fn(rng, horizon, continuous)
    jumps = StepFn(0.0, list(zip(times, sizes)), horizon)
    if not continuous:
        return StepFn(float(rng.uniform(-1.0, 1.0)), jumps.jumps, horizon)
    f = MixedFn(random_pl(rng, horizon, max_knots=10), jumps)
    # the continuous part can pre-empt the planted record-breaking jump
    if not any(gap > 0.0 for _, gap in jump_gaps(f)):
        return random_jump_fn(rng, horizon, continuous)
    return f
