"""Monte Carlo experiments on Brownian and fractional Brownian paths.

Covers the explicit martingale representation of the Brownian maximum,
quadratic variation and change-of-variables sums, and the record-indicator
integral ``int 1{B = M} dB`` read as Riemann sums, as an occupation measure
and as a generalized Lebesgue-Stieltjes integral.

The continuous-time event ``{B_t = M_t}`` cannot be observed on a grid, so
record sums come in two readings:

``discrete_record``
    ``B_{t_i}`` is a new on-grid maximum. Every record increment dominates
    the increment of the discrete maximum, so the sum is at least
    ``max_i B_{t_i} - B_0`` on every path.
``eps_band``
    ``M_{t_i} - B_{t_i} <= eps`` with ``M`` taken on a reference grid that
    refines the path grid (16x by default). As ``eps`` shrinks the indicator
    empties.

Replica ``i`` always uses stream ``(base_seed, i)``; aggregates are
compensated sums in replica order, so reports do not depend on the number
of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma, ndtr

from .fbm import FbmConfig, Method, SampledPath, sample_paths
from .fraccalc import (
    FracParams,
    GridFn,
    besov_norm_w1,
    besov_norm_w2,
    gls_integral,
)
from .report import ExperimentReport, fit_loglog_slope, mean_and_se

__all__ = [
    "McPlan",
    "REFINE",
    "worker_count",
    "normal_cdf",
    "clark_ocone_integrand",
    "mc_max_representation",
    "quadratic_variation",
    "qv_experiment",
    "change_of_variables_residual",
    "cov_experiment",
    "eps_band_indicator",
    "record_indicator_sum",
    "record_occupation",
    "gls_indicator_experiment",
    "positive_max_check",
    "failure_battery",
]

REFINE = 16
CHUNK = 256


@dataclass(frozen=True)
class McPlan:
    replicas: int = 1000
    base_seed: int = 42
    grids: tuple = (256, 1024, 4096)
    hurst: float = 0.75
    horizon: float = 1.0
    method: Method = Method.CIRCULANT

    def __post_init__(self) -> None:
        grids = tuple(int(n) for n in self.grids)
        if not grids:
            raise ValueError("need at least one grid")
        if any(n < 1 or n & (n - 1) for n in grids):
            raise ValueError(f"grids must be powers of two, got {grids}")
        if any(b <= a for a, b in zip(grids, grids[1:])):
            raise ValueError(f"grids must be strictly increasing, got {grids}")
        if self.replicas < 1:
            raise ValueError("replicas must be positive")
        object.__setattr__(self, "grids", grids)
        # validates hurst, horizon and seed
        self.config(grids[0])

    def config(self, steps: int, horizon: float | None = None) -> FbmConfig:
        return FbmConfig(
            hurst=self.hurst,
            horizon=self.horizon if horizon is None else horizon,
            steps=steps,
            seed=self.base_seed,
            method=self.method,
        )


def worker_count() -> int:
    """Threads for replica chunks: ``FRACPATH_THREADS``, 0 or unset meaning all cores."""
    raw = os.environ.get("FRACPATH_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("FRACPATH_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _map_replicas(
    config: FbmConfig, replicas: int, func: Callable[[np.ndarray], np.ndarray]
) -> np.ndarray:
    """Apply ``func`` to fixed-size chunks of replica paths, concatenated in order."""
    # Chunk size depends only on the grid, never on the worker count.
    chunk = max(1, min(CHUNK, (1 << 21) // (config.steps + 1)))
    starts = range(0, replicas, chunk)

    def run(start: int) -> np.ndarray:
        paths = sample_paths(config, start, min(chunk, replicas - start))
        return np.asarray(func(paths))

    workers = min(worker_count(), len(starts))
    if workers <= 1:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# Brownian maximum
# ---------------------------------------------------------------------------


def normal_cdf(x):
    """Standard normal distribution function."""
    out = ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


def clark_ocone_integrand(running_max, value, t, horizon):
    """``2 (1 - Phi((S_t - W_t) / sqrt(T - t)))``, the integrand for ``S_T``."""
    t = np.asarray(t, dtype=float)
    if np.any(t >= horizon):
        raise ValueError("integrand is only defined for t < horizon")
    gap = np.asarray(running_max, dtype=float) - np.asarray(value, dtype=float)
    out = 2.0 * ndtr(-gap / np.sqrt(horizon - t))
    return float(out) if out.ndim == 0 else out


def mc_max_representation(plan: McPlan) -> ExperimentReport:
    """Estimate ``E S_T`` and the residual of the martingale representation.

    Per path, ``S_T - sqrt(2T/pi) - sum h(t_{i-1}) dW_i`` with the integrand
    ``h`` evaluated at left endpoints on the discrete running maximum.
    """
    if plan.hurst != 0.5:
        raise ValueError(f"the maximum representation needs hurst=0.5, got {plan.hurst}")
    T = plan.horizon
    target = math.sqrt(2.0 * T / math.pi)
    report = ExperimentReport("maxrep")
    rms = []
    for n in plan.grids:
        cfg = plan.config(n)
        t_left = cfg.times[:-1]

        def per_path(w: np.ndarray) -> np.ndarray:
            s = np.maximum.accumulate(w, axis=1)
            h = clark_ocone_integrand(s[:, :-1], w[:, :-1], t_left, T)
            stoch = np.sum(h * np.diff(w, axis=1), axis=1)
            return np.stack([s[:, -1], s[:, -1] - target - stoch], axis=1)

        out = _map_replicas(cfg, plan.replicas, per_path)
        mean, se = mean_and_se(out[:, 0])
        msq, msq_se = mean_and_se(out[:, 1] ** 2)
        r = math.sqrt(msq)
        rms.append(r)
        report.add("max_mean", mean, grid=n, std_err=se)
        report.add("max_abs_error", abs(mean - target), grid=n, std_err=se)
        report.add("residual_rms", r, grid=n, std_err=msq_se / (2.0 * r) if r > 0 else 0.0)
    if len(plan.grids) >= 2:
        slope, slope_err = fit_loglog_slope(plan.grids, rms)
        report.add("residual_rms_slope", slope, slope=slope, slope_err=slope_err)
    return report


# ---------------------------------------------------------------------------
# Quadratic variation and change of variables
# ---------------------------------------------------------------------------


def _values(path) -> np.ndarray:
    return path.values if isinstance(path, (SampledPath, GridFn)) else np.asarray(path)


def quadratic_variation(path) -> float:
    """``sum (B_{t_i} - B_{t_{i-1}})^2`` over the grid."""
    v = _values(path)
    if v.size < 2:
        raise ValueError("need at least two points")
    return math.fsum(np.diff(v) ** 2)


def qv_experiment(plan: McPlan) -> ExperimentReport:
    """Mean quadratic variation per grid and its log-log slope in ``n``."""
    report = ExperimentReport("qv")
    means = []
    for n in plan.grids:
        qv = _map_replicas(plan.config(n), plan.replicas,
                           lambda b: np.sum(np.diff(b, axis=1) ** 2, axis=1))
        mean, se = mean_and_se(qv)
        means.append(mean)
        report.add("qv_mean", mean, grid=n, std_err=se)
    if len(plan.grids) >= 2:
        slope, slope_err = fit_loglog_slope(plan.grids, means)
        report.add("qv_slope", slope, slope=slope, slope_err=slope_err)
    return report


def _g_and_derivative(g: str):
    if g == "square":
        return np.square, lambda x: 2.0 * x
    if g == "abs":
        # left derivative of |x|, so -1 at 0
        return np.abs, lambda x: np.where(x > 0.0, 1.0, -1.0)
    raise ValueError(f"g must be 'square' or 'abs', got {g!r}")


def change_of_variables_residual(path, g: str = "square") -> float:
    """``|g(B_T) - g(B_0) - sum g'(B_{t_{i-1}}) dB_i|`` with ``g'`` the left derivative."""
    v = _values(path)
    fn, deriv = _g_and_derivative(g)
    stoch = math.fsum(deriv(v[:-1]) * np.diff(v))
    return abs(math.fsum([fn(v[-1]), -fn(v[0]), -stoch]))


def cov_experiment(plan: McPlan, g: str = "abs") -> ExperimentReport:
    report = ExperimentReport(f"cov_{g}")
    fn, deriv = _g_and_derivative(g)

    def per_path(b: np.ndarray) -> np.ndarray:
        stoch = np.sum(deriv(b[:, :-1]) * np.diff(b, axis=1), axis=1)
        return np.abs(fn(b[:, -1]) - fn(b[:, 0]) - stoch)

    for n in plan.grids:
        res = _map_replicas(plan.config(n), plan.replicas, per_path)
        mean, se = mean_and_se(res)
        report.add(f"cov_{g}_residual", mean, grid=n, std_err=se)
    return report


# ---------------------------------------------------------------------------
# Record indicator
# ---------------------------------------------------------------------------


def _coarse_and_max(path, reference):
    v = _values(path)
    if reference is None:
        return v, np.maximum.accumulate(v)
    ref = _values(reference)
    if (ref.size - 1) % (v.size - 1):
        raise ValueError("reference grid must refine the path grid")
    k = (ref.size - 1) // (v.size - 1)
    if not np.array_equal(ref[::k], v):
        raise ValueError("reference path does not agree with the path on its grid")
    return v, np.maximum.accumulate(ref)[::k]


def eps_band_indicator(path, eps: float, reference=None) -> np.ndarray:
    """Boolean ``M_{t_i} - B_{t_i} <= eps`` on the path grid.

    ``M`` is the running maximum of ``reference`` when given (a path on a
    grid refining the path grid), else of ``path`` itself.
    """
    if not eps >= 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    v, m = _coarse_and_max(path, reference)
    return (m - v) <= eps


def record_indicator_sum(
    path, mode: str = "discrete_record", eps: float = 0.0, reference=None
) -> float:
    """``sum_i 1{record at t_i} (B_{t_i} - B_{t_{i-1}})``.

    ``mode='discrete_record'`` marks exact on-grid records. ``mode='eps_band'``
    needs ``eps > 0`` and marks ``M - B <= eps`` with ``M`` from ``reference``
    (see :func:`eps_band_indicator`). The sum is compensated, so the
    discrete-record value is never below ``fsum([max B, -B_0])``.
    """
    v = _values(path)
    if mode == "discrete_record":
        ind = v >= np.maximum.accumulate(v)
    elif mode == "eps_band":
        if not eps > 0:
            raise ValueError(f"eps_band mode needs eps > 0, got {eps}")
        ind = eps_band_indicator(path, eps, reference)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    idx = np.flatnonzero(ind[1:]) + 1
    return math.fsum(np.concatenate([v[idx], -v[idx - 1]]))


def record_occupation(path, eps: float = 0.0) -> float:
    """Fraction of grid points with ``M_t - B_t <= eps`` (``M`` on the same grid)."""
    return float(np.mean(eps_band_indicator(path, eps)))


def gls_indicator_experiment(
    path,
    params: FracParams,
    eps_list: Sequence[float],
    hurst: float,
    reference=None,
) -> ExperimentReport:
    """Norm, GLS integral and integral bound for the eps-band record indicator.

    For each ``eps``, ``f = 1{M - B <= eps}`` on the path grid; reports
    ``||f||_{2,beta}``, ``int f dB`` and ``Gamma(beta)^-1 ||f||_{2,beta}
    ||B||_{1,1-beta}``.
    """
    if not hurst > 0.5:
        raise ValueError(f"needs hurst > 1/2, got {hurst}")
    if not 1.0 - hurst < params.beta < 0.5:
        raise ValueError(f"beta={params.beta} outside ({1 - hurst}, 1/2)")
    g = path if isinstance(path, GridFn) else GridFn(path.times, path.values)
    n = g.steps
    g_norm = besov_norm_w1(g, params.complement)
    report = ExperimentReport("gls_indicator")
    for eps in eps_list:
        f = GridFn(g.times, eps_band_indicator(path, eps, reference).astype(float))
        norm = besov_norm_w2(f, params)
        integral = gls_integral(f, g, params)
        bound = norm * g_norm / gamma(params.beta)
        report.add("indicator_norm_w2", norm, grid=n, eps=eps)
        report.add("indicator_gls", integral, grid=n, eps=eps)
        report.add("indicator_gls_bound", bound, grid=n, eps=eps)
    return report


def positive_max_check(plan: McPlan) -> ExperimentReport:
    """Fraction of paths whose discrete maximum on ``[0, T/10]`` is ``<= 0``.

    The path is simulated directly on ``[0, T/10]`` with each grid's step
    count, so a one-step grid reduces to the sign of a single Gaussian.
    """
    report = ExperimentReport("positive_max")
    t = plan.horizon / 10.0
    for n in plan.grids:
        hits = _map_replicas(plan.config(n, horizon=t), plan.replicas,
                             lambda b: (np.max(b, axis=1) <= 0.0).astype(float))
        mean, se = mean_and_se(hits)
        report.add("max_nonpositive_fraction", mean, grid=n, std_err=se)
    return report


def failure_battery(
    plan: McPlan,
    eps_fractions: Sequence[float] = (1e-1, 1e-2, 1e-3),
    band_grid: int = 1024,
    gls_paths: int = 8,
    beta: float | None = None,
) -> ExperimentReport:
    """Record-indicator experiments for fBm.

    * ``eps_band_abs_sum``: mean ``|sum|`` at ``band_grid`` with a 16x
      reference grid, for ``eps = fraction * (path range)``;
    * across ``plan.grids``: the discrete-record sum next to ``M_T - B_0``,
      the eps-band sum at the smallest fraction, the record occupation at
      ``eps = 0`` and the minimum pathwise excess of the discrete-record sum
      over ``M_T - B_0``;
    * norm, GLS integral and bound for the eps-band indicator on the first
      ``gls_paths`` paths.
    """
    from .fraccalc import default_beta

    beta = default_beta(plan.hurst) if beta is None else beta
    params = FracParams(beta)
    report = ExperimentReport("failure")
    eps_fractions = sorted(eps_fractions, reverse=True)
    fine = plan.config(band_grid * REFINE)
    times = np.arange(band_grid + 1) * (plan.horizon / band_grid)

    def band_stats(refs: np.ndarray) -> np.ndarray:
        rows = []
        for ref in refs:
            path = ref[::REFINE]
            span = float(ref.max() - ref.min())
            rows.append([abs(record_indicator_sum(path, "eps_band", fr * span, ref))
                         for fr in eps_fractions])
        return np.array(rows)

    stats = _map_replicas(fine, plan.replicas, band_stats)
    for j, fr in enumerate(eps_fractions):
        mean, se = mean_and_se(stats[:, j])
        report.add("eps_band_abs_sum", mean, grid=band_grid, eps=fr, std_err=se)

    small = eps_fractions[-1]

    def grid_stats(refs: np.ndarray) -> np.ndarray:
        out = []
        for ref in refs:
            path = ref[::REFINE]
            span = float(ref.max() - ref.min())
            disc = record_indicator_sum(path)
            top = math.fsum([path.max(), -path[0]])
            out.append([
                disc,
                top,
                abs(record_indicator_sum(path, "eps_band", small * span, ref)),
                record_occupation(path, 0.0),
                disc - top,
            ])
        return np.array(out)

    for n in plan.grids:
        gs = _map_replicas(plan.config(n * REFINE), plan.replicas, grid_stats)
        for j, (name, eps) in enumerate([
            ("discrete_record_sum", None),
            ("max_minus_start", None),
            ("eps_band_abs_sum_fixed_eps", small),
            ("occupation_eps0", 0.0),
        ]):
            mean, se = mean_and_se(gs[:, j])
            report.add(name, mean, grid=n, eps=eps, std_err=se)
        # exact pathwise inequality: never negative
        report.add("discrete_record_excess_min", float(np.min(gs[:, 4])), grid=n)

    refs = sample_paths(fine, 0, min(gls_paths, plan.replicas))
    per_eps = {fr: [] for fr in eps_fractions}
    for ref in refs:
        path = SampledPath(times, ref[::REFINE])
        span = float(ref.max() - ref.min())
        sub = gls_indicator_experiment(
            path, params, [fr * span for fr in eps_fractions], plan.hurst,
            reference=SampledPath(fine.times, ref),
        )
        norms = sub.column("indicator_norm_w2")
        gls = sub.column("indicator_gls")
        bounds = sub.column("indicator_gls_bound")
        for j, fr in enumerate(eps_fractions):
            per_eps[fr].append((norms[j], abs(gls[j]), bounds[j], float(abs(gls[j]) <= bounds[j] * (1 + 1e-6))))
    for fr in eps_fractions:
        arr = np.array(per_eps[fr])
        for j, name in enumerate(("indicator_norm_w2", "indicator_abs_gls",
                                  "indicator_gls_bound", "bound_holds_fraction")):
            mean, se = mean_and_se(arr[:, j])
            report.add(name, mean, grid=band_grid, eps=fr, std_err=se)
    return report
