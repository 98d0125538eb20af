"""Matplotlib figures written next to the CLI's CSV reports."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import ExperimentReport  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def figure_size(scale: float = 1.0) -> tuple[float, float]:
    width = 6.0 * scale
    return width, width * (math.sqrt(5.0) - 1.0) / 2.0


def figure_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


def _new(ncols: int = 1):
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, ncols, figsize=figure_size(1.0 if ncols == 1 else 1.6))
    return fig, np.atleast_1d(axes)


def _save(fig, dest) -> Path:
    dest = Path(dest)
    with plt.rc_context(_RC):
        fig.tight_layout()
        fig.savefig(dest)
    plt.close(fig)
    return dest


def _errorbars(ax, report: ExperimentReport, experiment: str, x_attr: str = "grid", **kw):
    rows = report.select(experiment)
    x = np.array([getattr(r, x_attr) for r in rows], dtype=float)
    y = np.array([r.estimate for r in rows])
    err = np.array([r.std_err or 0.0 for r in rows])
    ax.errorbar(x, y, yerr=2 * err, marker="o", ms=3, capsize=2, **kw)
    return x, y


def plot_path(times, values, dest, label: str = "B") -> Path:
    fig, (ax,) = _new()
    ax.plot(times, values, lw=0.7, label=label)
    ax.plot(times, np.maximum.accumulate(values), lw=0.7, ls="--", label="running max")
    ax.set_xlabel("t")
    ax.legend(frameon=False)
    return _save(fig, dest)


def plot_qv(report: ExperimentReport, dest, hurst: float) -> Path:
    fig, (ax,) = _new()
    x, y = _errorbars(ax, report, "qv_mean", label="mean QV")
    ref = y[0] * (x / x[0]) ** (1.0 - 2.0 * hurst)
    ax.plot(x, ref, ls=":", color="k", label=f"slope 1-2H = {1 - 2 * hurst:.2f}")
    if report.select("cov_abs_residual"):
        _errorbars(ax, report, "cov_abs_residual", label="|x| change-of-variables residual")
    ax.set(xscale="log", yscale="log", xlabel="grid cells n")
    ax.legend(frameon=False)
    return _save(fig, dest)


def plot_maxrep(report: ExperimentReport, dest) -> Path:
    fig, (ax,) = _new()
    _errorbars(ax, report, "residual_rms", label="representation residual RMS")
    _errorbars(ax, report, "max_abs_error", label="|mean S_T - sqrt(2T/pi)|")
    ax.set(xscale="log", yscale="log", xlabel="grid cells n")
    ax.legend(frameon=False)
    return _save(fig, dest)


def plot_failure(report: ExperimentReport, dest) -> Path:
    fig, (left, right) = _new(ncols=2)
    _errorbars(left, report, "eps_band_abs_sum", x_attr="eps", label="eps-band |sum|")
    if report.select("indicator_norm_w2"):
        _errorbars(left, report, "indicator_norm_w2", x_attr="eps", label="indicator W2 norm")
    left.set(xscale="log", xlabel="eps / path range")
    left.legend(frameon=False)
    for name, label in [
        ("occupation_eps0", "record occupation (eps=0)"),
        ("discrete_record_sum", "discrete-record sum"),
        ("max_minus_start", "max - start"),
        ("eps_band_abs_sum_fixed_eps", "eps-band |sum|, smallest eps"),
    ]:
        if report.select(name):
            _errorbars(right, report, name, label=label)
    right.set(xscale="log", xlabel="grid cells n")
    right.legend(frameon=False)
    return _save(fig, dest)


def plot_functions(curves: dict, dest, xlabel: str = "t") -> Path:
    """Overlay ``{label: (x, y)}`` curves."""
    fig, (ax,) = _new()
    for label, (x, y) in curves.items():
        ax.plot(x, y, lw=0.9, label=label)
    ax.set_xlabel(xlabel)
    ax.legend(frameon=False)
    return _save(fig, dest)
