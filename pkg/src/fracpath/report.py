"""Experiment reports and their CSV form."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

REPORT_COLUMNS = ("experiment", "grid", "eps", "estimate", "std_err", "slope", "slope_err")


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    estimate: float
    grid: int | None = None
    eps: float | None = None
    std_err: float | None = None
    slope: float | None = None
    slope_err: float | None = None

    def __post_init__(self) -> None:
        if self.std_err is not None and not self.std_err >= 0:
            raise ValueError(f"standard error must be >= 0, got {self.std_err}")


@dataclass
class ExperimentReport:
    """Rows from one experiment family, in the order they were produced."""

    name: str
    rows: list[ReportRow] = field(default_factory=list)

    def add(self, experiment: str, estimate: float, **kw) -> ReportRow:
        row = ReportRow(experiment, float(estimate), **kw)
        self.rows.append(row)
        return row

    def extend(self, other: "ExperimentReport") -> None:
        self.rows.extend(other.rows)

    def select(self, experiment: str) -> list[ReportRow]:
        return [r for r in self.rows if r.experiment == experiment]

    def column(self, experiment: str, attr: str = "estimate") -> np.ndarray:
        return np.array([getattr(r, attr) for r in self.select(experiment)], dtype=float)

    def to_csv(self, header: dict | None = None) -> str:
        return rows_to_csv(self.rows, header)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def comment_header(config: dict) -> str:
    return "".join(f"# {k}={_fmt_config(v)}\n" for k, v in config.items())


def _fmt_config(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(_fmt_config(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Iterable[ReportRow], header: dict | None = None) -> str:
    buf = io.StringIO()
    if header:
        buf.write(comment_header(header))
    buf.write(",".join(REPORT_COLUMNS) + "\n")
    for r in rows:
        buf.write(
            ",".join(
                [r.experiment]
                + [_fmt(getattr(r, c)) for c in REPORT_COLUMNS[1:]]
            )
            + "\n"
        )
    return buf.getvalue()


def mean_and_se(values) -> tuple[float, float]:
    """Mean and standard error with compensated sums in input order."""
    values = [float(v) for v in np.ravel(values)]
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def fit_loglog_slope(x, y) -> tuple[float, float]:
    """Least-squares slope of ``log y`` on ``log x`` and its standard error."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ValueError("need at least two points to fit a slope")
    design = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    if lx.size == 2:
        return float(coef[0]), 0.0
    resid = ly - design @ coef
    sigma2 = float(resid @ resid) / (lx.size - 2)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    return float(coef[0]), math.sqrt(sigma2 / sxx)
