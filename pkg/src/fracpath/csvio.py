"""CSV readers and writers for paths, piecewise-linear and step functions.

Lines starting with ``#`` are comments, except ``# initial=<v>`` which
carries the initial level of a step function.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .bv import PiecewiseLinearFn, StepFn
from .fbm import SampledPath
from .report import comment_header


def _write(path, text: str) -> None:
    Path(path).write_text(text)


def _pairs_csv(header: tuple[str, str], a, b, meta: dict | None, extra: str = "") -> str:
    buf = io.StringIO()
    if meta:
        buf.write(comment_header(meta))
    buf.write(extra)
    buf.write(",".join(header) + "\n")
    for x, y in zip(a, b):
        buf.write(f"{float(x)!r},{float(y)!r}\n")
    return buf.getvalue()


def path_to_csv(path: SampledPath, meta: dict | None = None) -> str:
    return _pairs_csv(("t", "value"), path.times, path.values, meta)


def write_path(dest, path: SampledPath, meta: dict | None = None) -> None:
    _write(dest, path_to_csv(path, meta))


def _read_rows(src, expected: tuple[str, str]):
    meta = {}
    rows = []
    header = None
    for line in Path(src).read_text().splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        if header is None:
            header = tuple(next(csv.reader([line])))
            if header != expected:
                raise ValueError(f"{src}: expected header {','.join(expected)}, got {line}")
            continue
        a, b = line.split(",")
        rows.append((float(a), float(b)))
    if header is None:
        raise ValueError(f"{src}: missing header")
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1], meta


def read_path(src) -> SampledPath:
    t, v, _ = _read_rows(src, ("t", "value"))
    return SampledPath(t, v)


def write_pl(dest, f: PiecewiseLinearFn, meta: dict | None = None) -> None:
    _write(dest, _pairs_csv(("t", "value"), f.knots, f.values, meta))


def read_pl(src) -> PiecewiseLinearFn:
    t, v, _ = _read_rows(src, ("t", "value"))
    return PiecewiseLinearFn(t, v)


def write_step(dest, f: StepFn, meta: dict | None = None) -> None:
    meta = dict(meta or {})
    meta["horizon"] = f.horizon
    extra = f"# initial={f.initial_value!r}\n"
    _write(dest, _pairs_csv(("t", "jump"), f.jump_times, f.jump_sizes, meta, extra))


def read_step(src, horizon: float | None = None) -> StepFn:
    t, s, meta = _read_rows(src, ("t", "jump"))
    if "initial" not in meta:
        raise ValueError(f"{src}: missing '# initial=<v>' line")
    if horizon is None:
        horizon = float(meta.get("horizon", t[-1] if t.size else 1.0))
    return StepFn(float(meta["initial"]), list(zip(t, s)), horizon)
