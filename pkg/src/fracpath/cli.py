"""Command-line runner for the fracpath experiments.

Every subcommand writes one CSV whose ``#`` header records the resolved
configuration, prints a one-line summary and exits 0. Configuration errors
exit 2, numeric failures (for example a circulant embedding with negative
eigenvalues) exit 1. ``--plot`` additionally renders a PNG next to the CSV.

Parameters come from flags or from a plain ``key=value`` file given with
``--config``; flags win over the file.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .bv import (
    StepFn,
    ac_check,
    jump_gaps,
    random_jump_fn,
    random_pl,
    record_integral,
    record_integral_step,
    running_max,
    total_variation,
)
from .csvio import path_to_csv, read_path
from .experiments import (
    McPlan,
    cov_experiment,
    failure_battery,
    mc_max_representation,
    positive_max_check,
    qv_experiment,
)
from .fbm import FbmConfig, Method, SampledPath, SamplerError, sample_paths
from .fraccalc import (
    FracParams,
    GridFn,
    besov_report,
    gls_bound_check,
    gls_integral,
    riemann_stieltjes,
)
from .report import ExperimentReport, comment_header

COMMANDS = ("fbm", "qv", "maxrep", "bvcheck", "gls", "failure")

# Per-command defaults that differ from the RunConfig field defaults.
_COMMAND_DEFAULTS = {
    "fbm": {},
    "qv": {"grids": (256, 512, 1024, 2048, 4096, 8192, 16384), "replicas": 200},
    "maxrep": {"hurst": 0.5, "grids": (256, 1024, 4096), "replicas": 1000},
    "bvcheck": {},
    "gls": {"steps": 4096},
    "failure": {"grids": (256, 1024, 4096), "replicas": 1000},
}

HELP_DEFAULTS = (
    "defaults: hurst 0.75 (maxrep 0.5), horizon 1.0, steps 1024 (gls 4096), "
    "beta = midpoint of (1-H, 1/2) when H > 1/2 else 0.5, seed 42, "
    "eps 0.1,0.01,0.001, method circulant, corpus 1000, replicas 1000 (qv 200)"
)


class ConfigError(ValueError):
    """Invalid configuration; the CLI exits with status 2."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    hurst: float = 0.75
    horizon: float = 1.0
    steps: int = 1024
    grids: tuple = (256, 1024, 4096)
    replicas: int = 1000
    seed: int = 42
    beta: float | None = None
    eps: tuple = (0.1, 0.01, 0.001)
    method: str = "circulant"
    corpus: int = 1000
    gls_paths: int = 8
    f: str | None = None
    g: str | None = None
    out: str | None = None
    plot: bool = False

    @property
    def resolved_beta(self) -> float:
        if self.beta is not None:
            return self.beta
        return 0.5 * (1.5 - self.hurst) if self.hurst > 0.5 else 0.5

    @property
    def out_path(self) -> Path:
        return Path(self.out or f"{self.command}.csv")

    def plan(self, grids=None) -> McPlan:
        return McPlan(
            replicas=self.replicas,
            base_seed=self.seed,
            grids=tuple(grids or self.grids),
            hurst=self.hurst,
            horizon=self.horizon,
            method=Method(self.method),
        )

    def header(self) -> dict:
        d = asdict(self)
        d["beta"] = self.resolved_beta
        d["out"] = str(self.out_path)
        return d


_KEYS = {f.name for f in fields(RunConfig)} - {"command"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(text)


def _int_list(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(int(x) for x in text)
    return tuple(int(x) for x in str(text).split(",") if x.strip())


def _float_list(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).split(",") if x.strip())


_CONVERT = {
    "hurst": float,
    "horizon": float,
    "steps": int,
    "grids": _int_list,
    "replicas": int,
    "seed": int,
    "beta": float,
    "eps": _float_list,
    "method": str,
    "corpus": int,
    "gls_paths": int,
    "f": str,
    "g": str,
    "out": str,
    "plot": _parse_bool,
}


def read_config_file(path) -> dict:
    """Plain ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected key=value, got {line!r}")
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r} (valid keys: {', '.join(sorted(_KEYS))})")
        out[key] = value.strip()
    return out


def _convert(key: str, raw):
    try:
        return _CONVERT[key](raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


def _power_of_two(n: int) -> bool:
    return n >= 1 and not n & (n - 1)


def validate(cfg: RunConfig) -> RunConfig:
    """Check every parameter against the range its target module accepts."""

    def need(ok: bool, key: str, valid: str) -> None:
        if not ok:
            raise ConfigError(f"{key}={getattr(cfg, key)!r} out of range: must be {valid}")

    need(cfg.command in COMMANDS, "command", "one of " + ", ".join(COMMANDS))
    need(0.0 < cfg.hurst < 1.0, "hurst", "in (0,1)")
    need(cfg.horizon > 0.0 and math.isfinite(cfg.horizon), "horizon", "in (0,inf)")
    need(cfg.steps >= 1, "steps", "an integer >= 1")
    need(0 <= cfg.seed < 2**64, "seed", "an integer in [0,2^64)")
    need(cfg.replicas >= 1, "replicas", "an integer >= 1")
    need(cfg.corpus >= 1, "corpus", "an integer >= 1")
    need(cfg.gls_paths >= 1, "gls_paths", "an integer >= 1")
    need(cfg.method in ("cholesky", "circulant"), "method", "cholesky or circulant")
    need(cfg.beta is None or 0.0 < cfg.beta < 1.0, "beta", "in (0,1)")
    need(len(cfg.eps) > 0 and all(0.0 < e < 1.0 for e in cfg.eps), "eps",
         "a non-empty list of fractions in (0,1)")
    need(len(cfg.grids) > 0 and all(_power_of_two(n) for n in cfg.grids)
         and all(b > a for a, b in zip(cfg.grids, cfg.grids[1:])),
         "grids", "strictly increasing powers of two")
    if cfg.command == "maxrep":
        need(cfg.hurst == 0.5, "hurst", "0.5 for maxrep (Brownian motion)")
    if cfg.command == "failure":
        need(0.5 < cfg.hurst < 1.0, "hurst", "in (0.5,1) for failure")
        need(cfg.beta is None or 1.0 - cfg.hurst < cfg.beta < 0.5, "beta",
             f"in ({1.0 - cfg.hurst!r},0.5) for failure")
    if cfg.command in ("gls",):
        need(cfg.steps >= 2, "steps", "an integer >= 2 for gls")
    if cfg.method == "cholesky" and cfg.command in ("fbm", "qv", "maxrep", "failure"):
        finest = cfg.steps if cfg.command == "fbm" else cfg.grids[-1]
        if cfg.command == "failure":
            finest *= 16
        need(finest <= 4096, "method", "circulant when the finest simulated grid exceeds 4096 steps")
    return cfg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracpath",
        description="Pathwise calculus experiments for fractional Brownian motion.",
        epilog=HELP_DEFAULTS,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    helps = {
        "fbm": "sample one fBm path and write it as t,value",
        "qv": "quadratic-variation slope study plus |x| change-of-variables residuals",
        "maxrep": "Monte Carlo check of the Brownian maximum representation",
        "bvcheck": "record-integral identities on random PL and jump corpora",
        "gls": "fractional integral, Riemann-Stieltjes sum and bound for f, g",
        "failure": "record-indicator battery for fBm",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], epilog=HELP_DEFAULTS)
        p.add_argument("--config", metavar="FILE", help="key=value file; flags override it")
        p.add_argument("--hurst", type=str)
        p.add_argument("--horizon", type=str)
        p.add_argument("--steps", type=str, help="grid cells; for multi-grid commands sets "
                       "grids to steps/16, steps/4, steps unless --grids is given")
        p.add_argument("--grids", type=str, help="comma-separated powers of two")
        p.add_argument("--replicas", type=str)
        p.add_argument("--seed", type=str)
        p.add_argument("--beta", type=str)
        p.add_argument("--eps", type=str, help="comma-separated fractions of the path range")
        p.add_argument("--method", type=str, help="circulant or cholesky")
        p.add_argument("--corpus", type=str, help="corpus size for bvcheck")
        p.add_argument("--gls-paths", dest="gls_paths", type=str)
        p.add_argument("--f", type=str, help="gls integrand CSV (t,value); default x^2")
        p.add_argument("--g", type=str, help="gls integrator CSV (t,value); default x^3")
        p.add_argument("--out", "-o", type=str, help="output CSV (default <command>.csv)")
        p.add_argument("--plot", action="store_const", const="true",
                       help="also write a PNG figure next to the CSV")
    return parser


def parse_config(argv=None) -> RunConfig:
    """Resolve flags, an optional config file and per-command defaults.

    Raises :class:`ConfigError` on unknown keys or out-of-range values;
    argparse usage errors exit 2 on their own.
    """
    ns = _build_parser().parse_args(argv)
    raw = read_config_file(ns.config) if ns.config else {}
    for key in _KEYS:
        value = getattr(ns, key, None)
        if value is not None:
            raw[key] = value
    values = dict(_COMMAND_DEFAULTS[ns.command])
    for key, value in raw.items():
        values[key] = _convert(key, value)
    if "steps" in raw and "grids" not in raw and ns.command in ("qv", "maxrep", "failure"):
        n = values["steps"]
        if not _power_of_two(n) or n < 16:
            raise ConfigError(f"steps={n!r} out of range: must be a power of two >= 16 "
                              f"for {ns.command}")
        values["grids"] = (n // 16, n // 4, n)
    return validate(RunConfig(command=ns.command, **values))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _write(cfg: RunConfig, text: str) -> Path:
    dest = cfg.out_path
    if dest.parent and not dest.parent.exists():
        dest.parent.mkdir(parents=True)
    dest.write_text(text)
    return dest


def _fmt_grids(rows) -> str:
    return " ".join(f"{r.grid}:{r.estimate:.4g}" for r in rows)


def _cmd_fbm(cfg: RunConfig) -> str:
    fc = FbmConfig(cfg.hurst, cfg.horizon, cfg.steps, cfg.seed, Method(cfg.method))
    path = SampledPath(fc.times, sample_paths(fc, 0, 1)[0])
    dest = _write(cfg, path_to_csv(path, cfg.header()))
    if cfg.plot:
        from .plotting import figure_path, plot_path

        plot_path(path.times, path.values, figure_path(dest), label=f"B (H={cfg.hurst})")
    return (f"fbm: wrote {len(path)} points to {dest}; "
            f"B_T={path.values[-1]:.6g} max={path.values.max():.6g}")


def _cmd_qv(cfg: RunConfig) -> str:
    plan = cfg.plan()
    report = qv_experiment(plan)
    report.extend(cov_experiment(plan, "abs"))
    dest = _write(cfg, report.to_csv(cfg.header()))
    if cfg.plot:
        from .plotting import figure_path, plot_qv

        plot_qv(report, figure_path(dest), cfg.hurst)
    slope = report.select("qv_slope")
    slope_txt = f"slope={slope[0].estimate:.4f} (1-2H={1 - 2 * cfg.hurst:.4f})" if slope else ""
    return f"qv: H={cfg.hurst} {slope_txt} means {_fmt_grids(report.select('qv_mean'))}; wrote {dest}"


def _cmd_maxrep(cfg: RunConfig) -> str:
    report = mc_max_representation(cfg.plan())
    dest = _write(cfg, report.to_csv(cfg.header()))
    if cfg.plot:
        from .plotting import figure_path, plot_maxrep

        plot_maxrep(report, figure_path(dest))
    last = report.select("max_mean")[-1]
    target = math.sqrt(2.0 * cfg.horizon / math.pi)
    return (f"maxrep: E S_T ~ {last.estimate:.6f} +/- {last.std_err:.6f} at n={last.grid} "
            f"(sqrt(2T/pi)={target:.6f}); residual RMS "
            f"{_fmt_grids(report.select('residual_rms'))}; wrote {dest}")


def bvcheck_report(corpus: int, seed: int, horizon: float = 1.0) -> ExperimentReport:
    """Scaled residuals of the record-integral identities on random corpora.

    Rows: ``pl_max_scaled_residual`` (``|f*(T) - f(0) - int 1_E df| / (1+TV)``),
    ``ac_max_scaled_diff`` (``ac_check`` against ``record_integral``),
    ``step_identity_error`` (``|residual + sum gaps| / (1+TV)``),
    ``step_min_abs_residual`` and the fixed counterexample's residual.
    """
    rng = np.random.default_rng(seed)
    worst_pl = worst_ac = 0.0
    for _ in range(corpus):
        f = random_pl(rng, horizon)
        scale = 1.0 + total_variation(f)
        integral = record_integral(f)
        top = running_max(f).values[-1]
        worst_pl = max(worst_pl, abs(math.fsum([top, -f.values[0], -integral])) / scale)
        worst_ac = max(worst_ac, abs(ac_check(f) - integral) / scale)
    worst_id = 0.0
    min_res = math.inf
    for k in range(corpus):
        f = random_jump_fn(rng, horizon, continuous=bool(k % 2))
        _, residual = record_integral_step(f)
        gaps = math.fsum(gap for _, gap in jump_gaps(f))
        scale = 1.0 + total_variation(f)
        worst_id = max(worst_id, abs(residual + gaps) / scale)
        min_res = min(min_res, abs(residual))
    example = StepFn(0.0, ((0.25, 2.0), (0.5, -1.0), (0.75, 2.0)), 1.0)
    ex_integral, ex_residual = record_integral_step(example)
    report = ExperimentReport("bvcheck")
    report.add("pl_max_scaled_residual", worst_pl)
    report.add("ac_max_scaled_diff", worst_ac)
    report.add("step_identity_error", worst_id)
    report.add("step_min_abs_residual", min_res)
    report.add("counterexample_record_integral", ex_integral)
    report.add("counterexample_residual", ex_residual)
    return report


def _cmd_bvcheck(cfg: RunConfig) -> str:
    report = bvcheck_report(cfg.corpus, cfg.seed, cfg.horizon)
    dest = _write(cfg, report.to_csv(cfg.header()))
    if cfg.plot:
        from .plotting import figure_path, plot_functions

        f = random_pl(np.random.default_rng(cfg.seed), cfg.horizon)
        m = running_max(f)
        plot_functions({"f": (f.knots, f.values), "running max": (m.knots, m.values)},
                       figure_path(dest))
    worst = report.column("pl_max_scaled_residual")[0]
    ok = "ok" if worst <= 1e-12 and report.column("ac_max_scaled_diff")[0] <= 1e-12 else "FAILED"
    return (f"bvcheck: {cfg.corpus} PL functions, max residual/(1+TV) = {worst:.3g} "
            f"<= 1e-12 {ok}; step residual -sum(gaps) error "
            f"{report.column('step_identity_error')[0]:.3g}; wrote {dest}")


def _load_gridfn(src, default, steps: int, horizon: float) -> GridFn:
    if src is None:
        return GridFn.from_function(default, horizon, steps)
    path = read_path(src)
    try:
        return GridFn(path.times, path.values)
    except ValueError as exc:
        raise ConfigError(f"{src}: {exc}") from None


def _cmd_gls(cfg: RunConfig) -> str:
    f = _load_gridfn(cfg.f, np.square, cfg.steps, cfg.horizon)
    g = _load_gridfn(cfg.g, lambda t: t**3, cfg.steps, cfg.horizon)
    if not np.array_equal(f.times, g.times):
        raise ConfigError("f, g: inputs must share the same grid")
    params = FracParams(cfg.resolved_beta)
    integral = gls_integral(f, g, params)
    rs = riemann_stieltjes(f, g)
    lhs, rhs, holds = gls_bound_check(f, g, params)
    report = ExperimentReport("gls")
    n = f.steps
    report.add("gls_integral", integral, grid=n)
    report.add("riemann_stieltjes", rs, grid=n)
    report.add("gls_minus_rs", integral - rs, grid=n)
    report.add("gls_bound", rhs, grid=n)
    report.add("bound_holds", float(holds), grid=n)
    dest = _write(cfg, report.to_csv(cfg.header()))
    norms_dest = dest.with_name(dest.stem + "_norms.csv")
    lines = [comment_header(cfg.header()), "function,beta,norm_w1,norm_w2,grid_points\n"]
    for name, fn in (("f", f), ("g", g)):
        b = besov_report(fn, params)
        lines.append(f"{name},{b.beta!r},{b.norm_w1!r},{b.norm_w2!r},{b.grid_points}\n")
    norms_dest.write_text("".join(lines))
    if cfg.plot:
        from .plotting import figure_path, plot_functions

        plot_functions({"f": (f.times, f.values), "g": (g.times, g.values)}, figure_path(dest))
    return (f"gls: int f dg = {integral:.8g} (RS {rs:.8g}), |int| <= {rhs:.6g} "
            f"{'holds' if holds else 'VIOLATED'}; wrote {dest} and {norms_dest}")


def _cmd_failure(cfg: RunConfig) -> str:
    plan = cfg.plan()
    report = failure_battery(plan, cfg.eps, gls_paths=cfg.gls_paths, beta=cfg.resolved_beta)
    report.extend(positive_max_check(cfg.plan(grids=(1, 16, 256, 4096))))
    dest = _write(cfg, report.to_csv(cfg.header()))
    if cfg.plot:
        from .plotting import figure_path, plot_failure

        plot_failure(report, figure_path(dest))
    excess = min(report.column("discrete_record_excess_min"))
    return (f"failure: occupation(eps=0) {_fmt_grids(report.select('occupation_eps0'))}; "
            f"eps-band |sum| {' '.join(f'{r.estimate:.3g}' for r in report.select('eps_band_abs_sum'))}; "
            f"min(discrete sum - (M_T - B_0)) = {excess:.3g}; wrote {dest}")


_DISPATCH = {
    "fbm": _cmd_fbm,
    "qv": _cmd_qv,
    "maxrep": _cmd_maxrep,
    "bvcheck": _cmd_bvcheck,
    "gls": _cmd_gls,
    "failure": _cmd_failure,
}


def run(cfg: RunConfig) -> int:
    """Execute ``cfg.command``; returns the process exit code."""
    try:
        validate(cfg)
        start = time.perf_counter()
        summary = _DISPATCH[cfg.command](cfg)
    except ConfigError as exc:
        print(f"fracpath: config error: {exc}", file=sys.stderr)
        return 2
    except (SamplerError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"fracpath: numeric failure: {exc}", file=sys.stderr)
        return 1
    print(f"{summary} [{time.perf_counter() - start:.1f}s]")
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"fracpath: config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
