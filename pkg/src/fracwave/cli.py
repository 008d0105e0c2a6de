"""Command-line front end: ``fracwave {run,converge,bench,compare} [--config FILE] [key=value ...]``.

Configuration is a flat ``key=value`` file (``#`` starts a comment); any key
may be overridden on the command line. Results are CSV with the columns in
:data:`CSV_COLUMNS`. Exit status: 0 on success, 1 on solver or comparison
failure, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .bench import TSS_CUTOFF_EXP, bench_scaling, loglog_slope
from .fdac import DEFAULT_BASE, run_fdac
from .fem import MeshSpec, l2_error
from .kernel import AssumptionError, VariableOrder
from .oracles import SIMPSON_PANELS, STUDY_DEFAULTS, RateTable, converge_table, manufactured_case
from .tss import ProblemSetup, Trajectory, run_tss

__all__ = ["CSV_COLUMNS", "ConfigError", "RunConfig", "load_config", "write_snapshot", "main"]

CSV_COLUMNS = ("example", "method", "N", "h_exp", "error", "rate", "wall_seconds", "max_diff_vs_tss")

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2

# bench loads are assembled outside the timed region; their accuracy does not matter
BENCH_PANELS = 256


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field name."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _int(field, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(field, f"expected an integer, got {text!r}") from None


def _float(field, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(field, f"expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(field, f"expected a finite number, got {text!r}")
    return value


def _int_list(field, text):
    """``"5,6,7"`` or an inclusive range ``"5:8"``."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        lo, _, hi = text.partition(":")
        lo, hi = _int(field, lo), _int(field, hi)
        if hi < lo:
            raise ConfigError(field, f"empty range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(_int(field, part) for part in text.split(","))


def _float_list(field, text):
    text = text.strip()
    return tuple(_float(field, part) for part in text.split(",")) if text else ()


def _choice(*options):
    def parse(field, text):
        if text not in options:
            raise ConfigError(field, f"expected one of {', '.join(options)}; got {text!r}")
        return text

    return parse


def _bool(field, text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(field, f"expected true/false, got {text!r}")


def _str(field, text):
    return text


# name -> (parser, default); None defaults are filled per command
FIELDS = {
    "example": (_choice("ex1", "ex2", "ex3", "custom"), "ex1"),
    "method": (_choice("tss", "fdac", "both"), "fdac"),
    "N": (_int, 32),
    "h_exp": (_int, 7),
    "alpha": (_choice("zero", "one-minus-cos", "t-sin-t"), None),
    "K": (_float, 0.01),
    "T": (_float, 1.0),
    "dim": (_int, 1),
    "output": (_str, "-"),
    "vary": (_choice("temporal", "spatial"), "temporal"),
    "levels": (_int_list, None),
    "fixed": (_int, None),
    "weight": (_choice("volume", "h"), "volume"),
    "base": (_int, DEFAULT_BASE),
    "panels": (_int, None),
    "snapshot_times": (_float_list, ()),
    "snapshot_prefix": (_str, "snapshot"),
    "n_exps": (_int_list, None),
    "tss_cutoff": (_int, TSS_CUTOFF_EXP),
    "repeats": (_int, 1),
    "timings": (_bool, True),
    "tol": (_float, 1e-10),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    example: str
    method: str
    N: int
    h_exp: int
    alpha: str
    K: float
    T: float
    dim: int
    output: str
    vary: str
    levels: tuple
    fixed: int
    weight: str
    base: int
    panels: int
    snapshot_times: tuple
    snapshot_prefix: str
    n_exps: tuple
    tss_cutoff: int
    repeats: int
    timings: bool
    tol: float


def _parse_pairs(lines, origin: str) -> dict:
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(key or "?", f"{origin} line {lineno}: expected key=value, got {raw.strip()!r}")
        out[key] = value.strip()
    return out


def _command_defaults(command: str, raw: dict) -> dict:
    example = raw.get("example", "ex1")
    vary = raw.get("vary", "temporal")
    defaults = {}
    if example == "ex2":
        defaults["alpha"] = "t-sin-t"
    elif example in ("ex1", "ex3"):
        defaults["alpha"] = "one-minus-cos"
    else:
        defaults["alpha"] = "zero"
    study = STUDY_DEFAULTS.get((example, vary))
    defaults["levels"] = study[0] if study else ()
    defaults["fixed"] = study[1] if study else 7
    if command == "bench":
        defaults["panels"] = BENCH_PANELS
        defaults["n_exps"] = tuple(range(8, 17))
        defaults["h_exp"] = 3
        defaults["method"] = "both"
    else:
        defaults["panels"] = SIMPSON_PANELS
        defaults["n_exps"] = (2, 3, 4, 6)
    if command == "compare":
        defaults["method"] = "both"
    return defaults


def load_config(command: str, config_path: Optional[str] = None, overrides=()) -> RunConfig:
    """Merge defaults, the config file and ``key=value`` overrides, then validate every field."""
    raw = {}
    if config_path is not None:
        try:
            text = Path(config_path).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {config_path}: {exc.strerror}") from None
        raw.update(_parse_pairs(text.splitlines(), str(config_path)))
    raw.update(_parse_pairs(overrides, "command line"))
    unknown = sorted(set(raw) - set(FIELDS))
    if unknown:
        raise ConfigError(unknown[0], f"unknown field (known: {', '.join(FIELDS)})")
    defaults = _command_defaults(command, raw)
    values = {}
    for name, (parse, default) in FIELDS.items():
        if name in raw:
            values[name] = parse(name, raw[name])
        else:
            values[name] = defaults.get(name, default)
    cfg = RunConfig(command=command, **values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.N < 2:
        raise ConfigError("N", f"must be at least 2, got {cfg.N}")
    if not 1 <= cfg.h_exp <= 12:
        raise ConfigError("h_exp", f"must be in 1..12, got {cfg.h_exp}")
    if cfg.K <= 0:
        raise ConfigError("K", f"must be positive, got {cfg.K}")
    if cfg.T <= 0:
        raise ConfigError("T", f"must be positive, got {cfg.T}")
    if cfg.dim not in (1, 2):
        raise ConfigError("dim", f"must be 1 or 2, got {cfg.dim}")
    if cfg.base < 1:
        raise ConfigError("base", f"must be at least 1, got {cfg.base}")
    if cfg.panels < 2 or cfg.panels % 2:
        raise ConfigError("panels", f"must be a positive even integer, got {cfg.panels}")
    if cfg.repeats < 1:
        raise ConfigError("repeats", f"must be at least 1, got {cfg.repeats}")
    if cfg.tol <= 0:
        raise ConfigError("tol", f"must be positive, got {cfg.tol}")
    for t in cfg.snapshot_times:
        if not 0 <= t <= cfg.T:
            raise ConfigError("snapshot_times", f"time {t} outside [0, T={cfg.T}]")
    if cfg.command == "converge":
        if cfg.example == "custom":
            raise ConfigError("example", "converge needs ex1, ex2 or ex3")
        if cfg.method == "both":
            raise ConfigError("method", "converge runs a single method: tss or fdac")
        if len(cfg.levels) < 2:
            raise ConfigError("levels", "need at least two levels")
        if any(b < a for a, b in zip(cfg.levels, cfg.levels[1:])):
            raise ConfigError("levels", f"must be ascending, got {cfg.levels}")
        if any(lev < 1 for lev in cfg.levels):
            raise ConfigError("levels", "exponents must be positive")
    if cfg.command in ("bench", "compare"):
        if not cfg.n_exps:
            raise ConfigError("n_exps", "need at least one exponent")
        if any(b <= a for a, b in zip(cfg.n_exps, cfg.n_exps[1:])):
            raise ConfigError("n_exps", f"must be strictly ascending, got {cfg.n_exps}")
        if cfg.n_exps[0] < 1:
            raise ConfigError("n_exps", "exponents must be positive")
    if cfg.command == "bench" and len(cfg.n_exps) < 2:
        raise ConfigError("n_exps", "bench needs at least two sizes for a slope")


def _vo(cfg: RunConfig) -> VariableOrder:
    try:
        return VariableOrder.from_name(cfg.alpha, T=cfg.T)
    except AssumptionError as exc:
        raise ConfigError("alpha", f"{exc} on [0, T={cfg.T}]") from None


class _Problem:
    """Builds setups and knows the exact solution (if any) for a config."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        vo = _vo(cfg)
        if cfg.example == "custom":
            self.case = None
            self.dim, self.vo = cfg.dim, vo
        else:
            self.case = manufactured_case(cfg.example, vo, cfg.K, cfg.T, cfg.panels)
            self.dim, self.vo = self.case.dim, vo

    def setup(self, N: int, h_exp: int) -> ProblemSetup:
        if self.case is not None:
            return self.case.setup(N, h_exp)
        return ProblemSetup(MeshSpec.from_h_exp(self.dim, h_exp, self.cfg.K), self.vo, N, self.cfg.T)

    def error(self, traj: Trajectory) -> Optional[float]:
        if self.case is None:
            # zero data and zero source: the exact solution is zero
            return l2_error(traj.frames[-1], lambda *x: 0.0 * x[0], traj.mesh)
        if self.case.exact is None:
            return None
        return l2_error(traj.frames[-1], self.case.exact_at(self.cfg.T), traj.mesh)


def _solve(method: str, setup: ProblemSetup, base: int) -> Trajectory:
    return run_tss(setup) if method == "tss" else run_fdac(setup, base=base)


def _timed(method, setup, base):
    t0 = time.perf_counter()
    traj = _solve(method, setup, base)
    return traj, time.perf_counter() - t0


def max_rel_diff(a: np.ndarray, b: np.ndarray) -> float:
    """``max|a - b| / max|a|`` (absolute when ``a`` vanishes)."""
    scale = float(np.max(np.abs(a)))
    diff = float(np.max(np.abs(a - b)))
    return diff / scale if scale > 0 else diff


def _fmt(value, spec=".10e"):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return format(value, spec)


def _row(cfg, method, N, h_exp, error=None, rate=None, wall=None, diff=None):
    return [
        cfg.example,
        method,
        str(N),
        str(h_exp),
        _fmt(error),
        _fmt(rate, ".4f"),
        _fmt(wall if cfg.timings else None, ".6f"),
        _fmt(diff, ".3e"),
    ]


def write_snapshot(path, U: np.ndarray, mesh: MeshSpec, t: float) -> None:
    """Nodal values as a text matrix after a ``# dim=.. m=.. t=..`` header (one row in 1D, m rows in 2D)."""
    U = np.asarray(U, dtype=float)
    grid = U.reshape(1, -1) if mesh.dim == 1 else U.reshape(mesh.m, mesh.m)
    with open(path, "w") as fh:
        fh.write(f"# dim={mesh.dim} m={mesh.m} t={t:.17g}\n")
        np.savetxt(fh, grid, fmt="%.17g")


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`: returns ``(header dict, values)``."""
    with open(path) as fh:
        header = fh.readline().lstrip("#").split()
        meta = dict(item.split("=", 1) for item in header)
        values = np.loadtxt(fh, ndmin=2)
    return {"dim": int(meta["dim"]), "m": int(meta["m"]), "t": float(meta["t"])}, values


def _methods(cfg):
    return ("tss", "fdac") if cfg.method == "both" else (cfg.method,)


def cmd_run(cfg: RunConfig, out) -> int:
    problem = _Problem(cfg)
    setup = problem.setup(cfg.N, cfg.h_exp)
    reference = None
    for method in _methods(cfg):
        traj, wall = _timed(method, setup, cfg.base)
        diff = None
        if method == "tss":
            reference = traj
        elif reference is not None:
            diff = max_rel_diff(reference.frames, traj.frames)
        out.writerow(_row(cfg, method, cfg.N, cfg.h_exp, problem.error(traj), None, wall, diff))
        for t in cfg.snapshot_times:
            n = int(round(t / setup.tau))
            write_snapshot(f"{cfg.snapshot_prefix}_{method}_t{n * setup.tau:.6g}.txt", traj.frames[n], traj.mesh, n * setup.tau)
    return EXIT_OK


def cmd_converge(cfg: RunConfig, out) -> int:
    problem = _Problem(cfg)
    t0 = time.perf_counter()
    table: RateTable = converge_table(problem.case, cfg.vary, cfg.levels, cfg.fixed, cfg.method, cfg.weight)
    wall = time.perf_counter() - t0
    for i, (lev, err, rate) in enumerate(table.rows()):
        N, h_exp = (2**lev, cfg.fixed) if cfg.vary == "temporal" else (2**cfg.fixed, lev)
        method = cfg.method + ("(degenerate)" if table.degenerate[i] else "")
        out.writerow(_row(cfg, method, N, h_exp, err, rate, wall if i == len(table.levels) - 1 else None))
    return EXIT_OK


def cmd_bench(cfg: RunConfig, out, log) -> int:
    problem = _Problem(cfg)
    methods = _methods(cfg)
    timings = bench_scaling(
        lambda N: problem.setup(N, cfg.h_exp), cfg.n_exps, methods, cfg.tss_cutoff, cfg.repeats, cfg.base
    )
    for tm in timings:
        out.writerow(_row(cfg, tm.method, tm.N, cfg.h_exp, wall=tm.seconds))
    for method in methods:
        pts = [(tm.N, tm.seconds) for tm in timings if tm.method == method]
        if len(pts) >= 2:
            ns, secs = zip(*pts)
            log.write(f"{method}: log-log slope {loglog_slope(ns, secs):.3f} over N={ns[0]}..{ns[-1]}\n")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, out, log) -> int:
    problem = _Problem(cfg)
    worst = 0.0
    for e in cfg.n_exps:
        setup = problem.setup(2**e, cfg.h_exp)
        ref, wall_t = _timed("tss", setup, cfg.base)
        fast, wall_f = _timed("fdac", setup, cfg.base)
        diff = max_rel_diff(ref.frames, fast.frames)
        worst = max(worst, diff)
        out.writerow(_row(cfg, "tss", setup.N, cfg.h_exp, problem.error(ref), None, wall_t))
        out.writerow(_row(cfg, "fdac", setup.N, cfg.h_exp, problem.error(fast), None, wall_f, diff))
    ok = worst <= cfg.tol
    log.write(f"max relative difference {worst:.3e} ({'within' if ok else 'EXCEEDS'} tol={cfg.tol:g})\n")
    return EXIT_OK if ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracwave", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "single solve; error at T, timing, optional snapshots",
        "converge": "convergence table under temporal or spatial refinement",
        "bench": "wall-clock scaling of TSS and FDAC with log-log slopes",
        "compare": "TSS vs FDAC frame-wise agreement",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("overrides", nargs="*", metavar="key=value", help="overrides, e.g. N=64 method=both")
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.overrides)
    except ConfigError as exc:
        stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    try:
        if cfg.command == "run":
            status = cmd_run(cfg, writer)
        elif cfg.command == "converge":
            status = cmd_converge(cfg, writer)
        elif cfg.command == "bench":
            status = cmd_bench(cfg, writer, stderr)
        else:
            status = cmd_compare(cfg, writer, stderr)
    except ConfigError as exc:
        stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (RuntimeError, ValueError, ArithmeticError) as exc:
        stderr.write(f"solver failure: {exc}\n")
        return EXIT_FAILURE
    if cfg.output == "-":
        stdout.write(buffer.getvalue())
    else:
        try:
            Path(cfg.output).write_text(buffer.getvalue())
        except OSError as exc:
            stderr.write(f"config error: output: cannot write {cfg.output}: {exc.strerror}\n")
            return EXIT_CONFIG
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
