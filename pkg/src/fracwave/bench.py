"""Wall-clock scaling of the two solvers.

Load vectors are assembled before the clock starts, so only the solvers are
timed. Each configuration is run once untimed to trigger compilation, then
``repeats`` times; the minimum is reported.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fdac import DEFAULT_BASE, run_fdac
from .tss import ProblemSetup, run_tss, source_loads

__all__ = ["Timing", "time_solver", "warm_up", "loglog_slope", "bench_scaling", "TSS_CUTOFF_EXP"]

# TSS is skipped above N = 2^15 by default
TSS_CUTOFF_EXP = 15


@dataclass(frozen=True)
class Timing:
    method: str
    N: int
    seconds: float


def _solve(setup: ProblemSetup, method: str, loads, base: int):
    if method == "tss":
        return run_tss(setup, loads=loads)
    if method == "fdac":
        return run_fdac(setup, base=base, loads=loads)
    raise ValueError(f"method must be 'tss' or 'fdac', got {method!r}")


def time_solver(setup: ProblemSetup, method: str, loads=None, repeats: int = 1, base: int = DEFAULT_BASE) -> float:
    """Best-of-``repeats`` wall time of one solve, loads precomputed if not given."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    if loads is None:
        loads = source_loads(setup, range(setup.N + 1))
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        _solve(setup, method, loads, base)
        best = min(best, time.perf_counter() - t0)
    return float(best)


def warm_up(setup: ProblemSetup, base: int = DEFAULT_BASE) -> None:
    """Run both solvers on a small copy of ``setup`` so compilation is not timed."""
    small = ProblemSetup(setup.mesh, setup.vo, min(setup.N, 4 * max(base, 1) + 3), setup.T, setup.u0, setup.hat_u0, setup.f)
    loads = source_loads(small, range(small.N + 1))
    for method in ("tss", "fdac"):
        _solve(small, method, loads, base)


def loglog_slope(ns: Sequence[float], seconds: Sequence[float]) -> float:
    """Least-squares slope of log(seconds) against log(N)."""
    ns, seconds = np.asarray(ns, dtype=float), np.asarray(seconds, dtype=float)
    if ns.size < 2:
        raise ValueError("need at least two points for a slope")
    return float(np.polyfit(np.log(ns), np.log(seconds), 1)[0])


def bench_scaling(
    make_setup,
    n_exps: Sequence[int],
    methods: Sequence[str] = ("tss", "fdac"),
    tss_cutoff: int = TSS_CUTOFF_EXP,
    repeats: int = 1,
    base: int = DEFAULT_BASE,
) -> list:
    """Time each method at ``N = 2^e`` for ``e`` in ``n_exps``; ``make_setup(N)`` builds the problem.

    Runs are serial. TSS is skipped for ``e > tss_cutoff``.
    """
    out = []
    warmed = False
    for e in n_exps:
        setup = make_setup(2**e)
        if not warmed:
            warm_up(setup, base)
            warmed = True
        loads = source_loads(setup, range(setup.N + 1))
        for method in methods:
            if method == "tss" and e > tss_cutoff:
                continue
            out.append(Timing(method, setup.N, time_solver(setup, method, loads, repeats, base)))
    return out
