"""Reference time-stepping scheme, O(M N^2).

For n = 2..N it solves

    (M + tau^2 S) U^n = 2 M U^{n-1} - M U^{n-2}
                        - tau^2 sum_{k=0}^{n-1} beta[n-k] S U^k + tau^2 F^n,

recomputing the whole history sum at every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numba import njit

from .fem import (
    MeshSpec,
    OperatorPair,
    SeparableSource,
    apply_mass,
    apply_stiffness,
    assemble_operators,
    interpolate,
    load_vector,
)
from .kernel import VariableOrder, lag_weights
from .stepsolver import StepSolver, build_step_solver, thomas_solve_into

__all__ = ["ProblemSetup", "Trajectory", "initial_frames", "source_loads", "run_tss"]


@dataclass(frozen=True)
class ProblemSetup:
    """A fully specified discrete problem.

    ``u0`` and ``hat_u0`` take ``x`` (1D) or ``x, y`` (2D); ``f`` additionally
    takes ``t`` as its last argument. ``None`` means identically zero.
    """

    mesh: MeshSpec
    vo: VariableOrder
    N: int
    T: float = 1.0
    u0: Optional[Callable] = field(default=None, repr=False)
    hat_u0: Optional[Callable] = field(default=None, repr=False)
    f: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"N must be at least 2, got {self.N}")
        if self.T <= 0:
            raise ValueError("T must be positive")

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.N + 1)

    def operators(self) -> OperatorPair:
        return assemble_operators(self.mesh)


@dataclass(frozen=True)
class Trajectory:
    """Nodal solution frames ``U^0..U^N``; ``frames[n]`` has length M."""

    mesh: MeshSpec
    tau: float
    frames: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.frames.shape[0] - 1

    def __len__(self) -> int:
        return self.frames.shape[0]

    def __getitem__(self, n):
        return self.frames[n]

    def at_time(self, t: float) -> np.ndarray:
        n = int(round(t / self.tau))
        if not np.isclose(n * self.tau, t) or not 0 <= n <= self.N:
            raise ValueError(f"t={t} is not a time level of this trajectory")
        return self.frames[n]


def _zero(*args):
    return 0.0


def source_loads(setup: ProblemSetup, steps) -> np.ndarray:
    """Load vectors ``F^n`` for the given step indices, shape (len(steps), M)."""
    steps = np.asarray(list(steps), dtype=int)
    if setup.f is None:
        return np.zeros((steps.size, setup.mesh.M))
    times = steps * setup.tau
    if isinstance(setup.f, SeparableSource):
        return setup.f.loads(times, setup.mesh)
    out = np.empty((steps.size, setup.mesh.M))
    for row, t in enumerate(times):
        out[row] = load_vector(setup.f, t, setup.mesh)
    return out


def initial_frames(setup: ProblemSetup, ops: Optional[OperatorPair] = None):
    """``U^0`` = nodal interpolant of u0; ``U^1`` from ``M U^1 = M U^0 + tau * hatU^0``."""
    mesh = setup.mesh
    ops = ops or setup.operators()
    U0 = interpolate(setup.u0 or _zero, mesh)
    if setup.hat_u0 is None:
        return U0, U0.copy()
    hat = setup.hat_u0
    hat_load = load_vector(lambda *xt: hat(*xt[:-1]), 0.0, mesh)
    U1 = U0 + setup.tau * StepSolver(ops, 0.0).solve(hat_load)
    return U0, U1


@njit(cache=True)
def _march_1d(frames, loads, beta, mass1, stiff1, t2, history, off, cp, inv):
    n_frames, m = frames.shape
    md, mo = mass1
    sd, so = stiff1
    rhs = np.empty(m)
    e = np.empty(m)
    hist = np.empty(m)
    for n in range(2, n_frames):
        for p in range(m):
            e[p] = 2.0 * frames[n - 1, p] - frames[n - 2, p]
        for p in range(m):
            v = md * e[p]
            if p > 0:
                v += mo * e[p - 1]
            if p < m - 1:
                v += mo * e[p + 1]
            rhs[p] = v
        if history:
            # S U^k is recomputed for every k at every step
            hist[:] = 0.0
            for k in range(n):
                b = beta[n - k]
                for p in range(m):
                    v = sd * frames[k, p]
                    if p > 0:
                        v += so * frames[k, p - 1]
                    if p < m - 1:
                        v += so * frames[k, p + 1]
                    hist[p] += b * v
            for p in range(m):
                rhs[p] -= t2 * hist[p]
        for p in range(m):
            rhs[p] += t2 * loads[n, p]
        thomas_solve_into(off, cp, inv, rhs, frames[n])


def run_tss(setup: ProblemSetup, history: bool = True, loads: Optional[np.ndarray] = None) -> Trajectory:
    """March the scheme step by step.

    ``loads`` optionally supplies precomputed ``F^0..F^N`` (shape (N+1, M)),
    e.g. to time the solver alone. ``history=False`` drops the convolution
    term (testing aid for the alpha = 0 reduction).
    """
    ops = setup.operators()
    tau, N = setup.tau, setup.N
    t2 = tau * tau
    solver = build_step_solver(ops, tau)
    beta = lag_weights(tau, N, setup.vo).beta
    frames = np.empty((N + 1, setup.mesh.M))
    frames[0], frames[1] = initial_frames(setup, ops)
    if loads is None:
        loads = source_loads(setup, range(N + 1))
    loads = np.ascontiguousarray(loads, dtype=float)
    if solver.thomas is not None:
        _march_1d(frames, loads, beta, ops.mass1, ops.stiff1, t2, history, *solver.thomas)
        return Trajectory(setup.mesh, tau, frames)
    for n in range(2, N + 1):
        rhs = apply_mass(ops, 2.0 * frames[n - 1] - frames[n - 2])
        if history:
            SU = apply_stiffness(ops, frames[:n])
            rhs -= t2 * (beta[n:0:-1] @ SU)
        rhs += t2 * loads[n]
        frames[n] = solver.solve(rhs)
    return Trajectory(setup.mesh, tau, frames)
