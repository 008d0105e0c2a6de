"""Divide-and-conquer all-at-once solver, O(M N log^2 N).

The unknowns ``W_i = U^{i+2}`` (i = 0..N-2) satisfy the block lower-triangular
system ``(E (x) M + tau^2 T (x) S) W = R`` where E has the stencil [1, -2, 1]
on its diagonal and two subdiagonals, T is lower-triangular Toeplitz with
first column ``tc`` and R collects sources and the known frames U^0, U^1.

A range [lo, hi) is split at mid; after the first half is solved, the second
half's right-hand side loses

  * the E coupling across the split (three entries: rows mid and mid+1), and
  * ``tau^2 S (L W_first)``, L the Toeplitz block of tc lags, done by FFT.

Peak memory is O(M N): the solution block plus one (M x size/2) work array
per level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .fem import OperatorPair, apply_mass, apply_stiffness
from .kernel import lag_weights, toeplitz_first_column
from .stepsolver import StepSolver, build_step_solver, thomas_solve_into
from .toeplitz import ToeplitzSpec, build_L_block, split_point, toeplitz_matvec
from .tss import ProblemSetup, Trajectory, initial_frames, source_loads

__all__ = ["BlockSystemView", "assemble_rhs", "fdac_solve", "run_fdac", "DEFAULT_BASE"]

# ranges up to this many blocks are solved by forward substitution
DEFAULT_BASE = 64


@dataclass
class BlockSystemView:
    """Shared data of the all-at-once system for a range of time blocks."""

    tc: np.ndarray
    ops: OperatorPair
    solver: StepSolver
    tau: float
    base: int = DEFAULT_BASE
    _symbols: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return self.tc.size

    @classmethod
    def for_setup(cls, setup: ProblemSetup, ops: Optional[OperatorPair] = None, base: int = DEFAULT_BASE):
        ops = ops or setup.operators()
        return cls(
            tc=toeplitz_first_column(setup.N, setup.tau, setup.vo),
            ops=ops,
            solver=build_step_solver(ops, setup.tau),
            tau=setup.tau,
            base=base,
        )

    def L_block(self, lo: int, hi: int) -> ToeplitzSpec:
        # the block depends only on the two half sizes; reuse its FFT symbol
        key = (split_point(lo, hi) - lo, hi - split_point(lo, hi))
        spec = self._symbols.get(key)
        if spec is None:
            spec = self._symbols[key] = build_L_block(self.tc, 0, hi - lo)
        return spec


def assemble_rhs(
    setup: ProblemSetup, U0, U1, ops: Optional[OperatorPair] = None, loads: Optional[np.ndarray] = None
) -> np.ndarray:
    """Right-hand side blocks for U^2..U^N, shape (N-1, M), with U^0 and U^1 folded in.

    ``loads`` optionally supplies precomputed ``F^0..F^N`` (shape (N+1, M)).
    """
    ops = ops or setup.operators()
    N, tau = setup.N, setup.tau
    t2 = tau * tau
    beta = lag_weights(tau, N, setup.vo).beta
    if loads is None:
        R = t2 * source_loads(setup, range(2, N + 1))
    else:
        R = t2 * np.asarray(loads, dtype=float)[2:N + 1]
    MU0, MU1 = apply_mass(ops, U0), apply_mass(ops, U1)
    SU0, SU1 = apply_stiffness(ops, U0), apply_stiffness(ops, U1)
    R[0] += 2.0 * MU1 - MU0
    if N >= 3:
        R[1] -= MU1
    n = np.arange(2, N + 1)
    R -= t2 * (beta[n][:, None] * SU0 + beta[n - 1][:, None] * SU1)
    return R


@njit(cache=True)
def _forward_substitution_1d(R, W, lo, hi, tc, mass1, stiff1, t2, off, cp, inv):
    m = R.shape[1]
    md, mo = mass1
    sd, so = stiff1
    r = np.empty(m)
    e = np.empty(m)
    hist = np.empty(m)
    for i in range(lo, hi):
        r[:] = R[i]
        if i > lo:
            for p in range(m):
                e[p] = -2.0 * W[i - 1, p]
                if i - 2 >= lo:
                    e[p] += W[i - 2, p]
            hist[:] = 0.0
            for j in range(lo, i):
                c = tc[i - j]
                for p in range(m):
                    hist[p] += c * W[j, p]
            for p in range(m):
                v = md * e[p] + t2 * sd * hist[p]
                if p > 0:
                    v += mo * e[p - 1] + t2 * so * hist[p - 1]
                if p < m - 1:
                    v += mo * e[p + 1] + t2 * so * hist[p + 1]
                r[p] -= v
        thomas_solve_into(off, cp, inv, r, W[i])


@njit(cache=True)
def _subtract_stiffness_1d(R, X, stiff1, t2):
    # R -= t2 * S X row by row, S the 1D stiffness stencil
    sd, so = stiff1
    n, m = X.shape
    for i in range(n):
        for p in range(m):
            v = sd * X[i, p]
            if p > 0:
                v += so * X[i, p - 1]
            if p < m - 1:
                v += so * X[i, p + 1]
            R[i, p] -= t2 * v


def _forward_substitution(view: BlockSystemView, R, W, lo, hi):
    ops, tc, t2 = view.ops, view.tc, view.tau**2
    thomas = view.solver.thomas
    if thomas is not None:
        _forward_substitution_1d(R, W, lo, hi, tc, ops.mass1, ops.stiff1, t2, *thomas)
        return
    for i in range(lo, hi):
        r = R[i].copy()
        if i - 1 >= lo:
            e = -2.0 * W[i - 1]
            if i - 2 >= lo:
                e += W[i - 2]
            r -= apply_mass(ops, e)
            r -= t2 * apply_stiffness(ops, tc[i - lo:0:-1] @ W[lo:i])
        W[i] = view.solver.solve(r)


def _solve_range(view: BlockSystemView, R, W, lo, hi):
    if hi - lo <= max(view.base, 1):
        _forward_substitution(view, R, W, lo, hi)
        return
    mid = split_point(lo, hi)
    _solve_range(view, R, W, lo, mid)
    ops = view.ops
    # E coupling across the split: rows mid, mid+1 against columns mid-2, mid-1
    e = -2.0 * W[mid - 1]
    if mid - 2 >= lo:
        e = e + W[mid - 2]
    R[mid] -= apply_mass(ops, e)
    if mid + 1 < hi:
        R[mid + 1] -= apply_mass(ops, W[mid - 1])
    # convolution history across the split, S (L X^T)^T with X = W[lo:mid].T;
    # W is time-major so the transforms run along axis 0
    LX = toeplitz_matvec(view.L_block(lo, hi), W[lo:mid], axis=0)
    if ops.mesh.dim == 1:
        _subtract_stiffness_1d(R[mid:hi], LX, ops.stiff1, view.tau**2)
    else:
        R[mid:hi] -= view.tau**2 * apply_stiffness(ops, LX)
    _solve_range(view, R, W, mid, hi)


def fdac_solve(view: BlockSystemView, rhs) -> np.ndarray:
    """Solve the all-at-once system; returns W with shape (size, M). ``rhs`` is not modified."""
    R = np.array(rhs, dtype=float)
    if R.ndim != 2 or R.shape[0] != view.size or R.shape[1] != view.ops.M:
        raise ValueError(f"rhs shape {R.shape} does not match ({view.size}, {view.ops.M})")
    W = np.empty_like(R)
    _solve_range(view, R, W, 0, view.size)
    return W


def run_fdac(setup: ProblemSetup, base: int = DEFAULT_BASE, loads: Optional[np.ndarray] = None) -> Trajectory:
    """Initial frames, all-at-once right-hand side, divide-and-conquer solve."""
    ops = setup.operators()
    U0, U1 = initial_frames(setup, ops)
    view = BlockSystemView.for_setup(setup, ops, base)
    frames = np.empty((setup.N + 1, setup.mesh.M))
    frames[0], frames[1] = U0, U1
    frames[2:] = fdac_solve(view, assemble_rhs(setup, U0, U1, ops, loads))
    return Trajectory(setup.mesh, setup.tau, frames)
