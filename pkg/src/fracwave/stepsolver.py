"""Solver for the per-step matrix ``A = M + tau^2 S``.

1D uses a precomputed Thomas factorization. In 2D both 1D factors are
symmetric tridiagonal Toeplitz matrices, so they share the orthonormal DST-I
eigenbasis Q and

    A = (Q (x) Q) diag(mu_i mu_j + tau^2 (sigma_i mu_j + mu_i sigma_j)) (Q (x) Q),

which gives O(M log M) solves.
"""

from __future__ import annotations

import numpy as np
import scipy.fft
import scipy.sparse.linalg
from numba import njit

from .fem import OperatorPair, apply_mass, apply_stiffness

__all__ = ["StepSolver", "build_step_solver", "thomas_factor", "thomas_solve", "thomas_solve_into"]


@njit(cache=True)
def thomas_factor(diag, off, m):
    """Forward-elimination coefficients for the symmetric Toeplitz tridiagonal (off, diag, off)."""
    cp = np.empty(m)
    inv = np.empty(m)
    inv[0] = 1.0 / diag
    cp[0] = off * inv[0]
    for i in range(1, m):
        inv[i] = 1.0 / (diag - off * cp[i - 1])
        cp[i] = off * inv[i]
    return cp, inv


@njit(cache=True)
def _thomas_solve_into(off, cp, inv, b, x):
    m = b.shape[0]
    x[0] = b[0] * inv[0]
    for i in range(1, m):
        x[i] = (b[i] - off * x[i - 1]) * inv[i]
    for i in range(m - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]


@njit(cache=True)
def thomas_solve_into(off, cp, inv, b, x):
    """Solve one right-hand side ``b`` into ``x`` (callable from other compiled kernels)."""
    _thomas_solve_into(off, cp, inv, b, x)


@njit(cache=True)
def thomas_solve(off, cp, inv, B):
    """Solve for each row of ``B`` (shape (k, m)); returns a new array."""
    X = np.empty_like(B)
    for r in range(B.shape[0]):
        _thomas_solve_into(off, cp, inv, B[r], X[r])
    return X


class StepSolver:
    """Factorized ``M + tau^2 S`` for a fixed mesh and time step. Immutable after construction.

    ``tau = 0`` gives a mass-matrix solver.
    """

    def __init__(self, ops: OperatorPair, tau: float, method: str = "direct"):
        if tau < 0:
            raise ValueError("tau must be non-negative")
        if method not in ("direct", "cg"):
            raise ValueError(f"method must be 'direct' or 'cg', got {method!r}")
        self.ops = ops
        self.mesh = ops.mesh
        self.tau = float(tau)
        self.method = method
        t2 = self.tau**2
        (md, mo), (sd, so) = ops.mass1, ops.stiff1
        m = self.mesh.m
        if method == "cg":
            M, S = ops.sparse()
            self._A = (M + t2 * S).tocsr()
        elif self.mesh.dim == 1:
            self._diag = md + t2 * sd
            self._off = mo + t2 * so
            self._cp, self._inv = thomas_factor(self._diag, self._off, m)
        else:
            c = np.cos(np.pi * np.arange(1, m + 1) / (m + 1))
            mu = md + 2.0 * mo * c
            sigma = sd + 2.0 * so * c
            self._eig = np.outer(mu, mu) + t2 * (np.outer(sigma, mu) + np.outer(mu, sigma))

    @property
    def thomas(self):
        """``(off, cp, inv)`` of the 1D factorization, or None for other solver kinds."""
        if self.method == "direct" and self.mesh.dim == 1:
            return self._off, self._cp, self._inv
        return None

    def apply(self, x) -> np.ndarray:
        """``(M + tau^2 S) @ x`` for a vector or a batch of shape (k, M)."""
        return apply_mass(self.ops, x) + self.tau**2 * apply_stiffness(self.ops, x)

    def solve(self, b) -> np.ndarray:
        """Solve ``(M + tau^2 S) x = b`` for a vector or a batch of shape (k, M)."""
        b = np.asarray(b, dtype=float)
        if b.shape[-1] != self.mesh.M:
            raise ValueError(f"rhs length {b.shape[-1]} does not match {self.mesh.M} unknowns")
        single = b.ndim == 1
        B = b.reshape(-1, self.mesh.M)
        if self.method == "cg":
            X = np.stack([self._cg(r) for r in B])
        elif self.mesh.dim == 1:
            X = thomas_solve(self._off, self._cp, self._inv, np.ascontiguousarray(B))
        else:
            m = self.mesh.m
            Bh = scipy.fft.dstn(B.reshape(-1, m, m), type=1, norm="ortho", axes=(-2, -1))
            X = scipy.fft.idstn(Bh / self._eig, type=1, norm="ortho", axes=(-2, -1)).reshape(-1, m * m)
        return X[0] if single else X.reshape(b.shape)

    def _cg(self, r):
        x, info = scipy.sparse.linalg.cg(self._A, r, rtol=1e-12, atol=0.0, maxiter=10 * self.mesh.M)
        if info != 0:
            raise RuntimeError(f"CG did not converge (info={info})")
        return x


def build_step_solver(ops: OperatorPair, tau: float, method: str = "direct") -> StepSolver:
    if tau <= 0:
        raise ValueError("tau must be positive")
    return StepSolver(ops, tau, method)
