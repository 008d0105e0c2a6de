"""Linear (1D) and bilinear tensor-product (2D) finite elements on (0, 1)^d.

Only interior nodes carry unknowns (homogeneous Dirichlet data). In 2D the
operators are kept as their 1D tridiagonal factors,

    M = M1 (x) M1,    S = S1 (x) M1 + M1 (x) S1,

and a field is a flat vector of length m*m in row-major order, so that
``U.reshape(m, m)[i, j]`` is the value at ``(x_i, y_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = [
    "MeshSpec",
    "OperatorPair",
    "MeshMismatchError",
    "SeparableSource",
    "assemble_operators",
    "apply_mass",
    "apply_stiffness",
    "load_vector",
    "interpolate",
    "l2_error",
    "grid_l2_diff",
]

# 3-point Gauss-Legendre rule on the reference element [0, 1]
_GAUSS_X = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GAUSS_W = 0.5 * np.array([5.0, 8.0, 5.0]) / 9.0


class MeshMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class MeshSpec:
    """Uniform mesh of (0, 1)^dim with ``n_cells = 1/h`` cells per direction."""

    dim: int
    n_cells: int
    K: float = 0.01

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n_cells < 2:
            raise ValueError(f"n_cells = 1/h must be an integer >= 2, got {self.n_cells}")
        if self.K <= 0:
            raise ValueError("K must be positive")

    @classmethod
    def from_h_exp(cls, dim: int, h_exp: int, K: float = 0.01) -> "MeshSpec":
        return cls(dim, 2**h_exp, K)

    @property
    def h(self) -> float:
        return 1.0 / self.n_cells

    @property
    def m(self) -> int:
        """Interior nodes per direction."""
        return self.n_cells - 1

    @property
    def M(self) -> int:
        return self.m**self.dim

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_cells)

    def refined(self) -> "MeshSpec":
        return MeshSpec(self.dim, 2 * self.n_cells, self.K)

    @cached_property
    def _quadrature(self):
        """1D quadrature points/weights and the hat-function values there.

        Returns ``(xq, wq, B)`` where ``B[i, q] = phi_i(xq[q])`` as a sparse
        matrix (each hat function touches the 6 points of its 2 elements).
        """
        n, h = self.n_cells, self.h
        xq = (np.arange(n)[:, None] + _GAUSS_X[None, :]).ravel() * h
        wq = np.tile(_GAUSS_W * h, n)
        rows, cols, vals = [], [], []
        for q in range(3):
            s = _GAUSS_X[q]
            # element e = [x_e, x_{e+1}] holds right half of phi_{e} and left half of phi_{e+1}
            # interior node i (0-based) sits at x_{i+1}
            e = np.arange(n)
            left = e - 1  # node at x_e, decreasing part
            right = e  # node at x_{e+1}, increasing part
            ok = (left >= 0) & (left < self.m)
            rows.append(left[ok]); cols.append(3 * e[ok] + q); vals.append(np.full(ok.sum(), 1.0 - s))
            ok = right < self.m
            rows.append(right[ok]); cols.append(3 * e[ok] + q); vals.append(np.full(ok.sum(), s))
        B = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.m, 3 * n),
        )
        return xq, wq, B


@dataclass(frozen=True)
class OperatorPair:
    """Mass and stiffness matrices, stored as the tridiagonal stencils of their 1D factors.

    ``mass1 = (diag, off)`` and ``stiff1 = (diag, off)`` describe the symmetric
    tridiagonal Toeplitz 1D factors; the stiffness factor includes K.
    """

    mesh: MeshSpec
    mass1: tuple = field(repr=False)
    stiff1: tuple = field(repr=False)

    @property
    def M(self) -> int:
        return self.mesh.M

    def factor_matrices(self):
        """The 1D factors as sparse matrices ``(M1, S1)``."""
        m = self.mesh.m
        return (
            sp.diags([self.mass1[1], self.mass1[0], self.mass1[1]], [-1, 0, 1], shape=(m, m), format="csr"),
            sp.diags([self.stiff1[1], self.stiff1[0], self.stiff1[1]], [-1, 0, 1], shape=(m, m), format="csr"),
        )

    def sparse(self):
        """Full ``(M, S)`` as sparse matrices; intended for tests and small meshes."""
        M1, S1 = self.factor_matrices()
        if self.mesh.dim == 1:
            return M1, S1
        return sp.kron(M1, M1, format="csr"), (sp.kron(S1, M1) + sp.kron(M1, S1)).tocsr()

    def dense(self):
        M, S = self.sparse()
        return M.toarray(), S.toarray()


@dataclass(frozen=True)
class SeparableSource:
    """Source ``f(x, t) = space(x) * time(t)`` (``f(x, y, t)`` in 2D).

    Callable like any source; solvers use the product form to assemble all
    load vectors at once from one spatial load and a vectorized ``time``.
    """

    space: object
    time: object

    def __call__(self, *xt):
        *x, t = xt
        return self.space(*x) * self.time(t)

    def loads(self, times, mesh: "MeshSpec") -> np.ndarray:
        """Load vectors at each of ``times``, shape (len(times), M)."""
        spatial = load_vector(lambda *xt: self.space(*xt[:-1]), 0.0, mesh)
        return np.asarray(self.time(np.asarray(times, dtype=float)), dtype=float)[:, None] * spatial


def assemble_operators(mesh: MeshSpec) -> OperatorPair:
    h, K = mesh.h, mesh.K
    return OperatorPair(
        mesh=mesh,
        mass1=(4.0 * h / 6.0, h / 6.0),
        stiff1=(2.0 * K / h, -K / h),
    )


def _tridiag_apply(stencil, X, axis):
    """Apply a symmetric tridiagonal Toeplitz stencil along ``axis`` (-1 or -2) of ``X``."""
    d, o = stencil
    Y = d * X
    if axis == -1:
        Y[..., 1:] += o * X[..., :-1]
        Y[..., :-1] += o * X[..., 1:]
    else:
        Y[..., 1:, :] += o * X[..., :-1, :]
        Y[..., :-1, :] += o * X[..., 1:, :]
    return Y


def _check_len(ops: OperatorPair, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != ops.M:
        raise ValueError(f"vector length {x.shape[-1]} does not match {ops.M} unknowns")
    return x


def apply_mass(ops: OperatorPair, x) -> np.ndarray:
    """``M @ x``. ``x`` may be a batch with shape (..., M)."""
    x = _check_len(ops, x)
    if ops.mesh.dim == 1:
        return _tridiag_apply(ops.mass1, x, -1)
    m = ops.mesh.m
    X = x.reshape(x.shape[:-1] + (m, m))
    Y = _tridiag_apply(ops.mass1, _tridiag_apply(ops.mass1, X, -1), -2)
    return Y.reshape(x.shape)


def apply_stiffness(ops: OperatorPair, x) -> np.ndarray:
    """``S @ x``. ``x`` may be a batch with shape (..., M)."""
    x = _check_len(ops, x)
    if ops.mesh.dim == 1:
        return _tridiag_apply(ops.stiff1, x, -1)
    m = ops.mesh.m
    X = x.reshape(x.shape[:-1] + (m, m))
    Y = _tridiag_apply(ops.stiff1, _tridiag_apply(ops.mass1, X, -1), -2)
    Y += _tridiag_apply(ops.mass1, _tridiag_apply(ops.stiff1, X, -1), -2)
    return Y.reshape(x.shape)


def load_vector(f, t: float, mesh: MeshSpec) -> np.ndarray:
    """``F_i = int f(x, t) phi_i(x) dx`` by 3-point Gauss per element and direction.

    ``f`` is vectorized: ``f(x, t)`` in 1D and ``f(x, y, t)`` in 2D, where
    ``x`` and ``y`` are broadcastable arrays.
    """
    xq, wq, B = mesh._quadrature
    if mesh.dim == 1:
        vals = np.broadcast_to(f(xq, t), xq.shape)
        return B @ (wq * vals)
    vals = np.broadcast_to(f(xq[:, None], xq[None, :], t), (xq.size, xq.size))
    W = wq[:, None] * vals * wq[None, :]
    return (B @ (B @ W.T).T).ravel()


def interpolate(u, mesh: MeshSpec) -> np.ndarray:
    """Nodal values of ``u`` at interior nodes."""
    x = mesh.nodes
    if mesh.dim == 1:
        return np.array(np.broadcast_to(u(x), x.shape), dtype=float)
    return np.array(np.broadcast_to(u(x[:, None], x[None, :]), (x.size, x.size)), dtype=float).ravel()


def l2_error(U, exact, mesh: MeshSpec) -> float:
    """L2(Omega) norm of (finite element function with nodal values U) - exact."""
    xq, wq, B = mesh._quadrature
    U = np.asarray(U, dtype=float)
    if U.shape != (mesh.M,):
        raise ValueError(f"U has shape {U.shape}, expected ({mesh.M},)")
    if mesh.dim == 1:
        diff = B.T @ U - np.broadcast_to(exact(xq), xq.shape)
        return float(np.sqrt(np.sum(wq * diff**2)))
    m = mesh.m
    Uq = B.T @ (B.T @ U.reshape(m, m)).T
    diff = Uq.T - np.broadcast_to(exact(xq[:, None], xq[None, :]), (xq.size, xq.size))
    return float(np.sqrt(wq @ (diff**2) @ wq))


def grid_l2_diff(U, V, mesh: MeshSpec, weight: str = "volume") -> float:
    """Discrete l2 distance ``sqrt(w * sum_j |U_j - V_j|^2)`` over interior nodes.

    ``V`` lives either on ``mesh`` or on ``mesh.refined()``; in the latter case
    it is sampled at the coarse nodes (fine index 2j). ``weight="volume"`` uses
    ``w = h**dim``; ``weight="h"`` uses ``w = h`` regardless of dimension.
    """
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    m = mesh.m
    if U.shape != (mesh.M,):
        raise MeshMismatchError(f"U has {U.size} values, mesh has {mesh.M} unknowns")
    if V.shape == U.shape:
        Vc = V
    else:
        mf = 2 * m + 1
        if V.shape != (mf**mesh.dim,):
            raise MeshMismatchError(
                f"V has {V.size} values; expected {mesh.M} (same mesh) or {mf**mesh.dim} (refined)"
            )
        if mesh.dim == 1:
            Vc = V[1::2]
        else:
            Vc = V.reshape(mf, mf)[1::2, 1::2].ravel()
    if weight == "volume":
        w = mesh.h**mesh.dim
    elif weight == "h":
        w = mesh.h
    else:
        raise ValueError(f"weight must be 'volume' or 'h', got {weight!r}")
    return float(np.sqrt(w * np.sum((U - Vc) ** 2)))
