"""Manufactured cases, a single-mode ODE oracle and convergence-rate tables.

Examples 1 and 2 use the exact solution ``u = t^3 sin(2 pi x)`` (times
``sin(2 pi y)`` in 2D); their sources need ``int_0^t k(s) (t - s)^3 ds``,
evaluated by composite Simpson. Example 3 (2D, ``f = 1``) has no closed form
and is measured by self-convergence.

The model being verified is

    u_tt - K Lap u - K (k * Lap u) = f,    (k * w)(t) = int_0^t k(t - s) w(s) ds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.integrate

from .fdac import run_fdac
from .fem import MeshSpec, SeparableSource, grid_l2_diff, l2_error
from .kernel import VariableOrder, eval_k
from .tss import ProblemSetup, Trajectory, run_tss

__all__ = [
    "SIMPSON_PANELS",
    "conv_poly3",
    "source_ex1",
    "source_ex2",
    "ManufacturedCase",
    "manufactured_case",
    "source_residual",
    "spectral_mode_solve",
    "RateTable",
    "converge_table",
    "run_method",
    "STUDY_DEFAULTS",
]

# k(s) ~ -s ln s near 0 limits composite Simpson to second order; 2^14 panels
# put the quadrature error near 3e-10 on [0, 1]
SIMPSON_PANELS = 2**14

TWO_PI = 2.0 * np.pi

# (vo, panels) -> {t: value}
_CONV_CACHE: dict = {}
_CHUNK_POINTS = 2**20


def _simpson_weights(panels: int) -> np.ndarray:
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _conv_poly3_batch(ts: np.ndarray, vo: VariableOrder, panels: int) -> np.ndarray:
    u = np.linspace(0.0, 1.0, panels + 1)
    w = _simpson_weights(panels)
    out = np.empty(ts.size)
    step = max(1, _CHUNK_POINTS // (panels + 1))
    for a in range(0, ts.size, step):
        t = ts[a:a + step, None]
        s = t * u[None, :]
        out[a:a + step] = (t[:, 0] / panels) * ((eval_k(s, vo) * (t - s) ** 3) @ w)
    return out


def conv_poly3(t, vo: VariableOrder, panels: int = SIMPSON_PANELS):
    """``int_0^t k(s) (t - s)^3 ds`` by composite Simpson with ``panels`` panels (even).

    Scalar or array ``t``; each distinct time is computed once and cached.
    """
    if panels < 2 or panels % 2:
        raise ValueError(f"panels must be a positive even integer, got {panels}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    cache = _CONV_CACHE.setdefault((vo, panels), {})
    flat = t.ravel()
    missing = np.array(sorted({float(x) for x in flat} - cache.keys()))
    if missing.size:
        cache.update(zip(missing.tolist(), _conv_poly3_batch(missing, vo, panels).tolist()))
    out = np.array([cache[float(x)] for x in flat]).reshape(t.shape)
    return out[()] if out.ndim == 0 else out


def _time_factor(vo: VariableOrder, lap: float, K: float, panels: int):
    """Time part of the manufactured source: 6t + K lap (t^3 + conv_poly3(t))."""

    def time(t):
        t = np.asarray(t, dtype=float)
        return 6.0 * t + K * lap * (t**3 + conv_poly3(t, vo, panels))

    return time


def source_ex1(vo: VariableOrder, K: float = 0.01, panels: int = SIMPSON_PANELS) -> SeparableSource:
    """``f(x, t) = 6t sin(2 pi x) + 4 K pi^2 sin(2 pi x) (t^3 + conv_poly3(t))``."""
    return SeparableSource(lambda x: np.sin(TWO_PI * x), _time_factor(vo, 4.0 * np.pi**2, K, panels))


def source_ex2(
    vo: VariableOrder, K: float = 0.01, panels: int = SIMPSON_PANELS, laplacian_factor: float = 8.0
) -> SeparableSource:
    """``f(x, y, t) = 6t s(x, y) + 8 K pi^2 s(x, y) (t^3 + conv_poly3(t))``, ``s = sin(2 pi x) sin(2 pi y)``.

    ``laplacian_factor=4.0`` gives the variant with the 1D factor, for which
    ``t^3 s(x, y)`` is *not* the exact solution.
    """
    return SeparableSource(
        lambda x, y: np.sin(TWO_PI * x) * np.sin(TWO_PI * y),
        _time_factor(vo, laplacian_factor * np.pi**2, K, panels),
    )


@dataclass(frozen=True)
class ManufacturedCase:
    """A benchmark problem; ``exact`` and its derivatives are None when no closed form is known.

    ``exact(*x, t)``; ``exact_tt`` and ``exact_lap`` are its second time
    derivative and spatial Laplacian with the same signature.
    """

    id: str
    dim: int
    vo: VariableOrder
    f: Callable = field(repr=False)
    u0: Optional[Callable] = field(default=None, repr=False)
    hat_u0: Optional[Callable] = field(default=None, repr=False)
    exact: Optional[Callable] = field(default=None, repr=False)
    exact_tt: Optional[Callable] = field(default=None, repr=False)
    exact_lap: Optional[Callable] = field(default=None, repr=False)
    K: float = 0.01
    T: float = 1.0

    def setup(self, N: int, h_exp: int) -> ProblemSetup:
        return ProblemSetup(
            mesh=MeshSpec.from_h_exp(self.dim, h_exp, self.K),
            vo=self.vo,
            N=N,
            T=self.T,
            u0=self.u0,
            hat_u0=self.hat_u0,
            f=self.f,
        )

    def exact_at(self, t: float) -> Callable:
        if self.exact is None:
            raise ValueError(f"case {self.id} has no exact solution")
        return lambda *x: self.exact(*x, t)


def _sine_mode(dim: int):
    if dim == 1:
        return lambda x: np.sin(TWO_PI * x)
    return lambda x, y: np.sin(TWO_PI * x) * np.sin(TWO_PI * y)


def _poly_case(case_id: str, dim: int, vo: VariableOrder, K: float, T: float, f) -> ManufacturedCase:
    mode = _sine_mode(dim)
    lap = -dim * 4.0 * np.pi**2
    return ManufacturedCase(
        id=case_id,
        dim=dim,
        vo=vo,
        f=f,
        exact=lambda *xt: xt[-1] ** 3 * mode(*xt[:-1]),
        exact_tt=lambda *xt: 6.0 * xt[-1] * mode(*xt[:-1]),
        exact_lap=lambda *xt: lap * xt[-1] ** 3 * mode(*xt[:-1]),
        K=K,
        T=T,
    )


def manufactured_case(
    case_id: str,
    vo: Optional[VariableOrder] = None,
    K: float = 0.01,
    T: float = 1.0,
    panels: int = SIMPSON_PANELS,
) -> ManufacturedCase:
    """``"ex1"`` (1D), ``"ex2"`` (2D) or ``"ex3"`` (2D self-convergence).

    The default order is ``1 - cos t`` for ex1 and ex3 and ``t sin t`` for ex2.
    """
    case_id = case_id.lower()
    if vo is None:
        vo = VariableOrder.t_sin_t(T=T) if case_id == "ex2" else VariableOrder.one_minus_cos(T=T)
    if case_id == "ex1":
        return _poly_case("ex1", 1, vo, K, T, source_ex1(vo, K, panels))
    if case_id == "ex2":
        return _poly_case("ex2", 2, vo, K, T, source_ex2(vo, K, panels))
    if case_id == "ex3":
        bump = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
        one = SeparableSource(lambda x, y: np.ones(np.broadcast(x, y).shape), lambda t: np.ones_like(t))
        return ManufacturedCase(id="ex3", dim=2, vo=vo, f=one, u0=bump, hat_u0=bump, K=K, T=T)
    raise ValueError(f"unknown case {case_id!r}; expected ex1, ex2 or ex3")


# published study protocols: (levels, fixed exponent) per case and axis
STUDY_DEFAULTS = {
    ("ex1", "temporal"): ((5, 6, 7, 8), 7),
    ("ex1", "spatial"): ((3, 4, 5, 6), 13),
    ("ex2", "temporal"): ((5, 6, 7, 8), 7),
    ("ex2", "spatial"): ((3, 4, 5, 6), 12),
    ("ex3", "temporal"): ((5, 6, 7, 8), 5),
    ("ex3", "spatial"): ((5, 6, 7, 8), 5),
}


def source_residual(case: ManufacturedCase, x, t: float) -> float:
    """``u_tt - K Lap u - K (k * Lap u) - f`` at one point, with the history by adaptive quadrature.

    ``x`` is a coordinate tuple (length ``case.dim``). Tests the sign and
    factor conventions of the source independently of Simpson.
    """
    if case.exact is None:
        raise ValueError(f"case {case.id} has no exact solution")
    x = tuple(np.atleast_1d(np.asarray(x, dtype=float)))
    hist, _ = scipy.integrate.quad(
        lambda s: float(eval_k(t - s, case.vo)) * float(case.exact_lap(*x, s)),
        0.0,
        t,
        epsabs=1e-13,
        epsrel=1e-11,
        limit=200,
    )
    r = case.exact_tt(*x, t) - case.K * case.exact_lap(*x, t) - case.K * hist - case.f(*x, t)
    return float(r)


def spectral_mode_solve(
    lam: float,
    q: Optional[Callable],
    v0: float,
    hat_v0: float,
    vo: VariableOrder,
    steps: int = 2**14,
    T: float = 1.0,
):
    """Solve ``v'' + lam^2 v = q - lam^2 (k * v)`` on [0, T]; returns ``(t, v)`` on a uniform grid.

    ``q`` must accept an array of times (None means zero).

    Classical RK4 on ``(v, v')``. The history ``H = k * v`` is advanced with
    the trapezoidal rule; since ``k(0) = 0`` the newest value drops out, so
    ``H(t_{n+1})`` is known before step n and ``H`` is interpolated linearly
    inside the step. The history rule limits the overall order to two.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    dt = T / steps
    t = dt * np.arange(steps + 1)
    kk = eval_k(t, vo)  # k at lags j*dt
    if q is None:
        qg = np.zeros(steps + 1)
        qm = np.zeros(steps)
    else:
        qg = np.broadcast_to(np.asarray(q(t), dtype=float), t.shape)
        qm = np.broadcast_to(np.asarray(q(t[:-1] + 0.5 * dt), dtype=float), (steps,))
    l2 = lam * lam
    v = np.empty(steps + 1)
    w = np.empty(steps + 1)
    v[0], w[0] = v0, hat_v0
    H_prev = 0.0
    for n in range(steps):
        # trapezoid for H(t_{n+1}) over nodes 0..n (the node n+1 term carries k(0) = 0)
        lag = kk[n + 1:0:-1]
        H_next = dt * (np.dot(lag, v[: n + 1]) - 0.5 * lag[0] * v[0])
        H_mid = 0.5 * (H_prev + H_next)
        vn, wn = v[n], w[n]
        k1v, k1w = wn, qg[n] - l2 * (vn + H_prev)
        k2v = wn + 0.5 * dt * k1w
        k2w = qm[n] - l2 * (vn + 0.5 * dt * k1v + H_mid)
        k3v = wn + 0.5 * dt * k2w
        k3w = qm[n] - l2 * (vn + 0.5 * dt * k2v + H_mid)
        k4v = wn + dt * k3w
        k4w = qg[n + 1] - l2 * (vn + dt * k3v + H_next)
        v[n + 1] = vn + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        w[n + 1] = wn + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        H_prev = H_next
    return t, v


@dataclass(frozen=True)
class RateTable:
    """Errors per refinement level; ``rates[i] = log2(errors[i-1] / errors[i])``, NaN for i = 0."""

    vary: str
    levels: tuple
    errors: tuple
    rates: tuple
    degenerate: tuple

    @classmethod
    def from_errors(cls, vary: str, levels: Sequence[int], errors: Sequence[float]) -> "RateTable":
        levels, errors = tuple(levels), tuple(float(e) for e in errors)
        rates, degenerate = [math.nan], [False]
        for i in range(1, len(errors)):
            same = levels[i] == levels[i - 1]
            degenerate.append(same)
            if same or errors[i] == 0.0 or errors[i - 1] == 0.0:
                rates.append(0.0 if same else math.nan)
            else:
                rates.append(math.log2(errors[i - 1] / errors[i]))
        return cls(vary, levels, errors, tuple(rates), tuple(degenerate))

    def rows(self):
        return list(zip(self.levels, self.errors, self.rates))


def run_method(setup: ProblemSetup, method: str) -> Trajectory:
    if method == "tss":
        return run_tss(setup)
    if method == "fdac":
        return run_fdac(setup)
    raise ValueError(f"method must be 'tss' or 'fdac', got {method!r}")


def _final_error(case: ManufacturedCase, N: int, h_exp: int, method: str) -> float:
    traj = run_method(case.setup(N, h_exp), method)
    return l2_error(traj.frames[-1], case.exact_at(case.T), traj.mesh)


def converge_table(
    case: ManufacturedCase,
    vary: str,
    levels: Sequence[int],
    fixed: int,
    method: str = "fdac",
    weight: str = "volume",
) -> RateTable:
    """Errors under refinement of one resolution with the other held fixed.

    ``levels`` and ``fixed`` are exponents: ``tau = T * 2^-level`` when
    ``vary="temporal"`` (with ``h = 2^-fixed``) and ``h = 2^-level`` when
    ``vary="spatial"`` (with ``tau = T * 2^-fixed``). Cases with an exact
    solution report the L2 error at T; otherwise the final frame is compared
    with the run at half the varied step (``weight`` as in :func:`grid_l2_diff`).
    """
    if vary not in ("temporal", "spatial"):
        raise ValueError(f"vary must be 'temporal' or 'spatial', got {vary!r}")
    if len(levels) < 2:
        raise ValueError("need at least two levels")
    errors = []
    for lev in levels:
        N, h_exp = (2**lev, fixed) if vary == "temporal" else (2**fixed, lev)
        try:
            if case.exact is not None:
                err = _final_error(case, N, h_exp, method)
            else:
                coarse = run_method(case.setup(N, h_exp), method)
                fine_setup = case.setup(2 * N, h_exp) if vary == "temporal" else case.setup(N, h_exp + 1)
                fine = run_method(fine_setup, method)
                err = grid_l2_diff(coarse.frames[-1], fine.frames[-1], coarse.mesh, weight=weight)
        except Exception as exc:
            raise RuntimeError(f"{case.id} {vary} level {lev} (N={N}, h=2^-{h_exp}) failed: {exc}") from exc
        errors.append(err)
    return RateTable.from_errors(vary, levels, errors)
