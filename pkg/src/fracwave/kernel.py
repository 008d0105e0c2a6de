"""Variable-order kernel: alpha(t), g(t) = t^-alpha(t) / Gamma(1 - alpha(t)), k = g'.

The lag weights ``beta[j] = g(tau*j) - g(tau*(j-1))`` are the convolution
quadrature coefficients of the history term; they depend only on the lag,
which is what gives the all-at-once system its Toeplitz structure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma

__all__ = [
    "Preset",
    "VariableOrder",
    "AssumptionError",
    "AssumptionReport",
    "LagWeights",
    "digamma",
    "eval_g",
    "eval_k",
    "lag_weights",
    "toeplitz_first_column",
    "check_assumption_a",
]

# below this, g and k return their t -> 0+ limits
T_FLOOR = 1e-300
# dense sampling used to validate alpha at construction
VALIDATION_POINTS = 2**14


class Preset(enum.Enum):
    ZERO = "zero"
    ONE_MINUS_COS = "one-minus-cos"
    T_SIN_T = "t-sin-t"
    CUSTOM = "custom"


class AssumptionError(ValueError):
    """Raised when a variable order violates 0 <= alpha <= alpha* < 1, alpha(0) = alpha'(0) = 0."""


@dataclass(frozen=True)
class AssumptionReport:
    passed: bool
    alpha_max: float
    message: str = ""
    first_violation: Optional[float] = None

    def __bool__(self) -> bool:
        return self.passed


ScalarFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class VariableOrder:
    """A time-dependent fractional order with analytic first and second derivatives.

    Use :meth:`from_name` for the built-in presets or :meth:`custom` for
    user-supplied callbacks. Construction samples ``alpha`` densely on
    ``[0, T]`` and raises :class:`AssumptionError` if the bounds fail,
    unless ``validate=False``.
    """

    preset: Preset
    alpha: ScalarFn = field(repr=False)
    dalpha: ScalarFn = field(repr=False)
    d2alpha: ScalarFn = field(repr=False)
    T: float = 1.0
    validate: bool = field(default=True, repr=False, compare=False)
    alpha_star: float = field(init=False, default=0.0)

    def __post_init__(self):
        grid = np.linspace(0.0, self.T, VALIDATION_POINTS + 1)
        object.__setattr__(self, "alpha_star", float(np.max(self.alpha(grid))))
        if self.validate:
            report = check_assumption_a(self, grid)
            if not report:
                raise AssumptionError(report.message)

    @property
    def name(self) -> str:
        return self.preset.value

    @classmethod
    def zero(cls, T: float = 1.0) -> "VariableOrder":
        zeros = np.zeros_like
        return cls(Preset.ZERO, zeros, zeros, zeros, T=T)

    @classmethod
    def one_minus_cos(cls, T: float = 1.0) -> "VariableOrder":
        return cls(
            Preset.ONE_MINUS_COS,
            lambda t: 1.0 - np.cos(t),
            np.sin,
            np.cos,
            T=T,
        )

    @classmethod
    def t_sin_t(cls, T: float = 1.0) -> "VariableOrder":
        return cls(
            Preset.T_SIN_T,
            lambda t: t * np.sin(t),
            lambda t: np.sin(t) + t * np.cos(t),
            lambda t: 2.0 * np.cos(t) - t * np.sin(t),
            T=T,
        )

    @classmethod
    def custom(cls, alpha, dalpha, d2alpha, T: float = 1.0, validate: bool = True) -> "VariableOrder":
        return cls(Preset.CUSTOM, alpha, dalpha, d2alpha, T=T, validate=validate)

    @classmethod
    def from_name(cls, name: str, T: float = 1.0) -> "VariableOrder":
        builders = {
            Preset.ZERO.value: cls.zero,
            Preset.ONE_MINUS_COS.value: cls.one_minus_cos,
            Preset.T_SIN_T.value: cls.t_sin_t,
        }
        try:
            return builders[name](T=T)
        except KeyError:
            raise ValueError(
                f"unknown alpha preset {name!r}; expected one of {sorted(builders)}"
            ) from None


# Bernoulli terms B_2k / (2k) of the asymptotic expansion of digamma
_PSI_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x):
    """Digamma function psi(x) = Gamma'(x) / Gamma(x) for x > 0.

    Shifts the argument above 8 with psi(x) = psi(x + 1) - 1/x, then sums the
    asymptotic series. Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("digamma is only defined here for x > 0")
    shift = np.zeros_like(x)
    x = x.copy()
    while True:
        small = x < 8.0
        if not np.any(small):
            break
        shift = np.where(small, shift - 1.0 / x, shift)
        x = np.where(small, x + 1.0, x)
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    for coef in reversed(_PSI_ASYMPTOTIC):
        series = (series + coef) * inv2
    out = np.log(x) - 0.5 / x - series + shift
    return out[()] if out.ndim == 0 else out


def _as_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    return t


def eval_g(t, vo: VariableOrder):
    """g(t) = t^-alpha(t) / Gamma(1 - alpha(t)), with g(0) = 1."""
    t = _as_time(t)
    pos = t > T_FLOOR
    ts = np.where(pos, t, 1.0)
    a = vo.alpha(ts)
    val = np.exp(-a * np.log(ts)) / gamma(1.0 - a)
    out = np.where(pos, val, 1.0)
    return out[()] if out.ndim == 0 else out


def eval_k(t, vo: VariableOrder):
    """k(t) = g'(t) by logarithmic differentiation, with k(0) = 0."""
    t = _as_time(t)
    pos = t > T_FLOOR
    ts = np.where(pos, t, 1.0)
    a = vo.alpha(ts)
    da = vo.dalpha(ts)
    g = np.exp(-a * np.log(ts)) / gamma(1.0 - a)
    val = g * (-da * np.log(ts) - a / ts + digamma(1.0 - a) * da)
    out = np.where(pos, val, 0.0)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class LagWeights:
    """Lag weights ``beta[1..count]``; ``beta[0]`` is stored as 0 so indices match lags."""

    tau: float
    count: int
    beta: np.ndarray = field(repr=False)

    def b(self, n: int, k: int) -> float:
        """Quadrature coefficient b_{n,k} for 0 <= k < n."""
        if not 0 <= k < n or n - k > self.count:
            raise IndexError(f"b({n}, {k}) outside the available lags 1..{self.count}")
        return float(self.beta[n - k])


def lag_weights(tau: float, count: int, vo: VariableOrder) -> LagWeights:
    if tau <= 0:
        raise ValueError("tau must be positive")
    if count < 1:
        raise ValueError("count must be at least 1")
    g = eval_g(tau * np.arange(count + 1), vo)
    beta = np.empty(count + 1)
    beta[0] = 0.0
    beta[1:] = np.diff(g)
    beta.setflags(write=False)
    return LagWeights(tau=tau, count=count, beta=beta)


def toeplitz_first_column(N: int, tau: float, vo: VariableOrder) -> np.ndarray:
    """First column of the (N-1)x(N-1) lower-triangular Toeplitz history matrix.

    Entry 0 is 1 (the implicit stiffness term); entry j >= 1 is beta[j].
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    tc = np.empty(N - 1)
    tc[0] = 1.0
    if N > 2:
        tc[1:] = lag_weights(tau, N - 2, vo).beta[1:]
    return tc


def check_assumption_a(vo: VariableOrder, grid) -> AssumptionReport:
    """Check 0 <= alpha < 1, alpha(0) = alpha'(0) = 0 and finite derivatives on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    a = np.asarray(vo.alpha(grid), dtype=float) * np.ones_like(grid)
    da = np.asarray(vo.dalpha(grid), dtype=float) * np.ones_like(grid)
    d2a = np.asarray(vo.d2alpha(grid), dtype=float) * np.ones_like(grid)
    amax = float(np.max(a)) if a.size else 0.0

    def fail(mask, what):
        idx = int(np.argmax(mask))
        return AssumptionReport(False, amax, f"{what} at t={grid[idx]:.6g}", float(grid[idx]))

    bad = (a < 0) | (a >= 1) | ~np.isfinite(a)
    if np.any(bad):
        return fail(bad, f"alpha outside [0, 1): alpha={a[np.argmax(bad)]:.6g}")
    bad = ~np.isfinite(da) | ~np.isfinite(d2a)
    if np.any(bad):
        return fail(bad, "unbounded derivative of alpha")
    a0 = float(vo.alpha(np.array(0.0)))
    da0 = float(vo.dalpha(np.array(0.0)))
    if abs(a0) > 1e-14 or abs(da0) > 1e-14:
        return AssumptionReport(False, amax, f"alpha(0)={a0:.3g}, alpha'(0)={da0:.3g}; both must vanish", 0.0)
    return AssumptionReport(True, amax, "ok")
