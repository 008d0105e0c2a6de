import math

import numpy as np
import pytest
import scipy.integrate
import sympy as sp

from fracwave import (
    RateTable,
    VariableOrder,
    conv_poly3,
    converge_table,
    eval_g,
    eval_k,
    manufactured_case,
    source_ex1,
    source_ex2,
    source_residual,
    spectral_mode_solve,
)
from fracwave.oracles import SIMPSON_PANELS


def quad(f, a, b):
    return scipy.integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=500)[0]


# --- conv_poly3 -----------------------------------------------------------------


def test_conv_trivial_cases(preset):
    assert conv_poly3(0.0, preset) == 0.0
    if preset.name == "zero":
        np.testing.assert_array_equal(conv_poly3(np.linspace(0, 1, 5), preset), 0.0)


@pytest.mark.parametrize("t", [0.3, 1.0])
def test_conv_matches_integration_by_parts(t):
    vo = VariableOrder.one_minus_cos()
    # int k(s)(t-s)^3 = [g (t-s)^3]_0^t + 3 int g (t-s)^2 = -t^3 + 3 int g(s)(t-s)^2 ds, using g(0) = 1
    ref = -(t**3) + 3.0 * quad(lambda s: eval_g(s, vo) * (t - s) ** 2, 0.0, t)
    assert abs(conv_poly3(t, vo) - ref) <= 1e-9


def test_conv_panel_doubling_converged():
    vo = VariableOrder.one_minus_cos()
    t = np.array([0.25, 0.5, 1.0])
    diff = np.abs(conv_poly3(t, vo, SIMPSON_PANELS) - conv_poly3(t, vo, 2 * SIMPSON_PANELS))
    assert np.max(diff) <= 1e-9


def test_conv_array_matches_scalar():
    vo = VariableOrder.t_sin_t()
    t = np.array([[0.1, 0.7], [0.7, 1.0]])
    out = conv_poly3(t, vo, 64)
    assert out.shape == (2, 2)
    assert out[0, 1] == out[1, 0] == conv_poly3(0.7, vo, 64)


def test_conv_argument_errors():
    vo = VariableOrder.zero()
    with pytest.raises(ValueError):
        conv_poly3(0.5, vo, panels=7)
    with pytest.raises(ValueError):
        conv_poly3(-0.5, vo)


# --- sources and residuals --------------------------------------------------------


def test_sources_vanish_at_t0_and_boundary():
    vo = VariableOrder.one_minus_cos()
    f1, f2 = source_ex1(vo), source_ex2(VariableOrder.t_sin_t())
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(f1(x, 0.0), 0.0, atol=1e-15)
    np.testing.assert_allclose(f2(x, 0.3, 0.0), 0.0, atol=1e-15)
    assert abs(f1(0.0, 0.7)) <= 1e-15
    assert abs(f2(0.0, 0.4, 0.7)) <= 1e-15


def test_source_ex1_formula():
    vo = VariableOrder.one_minus_cos()
    K = 0.01
    x, t = 0.3, 0.8
    expected = 6 * t * np.sin(2 * np.pi * x) + 4 * K * np.pi**2 * np.sin(2 * np.pi * x) * (t**3 + conv_poly3(t, vo))
    assert source_ex1(vo, K)(x, t) == pytest.approx(expected, rel=1e-15)


def _sympy_derivatives(dim):
    x, y, t = sp.symbols("x y t")
    u = t**3 * sp.sin(2 * sp.pi * x) * (sp.sin(2 * sp.pi * y) if dim == 2 else 1)
    lap = sp.diff(u, x, 2) + (sp.diff(u, y, 2) if dim == 2 else 0)
    args = (x, t) if dim == 1 else (x, y, t)
    return sp.lambdify(args, u), sp.lambdify(args, sp.diff(u, t, 2)), sp.lambdify(args, lap)


@pytest.mark.parametrize("case_id", ["ex1", "ex2"])
def test_case_derivatives_match_symbolic(case_id):
    case = manufactured_case(case_id)
    u, utt, lap = _sympy_derivatives(case.dim)
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = tuple(rng.uniform(0, 1, case.dim)) + (rng.uniform(0, 1),)
        assert case.exact(*p) == pytest.approx(u(*p), abs=1e-14)
        assert case.exact_tt(*p) == pytest.approx(utt(*p), abs=1e-13)
        assert case.exact_lap(*p) == pytest.approx(lap(*p), rel=1e-13, abs=1e-12)


@pytest.mark.parametrize("case_id", ["ex1", "ex2"])
def test_residual_property_on_grid(case_id):
    case = manufactured_case(case_id)
    xs = np.linspace(0.05, 0.95, 10)
    ts = np.linspace(0.1, 1.0, 10)
    worst = 0.0
    for x in xs:
        for t in ts:
            point = (x,) if case.dim == 1 else (x, 1.0 - 0.9 * x)
            worst = max(worst, abs(source_residual(case, point, t)))
    assert worst <= 1e-8


def test_printed_2d_factor_is_not_consistent():
    vo = VariableOrder.t_sin_t()
    case = manufactured_case("ex2", vo)
    wrong = type(case)(**{**case.__dict__, "f": source_ex2(vo, laplacian_factor=4.0)})
    assert abs(source_residual(wrong, (0.25, 0.25), 1.0)) > 1e-2


def test_case_defaults():
    assert manufactured_case("ex1").vo.name == "one-minus-cos"
    assert manufactured_case("ex2").vo.name == "t-sin-t"
    ex3 = manufactured_case("ex3")
    assert ex3.dim == 2 and ex3.exact is None
    with pytest.raises(ValueError):
        ex3.exact_at(1.0)
    with pytest.raises(ValueError):
        manufactured_case("ex4")


# --- spectral single-mode oracle -----------------------------------------------------


def test_spectral_harmonic_oscillator():
    lam = 3.0
    zero = VariableOrder.zero()
    _, v = spectral_mode_solve(lam, None, 1.0, 0.0, zero)
    assert abs(v[-1] - math.cos(lam)) <= 1e-8
    _, v = spectral_mode_solve(lam, None, 0.0, 1.0, zero)
    assert abs(v[-1] - math.sin(lam) / lam) <= 1e-8


def test_spectral_manufactured_cubic():
    vo = VariableOrder.one_minus_cos()
    lam = 1.0
    panels = 1024
    q = lambda s: 6 * s + lam**2 * (s**3 + conv_poly3(s, vo, panels))
    t, v = spectral_mode_solve(lam, q, 0.0, 0.0, vo, steps=2**14)
    assert abs(v[-1] - 1.0) <= 1e-7


def test_spectral_history_against_volterra_reference():
    """Constant forcing: compare with an independent fine trapezoidal Volterra solve of the integrated form."""
    vo = VariableOrder.t_sin_t()
    lam = 2.0
    _, v = spectral_mode_solve(lam, lambda s: np.ones_like(s), 0.3, -0.2, vo, steps=2**12)
    _, v2 = spectral_mode_solve(lam, lambda s: np.ones_like(s), 0.3, -0.2, vo, steps=2**13)
    # second order: halving the step shrinks the difference by about four
    _, v3 = spectral_mode_solve(lam, lambda s: np.ones_like(s), 0.3, -0.2, vo, steps=2**14)
    ratio = abs(v[-1] - v2[-1]) / abs(v2[-1] - v3[-1])
    assert 3.0 <= ratio <= 5.0


# --- rate tables -------------------------------------------------------------------


def test_rate_table_rates():
    tab = RateTable.from_errors("temporal", [5, 6, 7], [0.4, 0.2, 0.05])
    assert math.isnan(tab.rates[0])
    assert tab.rates[1:] == pytest.approx((1.0, 2.0))
    assert tab.rows()[1] == (6, 0.2, pytest.approx(1.0))


def test_rate_table_degenerate_levels():
    tab = RateTable.from_errors("spatial", [4, 4], [0.1, 0.1])
    assert tab.rates[1] == 0.0 and tab.degenerate == (False, True)


def test_converge_table_small_ex1():
    case = manufactured_case("ex1")
    tab = converge_table(case, "temporal", [3, 4, 5], 6, method="tss")
    assert len(tab.errors) == 3 and all(e > 0 for e in tab.errors)
    assert tab.errors[0] > tab.errors[1] > tab.errors[2]
    with pytest.raises(ValueError):
        converge_table(case, "both", [3, 4], 5)
    with pytest.raises(ValueError):
        converge_table(case, "temporal", [3], 5)


def test_converge_table_ex3_self_convergence_small():
    case = manufactured_case("ex3")
    tab = converge_table(case, "spatial", [2, 3, 4], 4)
    assert tab.errors[0] > tab.errors[1] > tab.errors[2] > 0
    tab_h = converge_table(case, "spatial", [2, 3], 4, weight="h")
    # weight h^2 versus h differs by sqrt(h) on identical differences
    assert tab_h.errors[0] == pytest.approx(tab.errors[0] / math.sqrt(2.0**-2), rel=1e-12)
