import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from starkplan import lineshapes as ls
from starkplan.constants import FWHM_PER_SIGMA


def test_gauss_lorentz_examples():
    assert ls.gauss_lorentz(5.0, 3.0, 5.0, 1.0, 1.0) == 3.0
    assert ls.gauss_lorentz(1.0, 1.0, 0.0, 2.0, 2.0) == pytest.approx(0.25, rel=1e-14)
    nu = np.linspace(-5, 5, 11)
    lor = 0.25 / (nu**2 + 0.25)
    assert np.allclose(ls.gauss_lorentz(nu, 1.0, 0.0, 1e9, 1.0), lor, rtol=1e-12)


def test_equal_width_scale_gives_unit_fwhm():
    w = ls.EQUAL_WIDTH_SCALE
    assert ls.gl_product_fwhm(w, w) == pytest.approx(1.0, rel=1e-12)


def test_cavity_reflection_examples():
    assert ls.cavity_reflection(0.0, 0, 1, 0, 3.0, 0, 1.0, 0.0, 2.0) == pytest.approx(3 * 2)
    nu = np.linspace(-10, 10, 21)
    assert np.allclose(ls.cavity_reflection(nu, 0, 1, 0, 2.0, 0.1, 0.0, 0.0, 1.0),
                       (2.0 + 0.1 * nu) ** 2)
    assert ls.cavity_reflection(1.0, 0, 1, 0, 1.0, 0, 0.5, 0.0, 2.0) == pytest.approx(0.75)


def _voigt_oracle(x, sigma, gamma_l):
    hw = 0.5 * gamma_l
    g = lambda u: math.exp(-u * u / (2 * sigma**2)) / (sigma * math.sqrt(2 * math.pi))
    lor = lambda u: hw / math.pi / (u * u + hw * hw)
    val, _ = quad(lambda u: g(u) * lor(x - u), -40 * sigma, 40 * sigma, points=[x],
                  epsabs=0, epsrel=1e-12, limit=500)
    # Lorentzian tails outside the Gaussian support are negligible at this width
    return val


@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.5, 6.0])
def test_voigt_against_convolution(x):
    assert ls.voigt(x, 1.0, 0.0, 0.8, 1.3) == pytest.approx(_voigt_oracle(x, 0.8, 1.3), rel=1e-6)


def test_voigt_limits_and_area():
    nu = np.linspace(-4, 4, 9)
    gauss = np.exp(-nu**2 / 2) / math.sqrt(2 * math.pi)
    assert np.allclose(ls.voigt(nu, 1.0, 0.0, 1.0, 0.0), gauss, rtol=1e-12)
    area, _ = quad(lambda u: ls.voigt(u, 2.5, 1.0, 0.7, 0.9), -np.inf, np.inf, limit=400)
    assert area == pytest.approx(2.5, rel=1e-8)


def test_voigt_fwhm_approximation():
    f = lambda u: ls.voigt(u, 1.0, 0.0, 1.0, 1.0) - 0.5 * ls.voigt(0.0, 1.0, 0.0, 1.0, 1.0)
    numeric = 2 * brentq(f, 0, 10, xtol=1e-14)
    assert ls.voigt_fwhm_approx(1.0, 1.0) == pytest.approx(numeric, rel=3e-4)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3))
def test_skewed_voigt_area_independent_of_skew(skew):
    a, _ = quad(lambda u: ls.skewed_voigt(u, 3.0, 0.0, 0.8, 1.1, skew), -np.inf, np.inf,
                limit=400, epsabs=1e-11)
    assert a == pytest.approx(3.0, rel=1e-7)


def test_peaks_max_at_centre():
    nu = np.linspace(-10, 10, 2001)
    step = nu[1] - nu[0]
    for y in (ls.gauss_lorentz(nu, 1, 0.37, 2, 3), ls.voigt(nu, 1, 0.37, 1, 2),
              ls.skewed_voigt(nu, 1, 0.37, 1, 2, 0.0)):
        assert abs(nu[np.argmax(y)] - 0.37) <= step


def test_decay_shapes():
    assert ls.single_exp(72.8, 5.0, 72.8) == pytest.approx(5.0 / math.e)
    assert ls.single_exp(-1.0, 5.0, 72.8) == 0.0
    t = np.linspace(0, 2000, 401)
    p = [0, 0, 10, 0, 0, 80, 1.0, 500.0, 100.0, 20.0]
    y = ls.double_decay(t, *p)
    assert ls.double_decay(500.0, *p) == 0.0
    assert np.all(y[t < 500] == 0) and np.all(y[t > 500] > 0)
    assert ls.delayed_peak_area(1.0, 1.0, 0.2) == pytest.approx(0.8)
    q = [3.0, 0.0, 40.0, 0.0, 0.0, 80.0, 0.0, 500.0, 100.0, 20.0]
    assert np.array_equal(ls.double_decay(t, *q), ls.single_exp(t, 3.0, 40.0))


def test_delayed_peak_integral_matches_area_rule():
    val, _ = quad(lambda u: ls.double_decay(u, 0, 0, 1, 0, 0, 1, 2.0, 100.0, 300.0, 50.0),
                  100.0, np.inf, limit=200)
    assert val == pytest.approx(ls.delayed_peak_area(2.0, 300.0, 50.0), rel=1e-9)


def test_binned_double_decay_matches_quadrature():
    p = [5.0, 0.0, 10.0, 1.0, 0.0, 80.0, 2.0, 300.0, 40.0, 8.0]
    t = np.arange(0, 600, 4.0)
    binned = ls.double_decay_binned(t, 4.0, *p)
    ref = [quad(lambda u: ls.double_decay(u, *p), a, a + 4.0, points=[0.0, 300.0])[0] for a in t]
    assert np.allclose(binned, ref, rtol=1e-9, atol=1e-12)


def test_hole_width():
    assert ls.eval_hole_width(0, 0, 14.0, 15.5) == pytest.approx(31.0)
    assert ls.eval_hole_width(2.0, 1.0, 1.0, 1.0) == pytest.approx(3.0)
    assert ls.eval_hole_width(390.0, 10.0, 14.0, 15.5) == pytest.approx(99.79, abs=0.005)
    with pytest.raises(ValueError):
        ls.eval_hole_width(1.0, 1.0, 0.0, 1.0)


@given(st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0.1, 50))
def test_hole_width_monotone_and_linear(p1, p2, hom):
    lo, hi = sorted((p1, p2))
    assert ls.hole_width(lo, hom, 14.0) <= ls.hole_width(hi, hom, 14.0)
    assert ls.hole_width(hi, 2 * hom, 14.0) == pytest.approx(2 * ls.hole_width(hi, hom, 14.0))


@given(st.floats(-50, 50), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-5, 5))
def test_peak_shapes_nonnegative(x, w1, w2, skew):
    assert ls.gauss_lorentz(x, 1.0, 0.0, w1, w2) >= 0
    assert ls.voigt(x, 1.0, 0.0, w1, w2) >= 0
    assert ls.skewed_voigt(x, 1.0, 0.0, w1, w2, skew) >= 0


def test_lineshape_registry():
    shape = ls.LineShape("sigmoid", (1.0, -112.0, 6.6))
    assert shape(-112.0) == 0.5
    assert shape.named == {"amplitude": 1.0, "v_switch": -112.0, "width": 6.6}
    with pytest.raises(ValueError):
        ls.LineShape("voigt", (1.0,))
    assert FWHM_PER_SIGMA == pytest.approx(2 * math.sqrt(2 * math.log(2)), rel=1e-15)
