"""Closed-form spectral and temporal model functions.

All peak widths are FWHM except the Voigt Gaussian width, which is the
standard deviation ``sigma`` (FWHM_G = 2 sqrt(2 ln 2) sigma). Widths enter
by magnitude so optimizers may step through zero without producing NaN.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf, voigt_profile

from .constants import FWHM_PER_SIGMA, LN2


def gauss_lorentz(nu, a, center, gamma_g, gamma_l):
    """Gaussian x Lorentzian product with peak value ``a`` at ``center``."""
    d = np.asarray(nu, dtype=float) - center
    hl2 = (0.5 * gamma_l) ** 2
    return a * np.exp(-4 * LN2 * d * d / gamma_g**2) * hl2 / (d * d + hl2)


def gl_product_fwhm(gamma_g, gamma_l):
    """FWHM of the Gaussian-Lorentzian product (numeric root)."""
    gamma_g, gamma_l = abs(gamma_g), abs(gamma_l)
    f = lambda u: gauss_lorentz(u, 1.0, 0.0, gamma_g, gamma_l) - 0.5
    hi = 0.5 * min(gamma_g, gamma_l)
    return 2 * brentq(f, 0.0, hi, xtol=1e-14 * hi, rtol=4 * np.finfo(float).eps)


# width scale that gives an equal-width product a unit FWHM
EQUAL_WIDTH_SCALE = 1.0 / gl_product_fwhm(1.0, 1.0)


def voigt(nu, area, center, sigma, gamma_l):
    """Area-normalised Voigt: Gaussian(sigma) convolved with Lorentzian(FWHM gamma_l)."""
    d = np.asarray(nu, dtype=float) - center
    return area * voigt_profile(d, abs(sigma), 0.5 * abs(gamma_l))


def skewed_voigt(nu, area, center, sigma, gamma_l, skew):
    """Voigt times the error-function skew factor 1 + erf(skew (nu - nu0) / (sigma sqrt 2)).

    The skew factor is odd around the center and the Voigt is even, so the
    integral equals ``area`` for every skew.
    """
    d = np.asarray(nu, dtype=float) - center
    s = abs(sigma)
    return voigt(nu, area, center, s, gamma_l) * (1.0 + erf(skew * d / (s * math.sqrt(2))))


def voigt_fwhm_approx(sigma, gamma_l):
    """Olivero-Longbothum approximation (about 0.02 % accurate)."""
    fg = FWHM_PER_SIGMA * sigma
    return 0.5346 * gamma_l + math.sqrt(0.2166 * gamma_l**2 + fg**2)


def sigmoid(v, amplitude, v_switch, width):
    return amplitude / (1.0 + np.exp((v_switch - np.asarray(v, dtype=float)) / width))


def cavity_reflection(nu, A, f, phi, y0, y1, a0, nu_cav, gamma_cav):
    """Fringe envelope times background-minus-Lorentzian dip.

    S = [A sin(f nu + phi) + B] [B - L], B = y0 + y1 (nu - nu_cav),
    L = a0 (Gamma/2)^2 / ((nu - nu_cav)^2 + (Gamma/2)^2).
    """
    nu = np.asarray(nu, dtype=float)
    d = nu - nu_cav
    b = y0 + y1 * d
    h2 = (0.5 * gamma_cav) ** 2
    lor = a0 * h2 / (d * d + h2)
    return (A * np.sin(f * nu + phi) + b) * (b - lor)


def single_exp(t, amplitude, tau):
    t = np.asarray(t, dtype=float)
    return np.where(t >= 0, amplitude * np.exp(-np.maximum(t, 0) / abs(tau)), 0.0)


def _onset_exp(t, a, t0, tau):
    dt = t - t0
    return np.where(dt >= 0, a * np.exp(-np.maximum(dt, 0) / abs(tau)), 0.0)


def double_decay(t, a1f, t1f, tau1f, a1s, t1s, tau1s, a2, t2, tau2_fall, tau2_rise):
    """Bi-exponential first peak plus a rise-limited delayed peak.

    Every term is zero before its own onset time.
    """
    t = np.asarray(t, dtype=float)
    second = _onset_exp(t, a2, t2, tau2_fall) - _onset_exp(t, a2, t2, tau2_rise)
    return _onset_exp(t, a1f, t1f, tau1f) + _onset_exp(t, a1s, t1s, tau1s) + second


def onset_exp_integral(lo, hi, a, t0, tau):
    """Integral of a exp(-(t - t0)/tau) for t >= t0 over [lo, hi]."""
    tau = abs(tau)
    s = np.maximum(lo, t0)
    e = np.maximum(hi, t0)
    return a * tau * (np.exp(-(s - t0) / tau) - np.exp(-(e - t0) / tau))


def double_decay_binned(t, bin_width, a1f, t1f, tau1f, a1s, t1s, tau1s, a2, t2, tau2_fall,
                        tau2_rise):
    """Counts per bin [t, t + bin_width) of the double-decay rate (exact integral)."""
    lo = np.asarray(t, dtype=float)
    hi = lo + bin_width
    return (onset_exp_integral(lo, hi, a1f, t1f, tau1f)
            + onset_exp_integral(lo, hi, a1s, t1s, tau1s)
            + onset_exp_integral(lo, hi, a2, t2, tau2_fall)
            - onset_exp_integral(lo, hi, a2, t2, tau2_rise))


def delayed_peak_area(a2, tau2_fall, tau2_rise):
    return a2 * (tau2_fall - tau2_rise)


def hole_width(p_total, hom_linewidth, p_sat):
    """Saturated hole FWHM for total (pump + probe) power."""
    p = np.asarray(p_total, dtype=float)
    return hom_linewidth * (1.0 + np.sqrt(1.0 + p / p_sat))


def eval_hole_width(p_pump, p_probe, p_sat, hom_linewidth):
    if p_sat <= 0 or hom_linewidth <= 0 or p_pump < 0 or p_probe < 0:
        raise ValueError("need powers >= 0, p_sat > 0, hom_linewidth > 0")
    return float(hole_width(p_pump + p_probe, hom_linewidth, p_sat))


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    func: Callable
    param_names: tuple


SHAPES = {
    s.kind: s for s in [
        ShapeSpec("gauss_lorentz", gauss_lorentz, ("amplitude", "center", "gamma_g", "gamma_l")),
        ShapeSpec("voigt", voigt, ("area", "center", "sigma", "gamma_l")),
        ShapeSpec("skewed_voigt", skewed_voigt, ("area", "center", "sigma", "gamma_l", "skew")),
        ShapeSpec("sigmoid", sigmoid, ("amplitude", "v_switch", "width")),
        ShapeSpec("cavity", cavity_reflection,
                  ("A", "f", "phi", "y0", "y1", "a0", "nu_cav", "gamma_cav")),
        ShapeSpec("single_exp", single_exp, ("amplitude", "tau")),
        ShapeSpec("double_decay", double_decay,
                  ("a1f", "t1f", "tau1f", "a1s", "t1s", "tau1s", "a2", "t2",
                   "tau2_fall", "tau2_rise")),
        ShapeSpec("hole_width", hole_width, ("hom_linewidth", "p_sat")),
    ]
}


@dataclass(frozen=True)
class LineShape:
    """A model kind bound to a parameter vector (order as in ``SHAPES``)."""

    kind: str
    params: Sequence[float]

    def __post_init__(self):
        spec = SHAPES[self.kind]
        if len(self.params) != len(spec.param_names):
            raise ValueError(f"{self.kind} takes {len(spec.param_names)} parameters")

    @property
    def named(self):
        return dict(zip(SHAPES[self.kind].param_names, self.params))

    def __call__(self, x):
        return SHAPES[self.kind].func(x, *self.params)
