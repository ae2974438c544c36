"""Two-photon interference and joint-excitation overlap.

Units: times in ns, frequencies in GHz, so products like Sigma * tau are
dimensionless. Spectral-diffusion widths are Gaussian standard deviations;
``EmitterPairConfig.from_fwhm`` converts from FWHM.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import erf

from .constants import FWHM_PER_SIGMA, LN2
from .emitters import (StarkResponse, neutral_fraction, stark_frequency,
                       stark_linewidth, voltage_for_shift)
from .errors import DomainError

QUENCH_LIMIT = math.exp(-1.0)
QUAD_ABS_TOL = 1e-8


def g2_envelope(tau, tau_prime):
    """Coincidence density for distinguishable photons."""
    if not tau_prime > 0:
        raise DomainError("tau_prime must be > 0")
    tau = np.asarray(tau, dtype=float)
    return np.exp(-np.abs(tau) / tau_prime) / (4 * tau_prime)


def g2_interference(tau, tau_prime, sigma_total, delta_nu):
    """Interference term: envelope x Gaussian SD dephasing x detuning beat."""
    tau = np.asarray(tau, dtype=float)
    damp = np.exp(-2 * math.pi**2 * sigma_total**2 * tau**2)
    return g2_envelope(tau, tau_prime) * damp * np.cos(2 * math.pi * delta_nu * tau)


@dataclass(frozen=True)
class EmitterPairConfig:
    tau_prime: float
    sigma1: float
    sigma2: float
    delta_nu: float
    gate: float

    def __post_init__(self):
        if not (self.tau_prime > 0 and self.gate > 0):
            raise DomainError("tau_prime and gate must be > 0")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise DomainError("spectral-diffusion widths must be >= 0")

    @classmethod
    def from_fwhm(cls, tau_prime, gamma1, gamma2, delta_nu, gate):
        return cls(tau_prime, gamma1 / FWHM_PER_SIGMA, gamma2 / FWHM_PER_SIGMA, delta_nu, gate)

    @property
    def sigma_total_sq(self):
        return self.sigma1**2 + self.sigma2**2


def _gate_integral(f, half):
    val, _ = quad(f, 0.0, half, epsabs=QUAD_ABS_TOL, epsrel=1e-10, limit=400)
    return 2 * val


def hom_visibility_flat(sigma_total_sq, delta_nu, gate):
    """Closed form for a flat envelope (tau' >> gate).

    Zero detuning: sqrt(pi/a) erf(gate sqrt(a)/2)/gate with a = 2 pi^2 Sigma^2.
    No dephasing: sin(pi dnu gate)/(pi dnu gate).
    """
    a = 2 * math.pi**2 * sigma_total_sq
    if delta_nu == 0:
        if a == 0:
            return 1.0
        return math.sqrt(math.pi / a) * erf(gate * math.sqrt(a) / 2) / gate
    if a == 0:
        x = math.pi * delta_nu * gate
        return math.sin(x) / x
    raise DomainError("flat-envelope closed form needs delta_nu == 0 or Sigma == 0")


def hom_visibility(cfg: EmitterPairConfig, fast: bool = True) -> float:
    """Gated HOM visibility: ratio of gated interference and envelope integrals.

    With ``fast`` the erf closed form is used when Delta nu = 0 and the envelope
    changes by less than 1e-4 across the gate; otherwise adaptive quadrature.
    """
    s2 = cfg.sigma_total_sq
    if s2 == 0 and cfg.delta_nu == 0:
        return 1.0
    half = 0.5 * cfg.gate
    if fast and cfg.delta_nu == 0 and half / cfg.tau_prime < 1e-4:
        return hom_visibility_flat(s2, 0.0, cfg.gate)
    # common 1/(4 tau') factor cancels in the ratio
    tp = cfg.tau_prime
    a = 2 * math.pi**2 * s2
    w = 2 * math.pi * cfg.delta_nu
    num = _gate_integral(lambda t: math.exp(-t / tp - a * t * t) * math.cos(w * t), half)
    den = 2 * tp * (1 - math.exp(-half / tp))
    return float(np.clip(num / den, -1.0, 1.0))


def p_exc(gamma_fixed, gamma_tuned, delta_nu):
    """Peak product of the fixed profile and the area-conserving tuned profile."""
    gf = np.asarray(gamma_fixed, dtype=float)
    gt = np.asarray(gamma_tuned, dtype=float)
    if np.any(gf <= 0) or np.any(gt <= 0):
        raise DomainError("linewidths must be > 0")
    out = (gf / gt) * np.exp(-4 * LN2 * np.asarray(delta_nu, float) ** 2 / (gf**2 + gt**2))
    return float(out) if np.ndim(out) == 0 else out


def normalize_pair(gamma_fixed, gamma_tuned, delta_nu):
    """(Gamma ratio, normalised detuning)."""
    if gamma_fixed <= 0 or gamma_tuned <= 0:
        raise DomainError("linewidths must be > 0")
    return gamma_fixed / gamma_tuned, delta_nu / math.hypot(gamma_fixed, gamma_tuned)


def p_exc_normalized(gamma_ratio, delta_tilde):
    g = np.asarray(gamma_ratio, dtype=float)
    if np.any(g <= 0):
        raise DomainError("gamma ratio must be > 0")
    out = g * np.exp(-4 * LN2 * np.asarray(delta_tilde, float) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def pair_overlap(gamma_a, gamma_b, delta_nu):
    """p_exc with the narrower line taken as the fixed one, so it never exceeds 1."""
    lo, hi = min(gamma_a, gamma_b), max(gamma_a, gamma_b)
    return p_exc(lo, hi, delta_nu)


def pexc_grid(gamma_ratios: Sequence[float], delta_tildes: Sequence[float], floor: float = 1e-6):
    """p_exc over a (gamma_ratio x delta_tilde) grid, clipped below at ``floor``."""
    g, d = np.meshgrid(np.asarray(gamma_ratios, float), np.asarray(delta_tildes, float),
                       indexing="ij")
    return np.maximum(p_exc_normalized(g, d), floor)


@dataclass(frozen=True)
class OverlapPoint:
    voltage: float
    gamma_ratio: float
    delta_tilde: float
    p_exc: float
    detuning: float
    gamma_tuned: float
    neutral_fraction: float

    @property
    def quenched(self):
        return self.neutral_fraction < QUENCH_LIMIT


def _point(v, nu_f, g_f, tuned):
    nu_t = stark_frequency(tuned, v)
    g_t = stark_linewidth(tuned, v)
    lo, hi = min(g_f, g_t), max(g_f, g_t)
    ratio, dt = normalize_pair(lo, hi, nu_t - nu_f)
    return OverlapPoint(float(v), ratio, dt, p_exc_normalized(ratio, dt), nu_t - nu_f, g_t,
                        float(neutral_fraction(tuned.quench, v)))


def tuning_trajectory(fixed: StarkResponse, tuned: StarkResponse, voltages) -> list:
    """Overlap of a zero-bias ``fixed`` emitter with ``tuned`` along a bias sweep.

    The narrower line plays the fixed role in the overlap so that
    gamma_ratio <= 1. Points where the tuned emitter's neutral fraction falls
    below 1/e report ``quenched``.
    """
    nu_f = stark_frequency(fixed, 0.0)
    g_f = stark_linewidth(fixed, 0.0)
    return [_point(v, nu_f, g_f, tuned) for v in np.asarray(voltages, float)]


def resonance_point(fixed: StarkResponse, tuned: StarkResponse) -> OverlapPoint:
    """Overlap at the bias that tunes ``tuned`` onto the zero-bias ``fixed`` line."""
    nu_f = stark_frequency(fixed, 0.0)
    v = voltage_for_shift(tuned, nu_f - tuned.nu0)
    return _point(v, nu_f, stark_linewidth(fixed, 0.0), tuned)
