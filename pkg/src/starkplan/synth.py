"""Synthetic data from known ground truth.

All randomness comes from ``np.random.Generator(np.random.Philox(seed))``
created per call, so a scenario and seed fully determine the output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import lineshapes as ls
from .emitters import CavityModel, StarkResponse, peak_profile
from .errors import DomainError
from .fitting import DecayTransient, Spectrum


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    n: int

    def __post_init__(self):
        if not (self.stop > self.start and self.n >= 2):
            raise DomainError("grid needs stop > start and n >= 2")

    def values(self):
        return np.linspace(self.start, self.stop, self.n)


@dataclass(frozen=True)
class PoissonNoise:
    """Shot noise; expected counts are multiplied by ``integration_time`` first."""

    integration_time: float = 1.0


@dataclass(frozen=True)
class SynthScenario:
    emitters: Sequence[StarkResponse]
    grid: GridSpec
    bias: float = 0.0
    cavity: Optional[CavityModel] = None
    noise: Optional[PoissonNoise] = None
    seed: int = 0
    scale: float = 1.0
    background: float = 0.0


def _sample(expected, noise, rng):
    if noise is None:
        return expected
    return rng.poisson(expected * noise.integration_time).astype(float)


def ple_model(scenario: SynthScenario, nu):
    """Noise-free PLE intensity: equal-width Gaussian-Lorentzian products."""
    out = np.full_like(np.asarray(nu, float), scenario.background)
    for r in scenario.emitters:
        pk = peak_profile(r, scenario.bias)
        w = pk.fwhm * ls.EQUAL_WIDTH_SCALE
        out += ls.gauss_lorentz(nu, scenario.scale * pk.amplitude, pk.center, w, w)
    return out


def gen_ple_scan(scenario: SynthScenario) -> Spectrum:
    nu = scenario.grid.values()
    y = _sample(ple_model(scenario, nu), scenario.noise, make_rng(scenario.seed))
    return Spectrum(nu, y, metadata={"bias_v": scenario.bias, "seed": scenario.seed})


@dataclass(frozen=True)
class FringeSpec:
    """Fringe and background parameters of a reflection scan (see cavity_reflection)."""

    A: float = 3.0
    f: float = 2 * math.pi / 15.0
    phi: float = 0.3
    y0: float = 50.0
    y1: float = 0.02
    a0: float = 30.0


def reflection_params(cavity: CavityModel, fringe: FringeSpec = FringeSpec()):
    return [fringe.A, fringe.f, fringe.phi, fringe.y0, fringe.y1, fringe.a0,
            cavity.nu_cav, cavity.linewidth]


def gen_reflection_scan(scenario: SynthScenario, fringe: FringeSpec = FringeSpec()) -> Spectrum:
    if scenario.cavity is None:
        raise DomainError("scenario has no cavity")
    nu = scenario.grid.values()
    expected = ls.cavity_reflection(nu, *reflection_params(scenario.cavity, fringe))
    if np.any(expected < 0):
        raise DomainError("reflection model negative; reduce fringe amplitude or dip depth")
    y = _sample(expected, scenario.noise, make_rng(scenario.seed))
    return Spectrum(nu, y, metadata={"seed": scenario.seed})


# ---------------------------------------------------------------------------
# Transients (expected counts are exact bin integrals)
# ---------------------------------------------------------------------------

def decay_expected(tau, amplitude, background, edges):
    """Counts per bin for rate amplitude*exp(-t/tau) (per unit time) plus background per bin."""
    lo, hi = edges[:-1], edges[1:]
    return ls.onset_exp_integral(lo, hi, amplitude, 0.0, tau) + background


def gen_decay(tau: float, amplitude: float, background: float, bins: GridSpec,
              seed: int = 0, noise: bool = True) -> DecayTransient:
    """Single-exponential transient; ``bins`` gives bin edges (n edges -> n-1 bins)."""
    if not tau > 0:
        raise DomainError("tau must be > 0")
    edges = bins.values()
    mu = decay_expected(tau, amplitude, background, edges)
    c = make_rng(seed).poisson(mu).astype(float) if noise else mu
    return DecayTransient(edges[:-1], c, float(edges[1] - edges[0]))


@dataclass(frozen=True)
class ShelvingTruth:
    """Double-decay rates per unit time; a2 is the delayed-peak rate at zero pulse width."""

    a1f: float = 200.0
    t1f: float = 0.0
    tau1f: float = 10.0
    a1s: float = 20.0
    t1s: float = 0.0
    tau1s: float = 80.0
    a2: float = 50.0
    t2: float = 2000.0
    tau2_fall: float = 40.0
    tau2_rise: float = 8.0
    background: float = 0.5
    tau_dark: float = 228.0

    def params(self, pulse_width=0.0):
        a2 = self.a2 * math.exp(-pulse_width / self.tau_dark)
        return [self.a1f, self.t1f, self.tau1f, self.a1s, self.t1s, self.tau1s,
                a2, self.t2, self.tau2_fall, self.tau2_rise]


def shelving_expected(truth: ShelvingTruth, pulse_width, edges):
    lo, hi = edges[:-1], edges[1:]
    return ls.double_decay_binned(lo, hi - lo, *truth.params(pulse_width)) + truth.background


def gen_shelving_sequence(truth: ShelvingTruth, pulse_widths: Sequence[float], bins: GridSpec,
                          seed: int = 0, noise: bool = True) -> list:
    """One transient per electrical pulse width; the delayed peak shrinks as exp(-w/tau_dark)."""
    edges = bins.values()
    rng = make_rng(seed)
    out = []
    for w in pulse_widths:
        mu = shelving_expected(truth, w, edges)
        c = rng.poisson(mu).astype(float) if noise else mu
        out.append(DecayTransient(edges[:-1], c, float(edges[1] - edges[0])))
    return out


# ---------------------------------------------------------------------------
# Photon-correlation streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class G2Stream:
    t1: np.ndarray
    t2: np.ndarray
    duration: float
    period: float
    meta: dict = field(default_factory=dict)


def gen_g2_stream(emitter_rate: float, b1: float, b2: float, period: float, duration: float,
                  seed: int = 0, g2_intrinsic: float = 0.0, poissonian: bool = False,
                  jitter: float = 1e-9) -> G2Stream:
    """Pulsed source on a 50/50 splitter plus independent Poisson backgrounds.

    ``emitter_rate`` is the detected emitter photon rate summed over both
    detectors (1/s). Per pulse the mean photon number is mu = rate * period;
    two-photon events occur with probability g2_intrinsic mu^2 / 2 so the
    zero-delay peak relative to the side peaks equals ``g2_intrinsic``. With
    ``poissonian`` the photon number is Poisson(mu) instead. Emission delays
    are exponential with mean ``jitter``. Times in seconds, sorted.
    """
    if min(emitter_rate, b1, b2) < 0 or not (period > 0 and duration > 0):
        raise DomainError("rates must be >= 0 and period, duration > 0")
    rng = make_rng(seed)
    n_pulses = int(duration / period)
    mu = emitter_rate * period
    if poissonian:
        n = rng.poisson(mu, n_pulses)
    else:
        p2 = 0.5 * g2_intrinsic * mu * mu
        p1 = mu - 2 * p2
        if p1 < 0 or p1 + p2 > 1:
            raise DomainError("photon-number probabilities out of range; lower the rate")
        n = rng.choice(3, size=n_pulses, p=[1 - p1 - p2, p1, p2])
    pulse = np.repeat(np.arange(n_pulses) * period, n)
    t_ph = pulse + rng.exponential(jitter, pulse.size)
    to_1 = rng.random(pulse.size) < 0.5
    bg1 = rng.uniform(0, duration, rng.poisson(b1 * duration))
    bg2 = rng.uniform(0, duration, rng.poisson(b2 * duration))
    t1 = np.sort(np.concatenate([t_ph[to_1], bg1]))
    t2 = np.sort(np.concatenate([t_ph[~to_1], bg2]))
    return G2Stream(t1, t2, n_pulses * period, period,
                    {"emitter_rate": emitter_rate, "b1": b1, "b2": b2, "seed": seed,
                     "g2_intrinsic": g2_intrinsic, "poissonian": poissonian})


def background_for_raw_g2(raw_target: float, g2_intrinsic: float, window: float,
                          period: float) -> float:
    """Background-to-signal ratio per detector that yields a given raw g2(0).

    With equal signal s and background b = beta s on each detector,
    raw = (g + c) / (1 + c), c = (d/theta)(2 beta + beta^2).
    """
    if not g2_intrinsic <= raw_target < 1:
        raise DomainError("need g2_intrinsic <= raw_target < 1")
    c = (raw_target - g2_intrinsic) / (1 - raw_target)
    return -1 + math.sqrt(1 + c * period / window)
