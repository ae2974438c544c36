"""Forward models for a single emitter's response to a DC bias.

Frequencies are in GHz, voltages in V (reverse bias is negative), and
linewidths are FWHM in GHz unless a name says otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy.special import expit

from .constants import BOHR_MAGNETON_GHZ_PER_T, BOLTZMANN, ELEMENTARY_CHARGE
from .errors import DomainError, ModelValidityError, UnreachableError

ArrayLike = Union[float, np.ndarray]

_K_B_MEV = BOLTZMANN / ELEMENTARY_CHARGE * 1e3  # meV/K


# ---------------------------------------------------------------------------
# Charge-state quenching
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmoidQuench:
    """Phenomenological neutral-state occupancy (1 + exp((V_s - V)/w))^-1."""

    v_switch: float
    width: float
    kind: str = field(default="sigmoid", init=False)

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError("sigmoid width must be > 0")

    def occupancy(self, v):
        return expit((np.asarray(v, dtype=float) - self.v_switch) / self.width)


@dataclass(frozen=True)
class FermiDiracQuench:
    """Neutral occupancy set by the hole quasi-Fermi level crossing a charge level.

    The level sits ``level_offset`` (meV) above the quasi-Fermi level at 0 V and
    the quasi-Fermi level moves by ``fermi_slope`` meV per volt of bias.
    Equivalent to a sigmoid with V_s = level_offset/fermi_slope and
    width = k_B T / fermi_slope.
    """

    level_offset: float
    fermi_slope: float
    temperature: float
    kind: str = field(default="fermi_dirac", init=False)

    def __post_init__(self):
        if not self.temperature > 0:
            raise DomainError("temperature must be > 0")
        if not self.fermi_slope > 0:
            raise DomainError("fermi_slope must be > 0 so reverse bias depletes the neutral state")

    @property
    def v_switch(self):
        return self.level_offset / self.fermi_slope

    @property
    def width(self):
        return _K_B_MEV * self.temperature / self.fermi_slope

    def occupancy(self, v):
        v = np.asarray(v, dtype=float)
        kt = _K_B_MEV * self.temperature
        return expit(-(self.level_offset - self.fermi_slope * v) / kt)


@dataclass(frozen=True)
class FieldIonizationQuench:
    """Steady-state occupancy Gamma_c / (Gamma_c + Gamma_i(F)).

    Gamma_i = ionization_prefactor * exp(-field_scale / F) with the local field
    F(V) = field_offset + field_slope * V in MV/m. ``field_slope`` must be
    <= 0 so that the field grows with reverse bias.
    """

    capture_rate: float
    ionization_prefactor: float
    field_scale: float
    field_offset: float = 0.0
    field_slope: float = -0.05
    kind: str = field(default="field_ionization", init=False)

    def __post_init__(self):
        if not (self.capture_rate > 0 and self.ionization_prefactor > 0 and self.field_scale > 0):
            raise DomainError("rates and field_scale must be > 0")
        if self.field_offset < 0 or self.field_slope > 0:
            raise DomainError("field map must give F >= 0 for all V <= 0")

    def field(self, v):
        return self.field_offset + self.field_slope * np.asarray(v, dtype=float)

    def occupancy(self, v):
        f = np.maximum(self.field(v), 0.0)
        with np.errstate(divide="ignore", over="ignore"):
            expo = np.where(f > 0, -self.field_scale / np.where(f > 0, f, 1.0), -np.inf)
        # Gamma_c / (Gamma_c + Gamma_i) written as a logistic for stability
        return expit(math.log(self.capture_rate / self.ionization_prefactor) - expo)


QuenchModel = Union[SigmoidQuench, FermiDiracQuench, FieldIonizationQuench]


def neutral_fraction(q: Optional[QuenchModel], v: ArrayLike):
    """Occupancy of the optically active charge state at bias ``v``."""
    if q is None:
        out = np.ones_like(np.asarray(v, dtype=float))
    else:
        out = q.occupancy(v)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Stark response
# ---------------------------------------------------------------------------

@dataclass(frozen=True, kw_only=True)
class StarkResponse:
    """Bias response of one emitter.

    Below the threshold ``v_threshold`` the frequency and FWHM follow
    polynomials in (V - V_T); above it both are flat. Voltages more negative
    than ``v_min`` are outside the fitted range and are rejected.
    """

    name: str = ""
    nu0: float
    gamma0: float
    v_threshold: float
    v_min: float
    alpha1: float
    gamma1: float = 0.0
    alpha2: float = 0.0
    gamma2: float = 0.0
    quench: Optional[QuenchModel] = None

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise DomainError(f"{self.name}: gamma0 must be > 0")
        if not (self.v_min <= self.v_threshold <= 0):
            raise DomainError(f"{self.name}: need v_min <= v_threshold <= 0")

    def with_v_min(self, v_min):
        return replace(self, v_min=v_min)


def _check_range(r: StarkResponse, v):
    v = np.asarray(v, dtype=float)
    if np.any(v > 0) or np.any(v < r.v_min) or np.any(~np.isfinite(v)):
        raise DomainError(
            f"{r.name or 'emitter'}: bias outside valid range [{r.v_min}, 0] V")
    return v


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def stark_shift(r: StarkResponse, v: ArrayLike):
    """Frequency shift from nu0 in GHz (0 at or above threshold)."""
    v = _check_range(r, v)
    x = np.minimum(v - r.v_threshold, 0.0)
    return _scalar(r.alpha1 * x + r.alpha2 * x * x)


def stark_linewidth(r: StarkResponse, v: ArrayLike):
    """FWHM in GHz at bias ``v``."""
    v = _check_range(r, v)
    x = np.minimum(v - r.v_threshold, 0.0)
    g = r.gamma0 + r.gamma1 * x + r.gamma2 * x * x
    if np.any(g <= 0):
        raise ModelValidityError(f"{r.name or 'emitter'}: linewidth model gives FWHM <= 0")
    return _scalar(g)


def stark_frequency(r: StarkResponse, v: ArrayLike):
    return r.nu0 + stark_shift(r, v)


@dataclass(frozen=True)
class PeakProfile:
    center: float
    fwhm: float
    amplitude: float


def peak_profile(r: StarkResponse, v: float) -> PeakProfile:
    """Center, FWHM and amplitude relative to 0 V.

    The amplitude follows from keeping the peak area proportional to the
    neutral-state occupancy: a/a0 = (Gamma0 / Gamma(V)) * occupancy(V).
    """
    width = stark_linewidth(r, v)
    amp = (r.gamma0 / width) * neutral_fraction(r.quench, v)
    return PeakProfile(r.nu0 + stark_shift(r, v), width, amp)


def shift_range(r: StarkResponse, v_min: Optional[float] = None):
    """(min, max) shift over [v_min, 0]."""
    lo = r.v_min if v_min is None else max(v_min, r.v_min)
    xs = [0.0, min(lo - r.v_threshold, 0.0)]
    if r.alpha2 != 0:
        xv = -r.alpha1 / (2 * r.alpha2)
        if xs[1] < xv < 0:
            xs.append(xv)
    vals = [r.alpha1 * x + r.alpha2 * x * x for x in xs]
    return min(vals), max(vals)


def voltage_for_shift(r: StarkResponse, target_shift: float, v_min: Optional[float] = None) -> float:
    """Bias in [v_min, V_T] that produces ``target_shift`` (GHz, <= 0).

    When two roots are valid the one closest to threshold is returned.
    """
    if target_shift > 0:
        raise UnreachableError("only red shifts (target <= 0) are supported")
    lo = r.v_min if v_min is None else max(v_min, r.v_min)
    x_min = min(lo - r.v_threshold, 0.0)
    a, b, c = r.alpha2, r.alpha1, -float(target_shift)
    if target_shift == 0:
        return float(r.v_threshold)
    roots = []
    if a == 0:
        if b != 0:
            roots.append(-c / b)
    else:
        disc = b * b - 4 * a * c
        if disc >= 0:
            sq = math.sqrt(disc)
            q = -0.5 * (b + math.copysign(sq, b)) if b != 0 else -0.5 * sq
            if q != 0:
                roots += [q / a, c / q]
            else:
                roots.append(0.0)
    tol = 1e-12 * max(1.0, abs(x_min))
    ok = sorted((x for x in roots if x_min - tol <= x <= tol), key=abs)
    if not ok:
        lo_s, _ = shift_range(r, lo)
        raise UnreachableError(
            f"{r.name or 'emitter'}: shift {target_shift:.4g} GHz unreachable "
            f"(largest red shift {-lo_s:.4g} GHz at {lo} V)")
    x = min(max(ok[0], x_min), 0.0)
    # one Newton step to polish cancellation error
    d = b + 2 * a * x
    if d != 0:
        x_new = x - (a * x * x + b * x + c) / d
        if x_min <= x_new <= 0:
            x = x_new
    return float(r.v_threshold + x)


# ---------------------------------------------------------------------------
# Cavity
# ---------------------------------------------------------------------------

@dataclass(frozen=True, kw_only=True)
class CavityModel:
    """Single-mode cavity. ``purcell_max`` may be the ideal or effective value."""

    name: str = ""
    nu_cav: float
    q_factor: float
    purcell_max: float
    eta_qe: float = 0.234
    eta_dw: float = 0.23
    tau0: float = 0.885  # bulk lifetime, microseconds

    def __post_init__(self):
        if not self.q_factor > 0 or not self.nu_cav > 0:
            raise DomainError("cavity needs q_factor > 0 and nu_cav > 0")
        if not 0 <= self.eta_qe * self.eta_dw <= 1:
            raise DomainError("eta_qe * eta_dw must lie in [0, 1]")

    @property
    def linewidth(self):
        """FWHM nu_cav / Q in GHz."""
        return self.nu_cav / self.q_factor


def purcell_enhancement(c: CavityModel, detuning: ArrayLike):
    half = c.linewidth / 2
    d = np.asarray(detuning, dtype=float)
    return _scalar(c.purcell_max * half**2 / (d * d + half**2))


def lifetime_ratio(c: CavityModel, detuning: ArrayLike):
    """tau0 / tau at emitter-cavity detuning (GHz)."""
    p = purcell_enhancement(c, detuning)
    return _scalar(1.0 + c.eta_qe * c.eta_dw * (np.asarray(p) - 1.0))


def cavity_lifetime(c: CavityModel, detuning: ArrayLike):
    return _scalar(c.tau0 / np.asarray(lifetime_ratio(c, detuning)))


def ideal_purcell(wavelength_nm: float, refractive_index: float, q_factor: float,
                  mode_volume_um3: float) -> float:
    if min(wavelength_nm, refractive_index, q_factor, mode_volume_um3) <= 0:
        raise DomainError("all inputs must be positive")
    lam_um = wavelength_nm * 1e-3
    return 3.0 / (4.0 * math.pi**2) * (lam_um / refractive_index) ** 3 * q_factor / mode_volume_um3


# ---------------------------------------------------------------------------
# Ionization and Zeeman auxiliaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IonizationParams:
    binding_energy: float  # meV
    spatial_extent: float  # angstrom

    def __post_init__(self):
        if not (self.binding_energy > 0 and self.spatial_extent > 0):
            raise DomainError("binding energy and spatial extent must be > 0")


def critical_ionization_field(p: IonizationParams) -> float:
    """E_b / (e a*) in MV/m."""
    return (p.binding_energy * 1e-3) / (p.spatial_extent * 1e-10) / 1e6


def zeeman_splitting(g: ArrayLike, b_field: float):
    """g mu_B B / h in GHz."""
    return _scalar(np.asarray(g, dtype=float) * BOHR_MAGNETON_GHZ_PER_T * b_field)


def g_from_splitting(split: ArrayLike, b_field: float):
    if b_field == 0:
        raise DomainError("g-factor is undefined at zero field")
    return _scalar(np.asarray(split, dtype=float) / (BOHR_MAGNETON_GHZ_PER_T * b_field))


# ---------------------------------------------------------------------------
# Measured centres. Threshold = upper end of the fit range, v_min = lower end.
# Blank (AIC-rejected) quadratic terms are 0.
# ---------------------------------------------------------------------------

B1_QUENCH = SigmoidQuench(v_switch=-112.0, width=6.6)

_ROWS = [
    # name, nu0, gamma0, [v_min, V_T], alpha2, alpha1, gamma2, gamma1
    ("A1", 226105.8, 2.2, (-27, -14), 0.0, 0.62, 0.0, -0.29),
    ("A2", 226148.18, 1.75, (-14, -4), 0.0, 2.99, 0.0, -1.16),
    ("A3", 226168.37, 1.52, (-18, -4), 0.0, 2.85, 0.0, -1.01),
    ("B1", 226118.58, 4.81, (-110, -95), 0.0, 0.35, 0.0, -0.23),
    ("B2", 226113.13, 3.5, (-120, -90), -0.0046, -0.020, 0.0065, 0.15),
    ("B3", 226080.38, 4.4, (-120, -100), -0.0580, -0.207, 0.0, -0.339),
    ("C1", 226115.02, 3.19, (-130, -100), 0.0, 0.101, 0.0050, 0.05),
    ("C2", 226121.49, 2.60, (-130, -90), -0.00515, -0.044, 0.0045, 0.066),
    ("C3", 226145.61, 2.3, (-130, -110), -0.0232, -0.08, 0.0, -0.20),
    ("C4", 226127.07, 3.12, (-130, -100), 0.0, 0.162, 0.0, -0.048),
    ("C5", 226110.95, 5.6, (-105, 0), 0.00074, 0.181, -0.00191, -0.236),
]

# Largest measured shift and linewidth over each fit range (GHz).
MEASURED_EXTREMES = {
    "A1": (8.00, 5.86), "A2": (29.87, 14.54), "A3": (39.86, 17.89),
    "B1": (5.28, 9.77), "B2": (3.50, 5.74), "B3": (19.08, 11.12),
    "C1": (3.03, 6.19), "C2": (6.47, 8.12), "C3": (7.67, 7.74),
    "C4": (4.85, 5.17), "C5": (10.84, 9.14),
}

HOLE_G_FACTORS = {
    "A1": 3.26, "A2": 3.01, "A3": 3.26, "B1": 1.21, "B2": 3.29, "B3": 1.43,
    "C1": 2.42, "C2": 2.28, "C3": 1.7, "C4": 1.41, "C5": 0.95,
}

CATALOG = {
    name: StarkResponse(
        name=name, nu0=nu0, gamma0=g0, v_min=vr[0], v_threshold=vr[1],
        alpha1=a1, alpha2=a2, gamma1=g1, gamma2=g2,
        quench=B1_QUENCH if name == "B1" else None)
    for name, nu0, g0, vr, a2, a1, g2, g1 in _ROWS
}

# Device-A cavity as characterised through the lifetime scan.
CAVITY_A = CavityModel(name="A", nu_cav=226158.0, q_factor=4400.0, purcell_max=23.0)

T_CENTRE_HOLE = IonizationParams(binding_energy=35.0, spatial_extent=35.64)


# ---------------------------------------------------------------------------
# Dict (JSON) conversion. Keys carry units; unknown keys are rejected.
# ---------------------------------------------------------------------------

_QUENCH_KEYS = {
    "sigmoid": (SigmoidQuench, {"v_switch_v": "v_switch", "width_v": "width"}),
    "fermi_dirac": (FermiDiracQuench, {
        "level_offset_mev": "level_offset",
        "fermi_slope_mev_per_v": "fermi_slope",
        "temperature_k": "temperature"}),
    "field_ionization": (FieldIonizationQuench, {
        "capture_rate_per_s": "capture_rate",
        "ionization_prefactor_per_s": "ionization_prefactor",
        "field_scale_mv_per_m": "field_scale",
        "field_offset_mv_per_m": "field_offset",
        "field_slope_mv_per_m_per_v": "field_slope"}),
}

_STARK_KEYS = {
    "id": "name", "nu0_ghz": "nu0", "gamma0_ghz": "gamma0",
    "v_threshold_v": "v_threshold", "v_min_v": "v_min",
    "alpha1_ghz_per_v": "alpha1", "alpha2_ghz_per_v2": "alpha2",
    "gamma1_ghz_per_v": "gamma1", "gamma2_ghz_per_v2": "gamma2",
}

_CAVITY_KEYS = {
    "id": "name", "nu_cav_ghz": "nu_cav", "q_factor": "q_factor",
    "purcell_max": "purcell_max", "eta_qe": "eta_qe", "eta_dw": "eta_dw",
    "tau0_us": "tau0",
}


def _reject_unknown(d, allowed, what):
    extra = set(d) - set(allowed)
    if extra:
        raise DomainError(f"unknown {what} key(s): {sorted(extra)}")


def quench_to_dict(q: QuenchModel) -> dict:
    _, keys = _QUENCH_KEYS[q.kind]
    out = {"kind": q.kind}
    out.update({k: getattr(q, attr) for k, attr in keys.items()})
    return out


def quench_from_dict(d: dict) -> QuenchModel:
    kind = d.get("kind")
    if kind not in _QUENCH_KEYS:
        raise DomainError(f"unknown quench kind {kind!r}")
    cls, keys = _QUENCH_KEYS[kind]
    _reject_unknown(d, list(keys) + ["kind"], "quench")
    return cls(**{attr: float(d[k]) for k, attr in keys.items() if k in d})


def stark_to_dict(r: StarkResponse) -> dict:
    out = {k: getattr(r, attr) for k, attr in _STARK_KEYS.items()}
    if r.quench is not None:
        out["quench"] = quench_to_dict(r.quench)
    return out


def stark_from_dict(d: dict) -> StarkResponse:
    _reject_unknown(d, list(_STARK_KEYS) + ["quench"], "emitter")
    missing = {"nu0_ghz", "gamma0_ghz", "v_threshold_v", "alpha1_ghz_per_v"} - set(d)
    if missing:
        raise DomainError(f"emitter missing key(s): {sorted(missing)}")
    kw = {attr: d[k] for k, attr in _STARK_KEYS.items() if k in d}
    kw.setdefault("v_min", d["v_threshold_v"])
    for k, v in kw.items():
        if k != "name":
            kw[k] = float(v)
    if "quench" in d and d["quench"] is not None:
        kw["quench"] = quench_from_dict(d["quench"])
    return StarkResponse(**kw)


def cavity_to_dict(c: CavityModel) -> dict:
    return {k: getattr(c, attr) for k, attr in _CAVITY_KEYS.items()}


def cavity_from_dict(d: dict) -> CavityModel:
    _reject_unknown(d, _CAVITY_KEYS, "cavity")
    kw = {attr: d[k] for k, attr in _CAVITY_KEYS.items() if k in d}
    return CavityModel(**{k: (v if k == "name" else float(v)) for k, v in kw.items()})
