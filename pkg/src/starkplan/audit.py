"""Physics sanity checks: charge-trap spectral diffusion and device Joule heating.

The heating chain is: Debye heat capacity -> Casimir-limited conductivity ->
solid thermal resistance, and in parallel free-molecular plus continuum gas
cooling of a half-cylinder waveguide. SI units internally; geometry inputs
are in micrometres (r_out in millimetres) as noted on the fields.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

from .constants import BOLTZMANN as K_B
from .constants import ELEMENTARY_CHARGE as E_CHARGE
from .constants import EPSILON_0 as EPS0
from .constants import GAS_CONSTANT as R_GAS
from .constants import LN2
from .errors import DomainError

UM = 1e-6


@dataclass(frozen=True)
class ThermalGeometry:
    cross_section: float = 0.09      # um^2
    length: float = 30.0             # um
    surface_area: float = 25.6       # um^2
    r_in: float = 0.15               # um
    r_out: float = 42.5              # mm
    sink_temperature: float = 2.5    # K
    gas_pressure: float = 1800.0     # Pa
    dissipated_power: float = 4.0    # nW
    d_eff_factor: float = 1.115

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise DomainError(f"{k} must be > 0")
        if self.r_out * 1e-3 <= self.r_in * UM:
            raise DomainError("r_out must exceed r_in")

    @property
    def characteristic_dim(self):
        """sqrt(cross_section), um."""
        return math.sqrt(self.cross_section)


@dataclass(frozen=True)
class MaterialConstants:
    debye_temperature: float = 645.0         # K
    atomic_density: float = 5e28             # m^-3
    sound_velocity: float = 6400.0           # m/s
    gas_kinetic_diameter: float = 2.55e-10   # m
    gas_molar_mass: float = 4.0026e-3        # kg/mol
    accommodation: float = 0.5
    heat_capacity_ratio: float = 5.0 / 3.0
    viscosity_ref: tuple = (0.9825e-6, 3.5)  # (Pa s, K)
    viscosity_exponent: float = 0.647

    def __post_init__(self):
        if not 0 < self.accommodation <= 1:
            raise DomainError("accommodation must lie in (0, 1]")
        if self.heat_capacity_ratio <= 1:
            raise DomainError("heat capacity ratio must exceed 1")


# ---------------------------------------------------------------------------
# Spectral diffusion from a charge trap
# ---------------------------------------------------------------------------

def trap_field(charge: float, r_nm: float, eps_r: float = 11.7) -> float:
    """Coulomb field (V/m) of ``charge`` elementary charges at ``r_nm``."""
    if not r_nm > 0:
        raise DomainError("distance must be > 0")
    r = r_nm * 1e-9
    return charge * E_CHARGE / (4 * math.pi * EPS0 * eps_r * r * r)


def sd_linewidth_from_trap(gamma1: float, charge: float = 1.0, r_nm: float = 110.0,
                           eps_r: float = 11.7, dmu: float = 7519.0) -> float:
    """FWHM (GHz) of a Lorentzian of width ``gamma1`` wandering over a Gaussian.

    The Gaussian rms excursion is F_rms * dmu with dmu in Hz m/V.
    """
    f_rms = abs(trap_field(charge, r_nm, eps_r))
    sd = f_rms * dmu * 1e-9
    h = 0.5 * gamma1
    return h + math.sqrt(h * h + 8 * LN2 * sd * sd)


# ---------------------------------------------------------------------------
# Solid conduction
# ---------------------------------------------------------------------------

def debye_heat_capacity(t: float, m: MaterialConstants = MaterialConstants()) -> float:
    """Low-temperature Debye volumetric heat capacity, J/(m^3 K)."""
    if t >= m.debye_temperature / 10:
        warnings.warn("T^3 Debye law used above T_D/10", RuntimeWarning, stacklevel=2)
    return 12 * math.pi**4 / 5 * m.atomic_density * K_B * (t / m.debye_temperature) ** 3


def casimir_conductivity(cv: float, sound_velocity: float, d_eff_m: float) -> float:
    """Boundary-scattering limited conductivity, W/(m K)."""
    return cv * sound_velocity * d_eff_m / 3


def solid_thermal_resistance(g: ThermalGeometry, kappa: float) -> float:
    """Wire heated uniformly, sunk at both ends: effective length L/2."""
    return (0.5 * g.length * UM) / (kappa * g.cross_section * UM**2)


# ---------------------------------------------------------------------------
# Gas cooling
# ---------------------------------------------------------------------------

def gas_mean_free_path(t: float, p: float, d: float) -> float:
    """Ideal-gas mean free path in nm."""
    if not p > 0:
        raise DomainError("pressure must be > 0")
    return K_B * t / (math.sqrt(2) * math.pi * d * d * p) * 1e9


def knudsen(mfp_nm: float, length_um: float) -> float:
    return mfp_nm * 1e-3 / length_um


def knudsen_regime(kn: float) -> str:
    if kn < 0.01:
        return "continuum"
    if kn <= 10:
        return "transition"
    return "free-molecular"


def gas_viscosity(t: float, m: MaterialConstants) -> float:
    eta_ref, t_ref = m.viscosity_ref
    return eta_ref * (t / t_ref) ** m.viscosity_exponent


def gas_conductivity(t: float, m: MaterialConstants) -> float:
    return 15 * R_GAS * gas_viscosity(t, m) / (4 * m.gas_molar_mass)


@dataclass(frozen=True)
class GasCooling:
    h_fm: float
    h_cont: float
    h_eff: float
    r_th_gas: float
    kappa_gas: float
    viscosity: float


def gas_cooling(t: float, p: float, g: ThermalGeometry, m: MaterialConstants) -> GasCooling:
    gam = m.heat_capacity_ratio
    h_fm = (m.accommodation * (gam + 1) / (gam - 1)
            * math.sqrt(R_GAS / (8 * math.pi * m.gas_molar_mass * t)) * p)
    eta = gas_viscosity(t, m)
    k_gas = gas_conductivity(t, m)
    r_in = g.r_in * UM
    r_out = g.r_out * 1e-3
    h_cont = 0.5 * k_gas / (r_in * math.log(r_out / r_in))
    h_eff = 1.0 / (1.0 / h_fm + 1.0 / h_cont)
    r_gas = 1.0 / (h_eff * g.surface_area * UM**2)
    return GasCooling(h_fm, h_cont, h_eff, r_gas, k_gas, eta)


def temperature_rise(power: float, r_solid: float, r_gas: float):
    """(solid-only, gas-only, combined) temperature rise for ``power`` in W."""
    if power < 0:
        raise DomainError("power must be >= 0")
    r_par = 1.0 / (1.0 / r_solid + 1.0 / r_gas)
    return power * r_solid, power * r_gas, power * r_par


# ---------------------------------------------------------------------------
# Bulk thermal shift
# ---------------------------------------------------------------------------

def thermal_shift(t: float, coeff_mhz: float = -0.866, base_t: float = 1.6) -> float:
    """Shift in GHz from base_t to t under nu = A T^4."""
    return coeff_mhz * (t**4 - base_t**4) * 1e-3


def thermal_shift_temperature(target_shift_ghz: float, coeff_mhz: float = -0.866,
                              base_t: float = 1.6) -> float:
    """Absolute temperature (K) at which the T^4 law gives ``target_shift_ghz``."""
    if coeff_mhz == 0:
        raise DomainError("coefficient must be non-zero")
    q = target_shift_ghz * 1e3 / coeff_mhz
    if q < 0:
        raise DomainError("shift and coefficient have inconsistent signs")
    return (base_t**4 + q) ** 0.25


# ---------------------------------------------------------------------------
# End-to-end audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Checkpoint:
    name: str
    symbol: str
    formula: str
    value: float
    reference: float
    unit: str

    @property
    def rel_dev(self):
        return abs(self.value - self.reference) / abs(self.reference)

    def ok(self, tol=0.05):
        return self.rel_dev <= tol


# published intermediates of the heating estimate
REFERENCE_VALUES = {
    "heat_capacity": 9.4,
    "kappa_si": 0.0067,
    "r_solid": 2.49e10,
    "dt_solid": 99.0,
    "mean_free_path": 66.0,
    "knudsen": 0.22,
    "h_fm": 20699.0,
    "kappa_gas": 0.0061,
    "h_cont": 1619.0,
    "h_eff": 1501.0,
    "dt_combined": 0.1,
}
# reported to coarser precision; checked but not part of the main list
SECONDARY_REFERENCES = {"r_gas": 2.6e7, "dt_gas": 0.1, "viscosity": 0.78e-6}


@dataclass(frozen=True)
class ThermalAudit:
    geometry: ThermalGeometry
    constants: MaterialConstants
    checkpoints: tuple
    regime: str

    def by_name(self):
        return {c.name: c for c in self.checkpoints}

    def verify(self, tol=0.05):
        """Names of main checkpoints outside ``tol`` (empty when all pass)."""
        return [c.name for c in self.checkpoints if c.name in REFERENCE_VALUES and not c.ok(tol)]

    def to_dict(self):
        return {
            "geometry": asdict(self.geometry),
            "constants": asdict(self.constants),
            "regime": self.regime,
            "checkpoints": [{**asdict(c), "rel_dev": c.rel_dev} for c in self.checkpoints],
        }


def thermal_audit(g: ThermalGeometry = ThermalGeometry(),
                  m: MaterialConstants = MaterialConstants()) -> ThermalAudit:
    t = g.sink_temperature
    cv = debye_heat_capacity(t, m)
    d_eff = g.d_eff_factor * g.characteristic_dim * UM
    kappa = casimir_conductivity(cv, m.sound_velocity, d_eff)
    r_solid = solid_thermal_resistance(g, kappa)
    mfp = gas_mean_free_path(t, g.gas_pressure, m.gas_kinetic_diameter)
    kn = knudsen(mfp, g.characteristic_dim)
    gc = gas_cooling(t, g.gas_pressure, g, m)
    dt_s, dt_g, dt_c = temperature_rise(g.dissipated_power * 1e-9, r_solid, gc.r_th_gas)
    ref = {**REFERENCE_VALUES, **SECONDARY_REFERENCES}
    rows = [
        ("heat_capacity", "Cv", "(12 pi^4/5) N k (T/T_D)^3", cv, "J/(m^3 K)"),
        ("kappa_si", "kappa_Si", "Cv v_s D_eff / 3", kappa, "W/(m K)"),
        ("r_solid", "R_solid", "(L/2) / (kappa sigma)", r_solid, "K/W"),
        ("dt_solid", "dT_solid", "P R_solid", dt_s, "K"),
        ("mean_free_path", "Lambda", "k T / (sqrt2 pi d^2 p)", mfp, "nm"),
        ("knudsen", "Kn", "Lambda / L_c", kn, ""),
        ("h_fm", "h_fm", "alpha (g+1)/(g-1) sqrt(R/(8 pi M T)) p", gc.h_fm, "W/(m^2 K)"),
        ("viscosity", "eta", "eta_ref (T/T_ref)^0.647", gc.viscosity, "Pa s"),
        ("kappa_gas", "kappa_gas", "15 R eta / (4 M)", gc.kappa_gas, "W/(m K)"),
        ("h_cont", "h_cont", "kappa_gas / (2 r_in ln(r_out/r_in))", gc.h_cont, "W/(m^2 K)"),
        ("h_eff", "h_eff", "1/(1/h_fm + 1/h_cont)", gc.h_eff, "W/(m^2 K)"),
        ("r_gas", "R_gas", "1 / (h_eff A)", gc.r_th_gas, "K/W"),
        ("dt_gas", "dT_gas", "P R_gas", dt_g, "K"),
        ("dt_combined", "dT", "P (1/R_solid + 1/R_gas)^-1", dt_c, "K"),
    ]
    cps = tuple(Checkpoint(n, s, f, float(v), ref[n], u) for n, s, f, v, u in rows)
    return ThermalAudit(g, m, cps, knudsen_regime(kn))
