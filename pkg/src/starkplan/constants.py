"""Physical constants (CODATA 2018, exact or 10 significant digits)."""

ELEMENTARY_CHARGE = 1.602176634e-19  # C
BOLTZMANN = 1.380649e-23  # J/K
EPSILON_0 = 8.854187813e-12  # F/m
GAS_CONSTANT = 8.314462618  # J/(mol K)
BOHR_MAGNETON_GHZ_PER_T = 13.99624494  # mu_B / h in GHz/T

LN2 = 0.6931471805599453
FWHM_PER_SIGMA = 2.3548200450309493  # 2 sqrt(2 ln 2)
