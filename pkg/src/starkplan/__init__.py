"""Stark-tuning models, fits and pair planning for solid-state quantum emitters."""
from .emitters import (CATALOG, CavityModel, StarkResponse, lifetime_ratio, neutral_fraction,
                       peak_profile, purcell_enhancement, stark_frequency, stark_linewidth,
                       stark_shift, voltage_for_shift)
from .errors import DomainError, FitError, ModelValidityError, ParseError, UnreachableError
from .fitting import FitResult, aic_select, fit_shape, fit_stark_series, nls_fit
from .interference import EmitterPairConfig, hom_visibility, p_exc, tuning_trajectory
from .planner import InhomogeneousPdf, PlanConstraints, plan_pairs, tunable_fraction

__version__ = "0.1.0"
