"""Decay rates of a level under repeated or continuous measurement."""

__version__ = "0.1.0"

from .broadening import ContinuousLorentzian, PeriodicLorentzian, ProjectiveSinc, filter_from_monitor
from .dynamics import lorentzian_amplitude_oracle, measured_decay_law, solve_survival_amplitude
from .errors import (Divergent, FilterMassWarning, InvalidParameter, OutOfBand, OutOfRegime,
                     QuadratureFailure, RegimeWarning, StepTooCoarse, Unsupported, ZenoError,
                     ZeroDensity)
from .polarization import CavityConfig, NoiseModel, band_overlap_rate, simulate_polarization
from .rate_engine import overlap_rate, rate_curve
from .spectra import golden_rule_rate, Flat, Hydrogenic, Lorentzian, PowerLawCutoff, Tabulated, TailCutoff
