"""Large-system analysis and Monte Carlo simulation of RVQ signature feedback in DS-CDMA."""

from .errors import (BudgetExceeded, ConfigError, NoConvergence, OutOfDomain, RvqError, Singular,
                     Unreachable)
from .large_system import (AsymptoticResult, ChannelKind, ChannelModel, Ensemble, Regime,
                           ScenarioParams, beta_max, fold_fading, mf_closed_form_equal_power,
                           mf_orthogonal, mf_sinr, mmse_equal_power, mmse_orthogonal, phi_mmse,
                           psi_mf, random_signature_mmse_baseline, solve_mf_interference,
                           solve_mmse_sinr)
from .runner import SweepSpec, emit_spec, parse_config, required_feedback, run_sweep
from .simulator import Codebook, Receiver, SimConfig, TrialEstimate, run_trials
from .transforms import PowerProfile

__version__ = "0.1.0"
