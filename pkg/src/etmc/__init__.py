"""Certification and simulation toolkit for event-triggered transmission
over an action-dependent Markov packet-drop channel."""

from .certify import (CertificationReport, c0_of_X, c1_constant,
                      check_feasible_D, compute_B0, compute_Bstar,
                      q_vector, q_x_vector, run_certification,
                      tf_bound_asymptotic, tf_bound_state)
from .channel import (ChannelModel, belief_update, sample_reception,
                      step_state, validate)
from .config import RunConfig, load_config
from .errors import (BracketNotFoundError, ConfigError, DivergentSeriesError,
                     EtmcError, FeasibilityError, InconsistentReceptionError,
                     NumericalFailureError)
from .lookahead import (SensorInfo, cutoff_mu, cutoff_nu, lookahead_G,
                        omega, omega_tilde, open_loop_H, perf_eval_J,
                        series_f, series_f_tilde, series_g, series_g_tilde)
from .plant import (LoopState, PlantParams, advance, apply_reception,
                    initial_state, make_noise_sampler, performance_h)
from .policy import PolicyState, decide, nominal_decide, on_reception
from .sim import (EnsembleStats, TrialConfig, TrialRecord, empirical_tf_state,
                  envelope, run_ensemble, run_trial)

__version__ = "0.1.0"

__all__ = [
    "BracketNotFoundError",
    "CertificationReport",
    "ChannelModel",
    "ConfigError",
    "DivergentSeriesError",
    "EnsembleStats",
    "EtmcError",
    "FeasibilityError",
    "InconsistentReceptionError",
    "LoopState",
    "NumericalFailureError",
    "PlantParams",
    "PolicyState",
    "RunConfig",
    "SensorInfo",
    "TrialConfig",
    "TrialRecord",
    "advance",
    "apply_reception",
    "belief_update",
    "c0_of_X",
    "c1_constant",
    "check_feasible_D",
    "compute_B0",
    "compute_Bstar",
    "cutoff_mu",
    "cutoff_nu",
    "decide",
    "empirical_tf_state",
    "envelope",
    "initial_state",
    "load_config",
    "lookahead_G",
    "make_noise_sampler",
    "nominal_decide",
    "omega",
    "omega_tilde",
    "on_reception",
    "open_loop_H",
    "perf_eval_J",
    "performance_h",
    "q_vector",
    "q_x_vector",
    "run_certification",
    "run_ensemble",
    "run_trial",
    "sample_reception",
    "series_f",
    "series_f_tilde",
    "series_g",
    "series_g_tilde",
    "step_state",
    "tf_bound_asymptotic",
    "tf_bound_state",
    "validate",
]
