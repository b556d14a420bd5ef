"""Finite-frequency model order reduction by balanced truncation of PFD-mapped systems."""
from .errors import *  # noqa: F401,F403
from .model import (FrequencyRange, SigmaSweep, StateSpaceModel, eval_transfer, example_model,
                    freqresp, load_model, save_model, sigma_max_at)
from .linalg import solve_lyapunov_continuous, solve_lyapunov_discrete
from .mapping import PfdMapKind, invert_map, pfd_map, rho_star_hf, rho_star_mf
from .bt import balance, hankel_singular_values, lyabt, spa, truncate
from .pfdbt import min_order_for_tolerance, pfdbt_hf, pfdbt_lf, sweep_rho
from .analysis import band_error, band_gain_bound, hinf_norm, sigma_sweep

__version__ = "0.1.0"
