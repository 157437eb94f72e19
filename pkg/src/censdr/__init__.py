"""Efficient semiparametric estimation of multi-index survival models from right-censored data."""

__version__ = "0.1.0"

from ._backend import get_backend, set_backend, use_backend  # noqa: E402
from .hazard import cum_hazard, hazard, hazard_grad, hazard_grid  # noqa: E402
from .inference import (confidence_intervals, efficient_info, fit_info,  # noqa: E402
                        projection_distance, vic_select)
from .kernels import Bandwidths, KernelSpec, default_bandwidths  # noqa: E402
from .montecarlo import run_monte_carlo  # noqa: E402
from .score import efficient_score, general_score  # noqa: E402
from .simgen import StudySpec, gen_study, study_spec  # noqa: E402
from .smoothers import IndexParam, cond_exp_xy, cond_exp_y  # noqa: E402
from .solver import FitConfig, FitResult, fit  # noqa: E402
from .survdata import SurvivalDataset, load_csv, standardize  # noqa: E402

__all__ = [
    "Bandwidths", "FitConfig", "FitResult", "IndexParam", "KernelSpec", "StudySpec", "SurvivalDataset",
    "cond_exp_xy", "cond_exp_y", "confidence_intervals", "cum_hazard", "default_bandwidths",
    "efficient_info", "efficient_score", "fit", "fit_info", "gen_study", "general_score", "get_backend",
    "hazard", "hazard_grad", "hazard_grid", "load_csv", "projection_distance", "run_monte_carlo",
    "set_backend", "standardize", "study_spec", "use_backend", "vic_select",
]
