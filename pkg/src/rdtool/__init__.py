"""Steady states, bifurcations and dynamics of reaction-diffusion equations
with a nonlocal distributed delay on an interval with Dirichlet boundaries."""

from .bifurcation import BifSummary, apriori_bounds, bif_summary, d_star, dstar_curve, mu1, nonexistence_threshold
from .errors import *  # noqa: F401,F403
from .integrate import SimConfig, Trajectory, simulate, simulate_nonlocal, step_imex
from .kernels import HistoryFn, KernelSpec, build_green_expansion, constant_history, sine_history
from .models import MODELS, ModelSpec, make_model
from .spectral import Grid1D, build_laplacian, principal_eigenpair, solve_shifted
from .steady import (
    FieldState,
    continue_amplitude,
    continue_branch,
    linearized_spectrum,
    newton_solve,
    uniqueness_probe,
)

__version__ = "0.1.0"
