"""Kinetic two-population stock market: Monte Carlo Boltzmann simulator,
Fokker-Planck solvers, analytic oracles, and tail statistics."""

from .model import (
    AgentEnsemble,
    ModelParams,
    ParameterError,
    PriceEnsemble,
    ValueFunctionSpec,
    diffusion,
    herding,
    interact_opinions,
    mean_price,
    mean_propensity,
    second_moment,
    update_price,
    value_function,
)
from .montecarlo import McConfig, Trajectory, estimate_trend, run
from .fokker_planck import (
    DensityGrid,
    FpConfig,
    FpRunReport,
    analytic_gamma_steady,
    analytic_lognormal,
    fp_opinion_step,
    fp_price_step,
    integrate_E,
    pareto_mu,
    solve_coupled,
    solve_steady,
)
from .analysis import (
    EquilibriumReport,
    TailFit,
    classify_equilibrium,
    hill_estimator,
    l1_distance,
    lognormality_check,
)
from .config import ExperimentConfig, load_config, save_config

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
