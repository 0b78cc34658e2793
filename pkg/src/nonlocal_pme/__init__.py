"""Monotone finite-difference solvers for nonlocal porous-medium-type equations.

``∂_t u - (L^σ + L^μ)[φ(u)] = 0`` is discretized in space by lattice stencils
(second differences along the columns of σ, measure-cell masses of μ) and in
time by forward Euler under a monotonicity restriction on the step.
"""

from .barenblatt import barenblatt
from .discrete_operator import (DiscreteOperator, GridFunction, StencilWeights, apply,
                                assemble_local, assemble_nonlocal, consistency_error,
                                grid_normalize)
from .errors import (CFLError, ConfigError, DomainError, EvolutionAbort, GridCompatibilityError,
                     NonlocalPMEError, NotLevyMeasureError, QuadratureError, SingularCellError)
from .evolution import EvolutionConfig, RunReport, cfl_dt, estimate_suite, evolve, step_explicit
from .levy_measure import (DiracSum, FractionalLaplacian, LevyMeasure, RadialDensity, Truncated,
                           cell_mass, fractional_constant, levy_functional, symbol, tempered_stable)
from .nonlinearity import Linear, MonotoneTable, Power, Stefan, lipschitz_on, mollify
from .resolvent import iteration_bound, solve_resolvent, verify_selfadjoint

__version__ = "0.1.0"

__all__ = [
    "barenblatt",
    "DiscreteOperator",
    "GridFunction",
    "StencilWeights",
    "apply",
    "assemble_local",
    "assemble_nonlocal",
    "consistency_error",
    "grid_normalize",
    "CFLError",
    "ConfigError",
    "DomainError",
    "EvolutionAbort",
    "GridCompatibilityError",
    "NonlocalPMEError",
    "NotLevyMeasureError",
    "QuadratureError",
    "SingularCellError",
    "EvolutionConfig",
    "RunReport",
    "cfl_dt",
    "estimate_suite",
    "evolve",
    "step_explicit",
    "DiracSum",
    "FractionalLaplacian",
    "LevyMeasure",
    "RadialDensity",
    "Truncated",
    "cell_mass",
    "fractional_constant",
    "levy_functional",
    "symbol",
    "tempered_stable",
    "Linear",
    "MonotoneTable",
    "Power",
    "Stefan",
    "lipschitz_on",
    "mollify",
    "iteration_bound",
    "solve_resolvent",
    "verify_selfadjoint",
]
