"""Numerical laboratory for carre du champ (Malliavin) matrices of Poisson
functionals and jump-SDE solutions, with density-existence diagnostics.

The computation pattern throughout: the carre du champ matrix of a
functional of a jump configuration is a sum over the realized jumps of
mark-derivative outer products weighted by the per-mark quadratic form,
and every engine route is validated against an independent per-jump
finite-difference oracle.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DomainError,
    HypothesisViolationError,
    InputError,
    LentParticleError,
    NumericError,
    ParseError,
    SamplerError,
    SingularJumpError,
    SpecViolationError,
    StiffnessError,
)
from .levy import (
    CadlagPath,
    JumpConfiguration,
    LevyMeasureSpec,
    build_path,
    configurations_equal,
    sample_configuration,
    stochastic_integral,
)
from .families import (
    compound_poisson_uniform,
    truncated_power,
    truncated_power_axes_2d,
    unit_ratio_spec,
)
from .bottom import BottomDiagnostics, gamma_of, gamma_weight, validate_spec
from .functionals import (
    FunctionalDef,
    GammaMatrix,
    add_particle,
    compose,
    degenerate_sde_z,
    doleans_pair,
    lent_particle_gamma,
    linear_functional,
    oracle_gamma,
    remove_particle,
    running_sup,
    stochastic_integral_phi,
    terminal_value,
)
from .sde import (
    FlowState,
    SdeModel,
    Trajectory,
    ZPath,
    degenerate_3d_model,
    flow_derivative,
    inverse_flow,
    linear_multid_model,
    linear_scalar_model,
    sde_gamma,
    sde_gamma_oracle,
    solve_sde,
    validate_model,
)
from .diagnostics import (
    AtomReport,
    KdeSummary,
    NondegeneracyReport,
    atom_test,
    kde_summary,
    nondegeneracy_stats,
    span_dimension,
)
from .config import ExperimentConfig, parse_config
from .runner import run_experiment

__all__ = [
    "__version__",
    # errors
    "LentParticleError",
    "ConfigurationError",
    "SamplerError",
    "SpecViolationError",
    "DomainError",
    "NumericError",
    "SingularJumpError",
    "StiffnessError",
    "HypothesisViolationError",
    "InputError",
    "ParseError",
    # jump measures and paths
    "LevyMeasureSpec",
    "JumpConfiguration",
    "CadlagPath",
    "sample_configuration",
    "build_path",
    "stochastic_integral",
    "configurations_equal",
    "compound_poisson_uniform",
    "truncated_power",
    "truncated_power_axes_2d",
    "unit_ratio_spec",
    # bottom quadratic form
    "gamma_weight",
    "gamma_of",
    "validate_spec",
    "BottomDiagnostics",
    # functional calculus
    "FunctionalDef",
    "GammaMatrix",
    "add_particle",
    "remove_particle",
    "lent_particle_gamma",
    "oracle_gamma",
    "terminal_value",
    "stochastic_integral_phi",
    "doleans_pair",
    "running_sup",
    "degenerate_sde_z",
    "compose",
    "linear_functional",
    # jump SDEs
    "SdeModel",
    "ZPath",
    "Trajectory",
    "FlowState",
    "solve_sde",
    "flow_derivative",
    "inverse_flow",
    "sde_gamma",
    "sde_gamma_oracle",
    "validate_model",
    "linear_scalar_model",
    "linear_multid_model",
    "degenerate_3d_model",
    # diagnostics
    "nondegeneracy_stats",
    "span_dimension",
    "atom_test",
    "kde_summary",
    "NondegeneracyReport",
    "AtomReport",
    "KdeSummary",
    # experiments
    "ExperimentConfig",
    "parse_config",
    "run_experiment",
]
