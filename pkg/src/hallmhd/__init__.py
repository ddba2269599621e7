"""
Pseudo-spectral periodic-box solver for the incompressible viscous-resistive
Hall-MHD system, with a diagnostics harness for exact energy budgets,
blow-up functionals, small-data bounds, and perturbation stability.
"""

from .fields import (
    GridSpec,
    ScalarField,
    VectorField,
    dealias,
    imaginary_residue,
    make_grid,
    random_bandlimited,
    single_mode,
    zero_field,
    zero_scalar,
)
from .calculus import (
    DERIV_KINDS,
    advect,
    cross,
    derive,
    hall_identity_residual,
    inner,
    l2_norm,
    leray_project,
    mollify,
    pointwise_dot,
    pointwise_scale,
)
from .norms import (
    EquivalenceResiduals,
    GNRatios,
    SeminormReport,
    equivalence_residuals,
    gn_ratios,
    h2_norm_sq,
    lp_norm,
    seminorms,
)
from .dynamics import (
    SCHEMES,
    SolverFailure,
    SolverParams,
    State,
    Tendency,
    cfl_report,
    perturbed,
    recover_pressure,
    rhs,
    rhs_regularized,
    run,
    step,
)
from .experiments import (
    BudgetSample,
    DiagnosticsCollector,
    DiagnosticsRecord,
    MollifierError,
    StabilityReport,
    blowup_integrand,
    blowup_monitor,
    budget_residuals,
    budget_sample,
    cancellation_checks,
    cancellation_checks_pair,
    energy_budget,
    gronwall_weight,
    mollifier_convergence,
    perturbation_direction,
    smalldata_probe,
    stability_sweep,
    temporal_order,
)
from .cli import (
    CheckpointError,
    CheckpointHeaderError,
    CheckpointSizeError,
    CheckpointVersionError,
    ConfigError,
    RunConfig,
    execute,
    initial_state,
    main,
    parse_config,
    read_checkpoint,
    verify,
    write_checkpoint,
)

__version__ = "1.0.0"

__all__ = [
    "GridSpec", "ScalarField", "VectorField", "dealias", "imaginary_residue",
    "make_grid", "random_bandlimited", "single_mode", "zero_field", "zero_scalar",
    "DERIV_KINDS", "advect", "cross", "derive", "hall_identity_residual",
    "inner", "l2_norm", "leray_project", "mollify", "pointwise_dot",
    "pointwise_scale",
    "EquivalenceResiduals", "GNRatios", "SeminormReport", "equivalence_residuals",
    "gn_ratios", "h2_norm_sq", "lp_norm", "seminorms",
    "SCHEMES", "SolverFailure", "SolverParams", "State", "Tendency",
    "cfl_report", "perturbed", "recover_pressure", "rhs", "rhs_regularized",
    "run", "step",
    "BudgetSample", "DiagnosticsCollector", "DiagnosticsRecord", "MollifierError",
    "StabilityReport", "blowup_integrand", "blowup_monitor", "budget_residuals",
    "budget_sample", "cancellation_checks", "cancellation_checks_pair",
    "energy_budget", "gronwall_weight", "mollifier_convergence",
    "perturbation_direction", "smalldata_probe", "stability_sweep",
    "temporal_order",
    "CheckpointError", "CheckpointHeaderError", "CheckpointSizeError",
    "CheckpointVersionError", "ConfigError", "RunConfig", "execute",
    "initial_state", "main", "parse_config", "read_checkpoint", "verify",
    "write_checkpoint",
]
