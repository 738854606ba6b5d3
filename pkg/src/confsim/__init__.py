"""Radial phase-transition simulator with configurational-force coupling."""

from .grid_field import Grid, ScalarField, Trajectory, d1, d2, norm_l2, norm_linf
from .material import (
    AssumptionViolated,
    ElasticityTensor,
    MaterialParams,
    MisfitStrain,
    TensorSpec,
    check_tensor_assumptions,
    double_well,
    free_energy,
    scalar_coefficients,
)
from .elasticity import GreenKernel, elastic_rhs, homogeneous_solutions, solve_fd, solve_green
from .order_parameter import (
    MollifierState,
    RegularizationParams,
    StepRejected,
    driving_force,
    mollify,
    semi_implicit_step,
    smoothed_abs,
    smoothed_abs_primitive,
)
from .simulator import (
    BodyForce,
    InitialData,
    RunResult,
    Simulation,
    SimulationConfig,
    load_run,
    load_snapshot,
    run,
    save_snapshot,
    write_run,
)
from .diagnostics import (
    DiagnosticsReport,
    apriori_norms,
    build_report,
    dual_norm_estimate,
    energy_monitor,
    max_principle_check,
    weak_residual,
)
from .studies import StudyConfig, mms_convergence, run_study, weak_residual_refinement
from .reduction3d import RadialLift, lift_fields, residual_elasticity_3d, residual_order_3d
from .config import ParseError, ValidationError, default_config, parse_config, parse_config_text

__version__ = "0.1.0"
