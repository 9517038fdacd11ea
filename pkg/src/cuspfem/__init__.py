"""
1-D finite elements for singularly perturbed interior-turning-point
problems: layer-adapted piecewise-equidistant meshes, higher-order Galerkin
and streamline-diffusion discretizations, layer-aware error norms, and a
convergence-study harness with a CLI.
"""

from .assembly import (
    AssemblyError,
    DiscreteFunction,
    LinearSystem,
    SolverError,
    StabilizationProfile,
    apply_system,
    assemble_galerkin,
    assemble_sdfem,
    compute_deltas,
    dump_system,
    global_nodes,
    solve_banded,
)
from .basis import (
    QuadratureRule,
    ReferenceBasis,
    estimate_c_inv,
    eval_basis,
    gauss_rule,
    reference_nodes,
)
from .experiments import (
    ConvergenceRow,
    SweepConfig,
    Table,
    convergence_rate,
    convergence_table,
    emit,
    run_convergence,
    run_ratio_table,
    sample_solution,
)
from .mesh import (
    Mesh,
    MeshConstructionError,
    MeshDiagnostics,
    MeshParams,
    build_mesh,
    compute_big_k,
    compute_sigma,
    mesh_header,
    save_mesh,
    validate_mesh,
)
from .norms import (
    ERROR_REPORT_COLUMNS,
    ErrorReport,
    QuadSpec,
    error_norms,
    error_report_csv_row,
    interpolate,
    sd_distance,
)
from .problem import (
    GammaEstimate,
    Problem,
    gamma_estimate,
    layer_bound_profile,
    make_problem,
    make_test_problem,
    problem_names,
    register_problem,
)

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "ConvergenceRow",
    "DiscreteFunction",
    "ErrorReport",
    "GammaEstimate",
    "LinearSystem",
    "Mesh",
    "MeshConstructionError",
    "MeshDiagnostics",
    "MeshParams",
    "Problem",
    "QuadSpec",
    "QuadratureRule",
    "ReferenceBasis",
    "SolverError",
    "StabilizationProfile",
    "SweepConfig",
    "Table",
    "apply_system",
    "assemble_galerkin",
    "assemble_sdfem",
    "build_mesh",
    "compute_big_k",
    "compute_deltas",
    "compute_sigma",
    "convergence_rate",
    "convergence_table",
    "dump_system",
    "emit",
    "error_norms",
    "ERROR_REPORT_COLUMNS",
    "error_report_csv_row",
    "estimate_c_inv",
    "eval_basis",
    "gamma_estimate",
    "gauss_rule",
    "global_nodes",
    "interpolate",
    "layer_bound_profile",
    "make_problem",
    "make_test_problem",
    "mesh_header",
    "problem_names",
    "reference_nodes",
    "register_problem",
    "run_convergence",
    "run_ratio_table",
    "sample_solution",
    "save_mesh",
    "solve_banded",
    "validate_mesh",
]
