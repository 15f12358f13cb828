"""Numerical laboratory for elliptic problems on perforated box domains."""

__version__ = "0.1.0"

from . import errors
from .geometry import (
    EXTERIOR,
    FLUID,
    HOLE,
    OUTER_BOUNDARY,
    HoleShape,
    PerforatedDomain,
    axis_ellipse,
    ball,
    build_domain,
    classify_point,
    random_plan,
    square,
    uniform_plan,
)
from .discretization import (
    FaceField,
    GridMask,
    apply_operator,
    assemble_laplacian,
    assemble_rhs,
    box_mask,
    coarsened_gradient,
    dirichlet_rhs,
    discrete_gradient,
    face_lp_norm,
    lp_norm,
    node_gradient_magnitude,
    rasterize,
    read_snapshot,
    write_snapshot,
)
from .linsolve import (
    SolveReport,
    amg_preconditioner,
    auto_preconditioner,
    conjugate_gradient,
    smallest_eigenvalue,
)
from .correctors import (
    CHI_BRIDGE,
    CHI_HOLE,
    CHI_ONE,
    CHI_PROFILE,
    CorrectorField,
    HoleProfile,
    build_corrector,
    corrector_norm_report,
    exterior_profile_ball,
    exterior_profile_numeric,
    hole_flux,
    sphere_area,
)

from .intermediate import (
    PotentialField,
    approximation_error,
    build_potential,
    solve_schrodinger,
)
from .harness import (
    SCHEMAS,
    ExperimentConfig,
    Report,
    emit_plot,
    load_config,
    parse_config,
    run_experiment,
)
from .constants_lab import (
    PeriodicCell,
    RateLaw,
    ScaleParams,
    ScalingFit,
    cell_average,
    cell_gradient_norm,
    estimate_constant,
    fit_exponent,
    periodic_cell,
    phi_p,
    scale_params,
    sigma_scale,
    witness_psi,
    witness_ratio,
)

__all__ = [
    "errors",
    "FLUID",
    "HOLE",
    "EXTERIOR",
    "OUTER_BOUNDARY",
    "HoleShape",
    "PerforatedDomain",
    "ball",
    "axis_ellipse",
    "square",
    "uniform_plan",
    "random_plan",
    "build_domain",
    "classify_point",
    "FaceField",
    "GridMask",
    "box_mask",
    "rasterize",
    "discrete_gradient",
    "node_gradient_magnitude",
    "assemble_laplacian",
    "apply_operator",
    "assemble_rhs",
    "dirichlet_rhs",
    "lp_norm",
    "face_lp_norm",
    "coarsened_gradient",
    "write_snapshot",
    "read_snapshot",
    "SolveReport",
    "conjugate_gradient",
    "amg_preconditioner",
    "auto_preconditioner",
    "smallest_eigenvalue",
    "HoleProfile",
    "CorrectorField",
    "exterior_profile_ball",
    "exterior_profile_numeric",
    "build_corrector",
    "corrector_norm_report",
    "hole_flux",
    "sphere_area",
    "CHI_ONE",
    "CHI_PROFILE",
    "CHI_HOLE",
    "CHI_BRIDGE",
    "PotentialField",
    "build_potential",
    "solve_schrodinger",
    "approximation_error",
    "ScaleParams",
    "RateLaw",
    "ScalingFit",
    "PeriodicCell",
    "sigma_scale",
    "scale_params",
    "phi_p",
    "periodic_cell",
    "witness_psi",
    "cell_average",
    "cell_gradient_norm",
    "witness_ratio",
    "estimate_constant",
    "fit_exponent",
    "ExperimentConfig",
    "Report",
    "SCHEMAS",
    "emit_plot",
    "load_config",
    "parse_config",
    "run_experiment",
]
