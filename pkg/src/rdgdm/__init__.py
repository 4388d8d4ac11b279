"""Gradient-discretisation solvers for coupled anisotropic reaction-diffusion
systems on polygonal meshes, with discretisation-quality indicators and a
manufactured-solution convergence harness."""

__version__ = "0.1.0"

from .gdcore import (
    DiscreteField,
    FieldProbe,
    GdDiagnostics,
    GradientDiscretisation,
    ScalarProbe,
    compute_diagnostics,
    compute_sd,
    compute_wd,
    estimate_cd,
    interpolate_initial,
    l2_inner,
    project_pd,
)
from .harness import ConvergenceReport, emit_report, error_norms, run_convergence
from .hmm import build_hmm, build_p1, build_scheme
from .mesh import (
    Mesh,
    generate_family,
    load_mesh,
    mesh_diameter,
    save_mesh,
)
from .problems import ProblemSpec, anis_mms, fhn_demo, get_problem, heat_sanity
from .rdsolver import (
    PicardConfig,
    SpaceTimeSolution,
    TimeGrid,
    march,
    max_stable_dt,
    picard_step,
    solve_step,
)

__all__ = [
    "ConvergenceReport",
    "DiscreteField",
    "FieldProbe",
    "GdDiagnostics",
    "GradientDiscretisation",
    "Mesh",
    "PicardConfig",
    "ProblemSpec",
    "ScalarProbe",
    "SpaceTimeSolution",
    "TimeGrid",
    "anis_mms",
    "build_hmm",
    "build_p1",
    "build_scheme",
    "compute_diagnostics",
    "compute_sd",
    "compute_wd",
    "emit_report",
    "error_norms",
    "estimate_cd",
    "fhn_demo",
    "generate_family",
    "get_problem",
    "heat_sanity",
    "interpolate_initial",
    "l2_inner",
    "load_mesh",
    "march",
    "max_stable_dt",
    "mesh_diameter",
    "picard_step",
    "project_pd",
    "run_convergence",
    "save_mesh",
    "solve_step",
]
