"""Generalized orthogonal Procrustes: power-method solver with spectral
initialization, dual-certificate optimality checks, synthetic instance
models and phase-transition experiments."""

from .blocks import BlockStack
from .certify import (
    Certificate,
    CertTolerances,
    build_certificate,
    check_global_optimality,
)
from .errors import (
    GoppError,
    InvalidSpec,
    MalformedInstanceFile,
    NoSpectralGap,
    NotConverged,
    NotSymmetric,
    ShapeMismatch,
)
from .experiments import (
    GridConfig,
    GridResult,
    run_convergence_trace,
    run_kappa_sweep,
    run_phase_grid,
    run_tightness_curve,
)
from .linalg import (
    align,
    df_distance,
    nuclear_norm,
    polar,
    polar_blockwise,
    smallest_eigenvalues,
    top_left_singular_vectors,
)
from .metrics import (
    ErrorReport,
    blockwise_error,
    cloud_error,
    error_report,
    reconstruct_cloud,
)
from .model import (
    Instance,
    SignalSpec,
    eta_from_sigma,
    generate,
    make_signal,
    sample_orthogonal_stack,
    sigma_from_eta,
)
from .solver import SolveOptions, SolveReport, gpm_step, objective, solve, spectral_init

__version__ = "0.1.0"

__all__ = [
    "BlockStack",
    "Certificate",
    "CertTolerances",
    "ErrorReport",
    "GoppError",
    "GridConfig",
    "GridResult",
    "Instance",
    "InvalidSpec",
    "MalformedInstanceFile",
    "NoSpectralGap",
    "NotConverged",
    "NotSymmetric",
    "ShapeMismatch",
    "SignalSpec",
    "SolveOptions",
    "SolveReport",
    "align",
    "blockwise_error",
    "build_certificate",
    "check_global_optimality",
    "cloud_error",
    "df_distance",
    "error_report",
    "eta_from_sigma",
    "generate",
    "gpm_step",
    "make_signal",
    "nuclear_norm",
    "objective",
    "polar",
    "polar_blockwise",
    "reconstruct_cloud",
    "run_convergence_trace",
    "run_kappa_sweep",
    "run_phase_grid",
    "run_tightness_curve",
    "sample_orthogonal_stack",
    "sigma_from_eta",
    "smallest_eigenvalues",
    "solve",
    "spectral_init",
    "top_left_singular_vectors",
]
