"""Invariant bundles and dichotomy spectra of discretized integrodifference equations."""

from .habitat import (
    GridFunction,
    Habitat1D,
    MeshFamily,
    SmoothingSpace,
    build_grid,
    gridfun,
    lp_norm,
    space_norm,
)
from .operators import (
    ExponentConfig,
    GrowthSpec,
    KernelSpec,
    LipschitzBudget,
    TimeDependence,
    cutoff_modify,
    fredholm_apply,
    hammerstein_apply,
    hammerstein_derivative,
    hille_tamarkin_norm,
    hypothesis_audit,
    lipschitz_bound,
    nemytskii_apply,
    nemytskii_derivative,
    smoothing_constant,
)
from .projection import (
    GammaModel,
    ProjectionScheme,
    build_spectral_basis,
    discretization_error,
    gamma_bound,
    project,
    verify_error_bound,
)
from .dynamics import (
    CoefficientSystem,
    DiscreteOperator,
    IDEProblem,
    Trajectory,
    discretize,
    evolution_operator,
    solve,
    step,
    variational_matrix,
)
from .spectrum import (
    DichotomyData,
    SpectralBundle,
    SpectrumEstimate,
    dichotomy_spectrum,
    dichotomy_test,
    floquet_spectrum,
    spectral_bundles,
    spectral_splitting,
)
from .bundles import (
    BundleGraph,
    LPConfig,
    bundle_graph,
    c0_bound,
    center_graph,
    hierarchy_check,
    lipschitz_estimate,
    lp_fixed_point,
    membership_test,
)
from .harness import (
    AuditError,
    ConvergenceReport,
    StudyConfig,
    emit_report,
    fit_order,
    problem_from_config,
    run_convergence_study,
    study_from_config,
)

__version__ = "0.1.0"
