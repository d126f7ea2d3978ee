"""Quench dynamics of coherent states in collective spin models.

Exact diagonalization of the LMG and Dicke Hamiltonians, coherent initial
states, numerical and analytic survival probability, multi-sequence
interference, and classical (action-angle) estimators.
"""

from .hamiltonians import (
    Model,
    Parity,
    ModelSpec,
    SectorBasis,
    EigenSystem,
    InvalidSpecError,
    DimensionLimitError,
    build_lmg,
    build_dicke,
    critical_values,
    diagonalize,
    cutoff_convergence,
)
from .coherent import (
    CoherentSpec,
    ComponentDistribution,
    CutoffError,
    ProjectionError,
    bloch_coefficients,
    glauber_coefficients,
    dicke_product_state,
    parity_project,
    components,
    analytic_moments,
    coherent_overlap_level_curve,
    solve_q0_for_energy,
)
from .survival import (
    TimeSeries,
    SequenceModel,
    GaussianGateError,
    linear_time_grid,
    log_time_grid,
    sp_numerical,
    ipr,
    ipr_gaussian,
    long_time_statistics,
    select_window,
    fit_quadratic_spectrum,
    estimate_parameters,
    theta3,
    sp_analytic,
    sp_component,
    decay_envelope,
    powerlaw_constant,
)
from .multisequence import (
    SubSequence,
    InterferencePair,
    DetectionError,
    SeparatrixReport,
    detect_subsequences,
    fit_sequence,
    pair_parameters,
    sp_interference,
    sp_multi,
    separatrix_report,
)
from .classical import (
    ClassicalState,
    PoincareSection,
    h_classical,
    gradient,
    integrate,
    poincare,
    action,
    omega_classical,
    e2_semiclassical,
    convergence_study,
)
from .estimators import SurvivalProbabilityModel, MultiSequenceSurvivalModel

__version__ = "0.1.0"

__all__ = [
    "Model", "Parity", "ModelSpec", "SectorBasis", "EigenSystem",
    "InvalidSpecError", "DimensionLimitError",
    "build_lmg", "build_dicke", "critical_values", "diagonalize",
    "cutoff_convergence",
    "CoherentSpec", "ComponentDistribution", "CutoffError",
    "ProjectionError",
    "bloch_coefficients", "glauber_coefficients", "dicke_product_state",
    "parity_project",
    "components", "analytic_moments", "coherent_overlap_level_curve",
    "solve_q0_for_energy",
    "TimeSeries", "SequenceModel", "GaussianGateError",
    "linear_time_grid", "log_time_grid",
    "sp_numerical", "ipr", "ipr_gaussian", "long_time_statistics",
    "select_window", "fit_quadratic_spectrum", "estimate_parameters",
    "theta3", "sp_analytic", "sp_component", "decay_envelope",
    "powerlaw_constant",
    "SubSequence", "InterferencePair", "DetectionError",
    "SeparatrixReport",
    "detect_subsequences", "fit_sequence", "pair_parameters",
    "sp_interference", "sp_multi", "separatrix_report",
    "ClassicalState", "PoincareSection",
    "h_classical", "gradient", "integrate", "poincare", "action",
    "omega_classical", "e2_semiclassical", "convergence_study",
    "SurvivalProbabilityModel", "MultiSequenceSurvivalModel",
]
