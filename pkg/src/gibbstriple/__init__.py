"""Numerics for Gibbs measures and Dirac spectra on subshifts of finite type.

The package solves the transfer-operator eigenproblem for finite-range
potentials, builds the generalized Haar basis of the resulting measure
space, assembles the associated Dirac operator, and checks its spectral
properties (logarithmic singular-value sums, dimension estimators, renewal
counting, commutator-norm distances between states) at desk scale.
"""

from .errors import (
    BadDimension,
    BadShape,
    BudgetExceeded,
    ComputeError,
    ConfigError,
    Degenerate,
    GibbsTripleError,
    Inadmissible,
    IndexOutOfRange,
    LevelMismatch,
    NoAscent,
    NoConvergence,
    NonNegativeValue,
    NotNormalized,
    NotPrimitive,
    ShapeMismatch,
    SingleChild,
    ThresholdOutOfRange,
    TooDeep,
)
from .sft import (
    SubshiftSpec,
    Word,
    alpha,
    build_subshift,
    children,
    common_prefix_metric,
    count_cylinders_at,
    enumerate_cylinders,
    is_admissible,
)
from .thermo import (
    Potential,
    ThermoSolution,
    birkhoff_sum,
    birkhoff_variance,
    constant_potential,
    cylinder_mass,
    make_potential,
    normalize_potential,
    pressure_function,
    scaled_potential,
    solve_thermo,
    transfer_apply,
    transfer_matrix,
)
from .haar import HaarElement, HaarPlan, canonical_rotation, mass_rotation
from .spectral import (
    DiracModel,
    DimensionEstimate,
    SpectralStream,
    build_dirac,
    dimension_estimators,
    dixmier_checkpoints,
    dixmier_integral,
    partial_dixmier,
    singular_values,
    summability_report,
    top_values,
)
from .renewal import (
    CountingProfile,
    count_cylinders,
    count_profile,
    krw_surrogate,
    lalley_sum,
    upsilon_comparability,
    xi_slope,
)
from .duality import (
    LipschitzCertificate,
    State,
    commutator_norm,
    connes_distance,
    lift_state,
    measure_state,
    monge_kantorovich,
    point_state,
    proof_constants,
    state_from_weights,
    weak_star_consistency,
)

__version__ = "0.1.0"
