"""Determinantal point processes on the integer lattice from a positive kernel A.

Finite-window numerics for the dual pair of norms ``f^T A f`` and
``g^T A^{-1} g``: variational minima and their window limits, the DPP with
``K = A (I + A)^{-1}``, its Papangelou intensities, the Gibbs specification
built from ``V(xi) = -log det A(xi, xi)``, and brute-force references.
"""

from .errors import (
    ConfigParse,
    FamilyEvaluation,
    InvariantViolation,
    NotPositiveDefinite,
    NotSymmetric,
    OverlappingSets,
    RkhsDppError,
    ScheduleNotNested,
    SiteInConfiguration,
    SiteNotInWindow,
    SpectrumAtOne,
    WindowTooLarge,
)
from .kernel import (
    KernelMatrix,
    approx_B,
    inverse,
    log_det,
    materialize,
    schur_complement,
    submatrix,
)
from .operators import (
    ConjugatedDiagonal,
    Diagonal,
    Explicit,
    OperatorSpec,
    Toeplitz,
    conjugated_power_diagonal,
    identity,
    polynomial_decay_toeplitz,
    power_diagonal,
    spec_from_dict,
    vanishing_symbol_toeplitz,
)
from .traces import ConvergenceTrace
from .windows import SiteRule, doubling_schedule, enlarge, interval, linear_schedule, symmetric
from .variational import (
    TriplePartition,
    VariationalResult,
    alpha_beta_limit_check,
    alpha_trace,
    beta_trace,
    finite_a,
    finite_b,
    verify_ab,
)
from .dpp import (
    DppWindowModel,
    build_model,
    check_lemma43,
    correlation,
    marginal,
    papangelou,
    papangelou_gap,
    papangelou_trace,
    sample,
    sample_many,
)
from .gibbs import (
    BoundaryCondition,
    dlr_report,
    dlr_residual,
    energy,
    mutual_energy,
    partition_function,
    phi_matrix,
    potential,
    specification_density,
    uniqueness_identity_check,
)
from .oracle import ExactDistribution, enumerate_distribution, oracle_correlation, oracle_minimize
from .experiments import ExperimentConfig, hypothesis_verdict, verify_hypothesis

__version__ = "0.1.0"
