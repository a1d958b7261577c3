"""Method of similar operators on finite-dimensional truncations.

The package reduces a perturbed diagonal operator ``A - B`` to a similar
operator ``A - JX*`` whose matrix is banded (diagonal for well separated
spectra), builds the intertwiner ``U = I + Gamma X*`` and checks the
similarity against an independent eigenvalue oracle.
"""

__version__ = "0.1.0"

from .engine import (
    ContractionBudget,
    IterationConfig,
    SimilarityReport,
    build_intertwiner,
    contraction_budget,
    hypercausal_series,
    iterate_fixed_point,
    verify_similarity,
)
from .errors import (
    BudgetError,
    DomainError,
    NonConvergenceError,
    OracleError,
    ResolutionError,
    SimopsError,
    SingularityError,
    StructuralError,
    TruncationError,
)
from .kernels import (
    KernelTable,
    MultiplierPair,
    multiplier_pair,
    phi_kernel_sample,
    psi_kernel_sample,
    psi_kernel_table,
    psitilde_kernel_sample,
    verify_norm_bounds,
)
from .operators import (
    SpectralFrame,
    SupportSet,
    apply_toeplitz_multiplier,
    beurling_support,
    check_gap_condition,
    homological_residual,
    make_frame,
    operator_norm,
    resolvent,
)
from .oracle import SpectrumResult, dense_spectrum, match_spectra
from .potential import (
    FourierPotential,
    build_laurent,
    make_potential,
    reduce_hypercausal_potential,
    reduce_periodic,
)

__all__ = [
    "BudgetError",
    "ContractionBudget",
    "DomainError",
    "FourierPotential",
    "IterationConfig",
    "KernelTable",
    "MultiplierPair",
    "NonConvergenceError",
    "OracleError",
    "ResolutionError",
    "SimilarityReport",
    "SimopsError",
    "SingularityError",
    "SpectralFrame",
    "SpectrumResult",
    "StructuralError",
    "SupportSet",
    "TruncationError",
    "apply_toeplitz_multiplier",
    "beurling_support",
    "build_intertwiner",
    "build_laurent",
    "check_gap_condition",
    "contraction_budget",
    "dense_spectrum",
    "homological_residual",
    "hypercausal_series",
    "iterate_fixed_point",
    "make_frame",
    "make_potential",
    "match_spectra",
    "multiplier_pair",
    "operator_norm",
    "phi_kernel_sample",
    "psi_kernel_sample",
    "psi_kernel_table",
    "psitilde_kernel_sample",
    "reduce_hypercausal_potential",
    "reduce_periodic",
    "resolvent",
    "verify_norm_bounds",
    "verify_similarity",
]
