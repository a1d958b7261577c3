"""Fixed-point solvers of the method of similar operators.

Given a diagonal ``A`` (a :class:`~simops.operators.SpectralFrame`) and a
perturbation ``B``, the solvers look for ``X*`` such that

    (A - B)(I + Gamma X*) = (I + Gamma X*)(A - J X*),

so that ``A - B`` is similar to ``A - J X*``, whose matrix is banded (or
diagonal when the frame is well separated).  Four simple-iteration maps are
available, plus a terminating series for one-sided (hypercausal) ``B``:

    phi     X -> B Gamma X - (Gamma X)(JX) + B
    phi1    X -> B Gamma X - (Gamma X) JB - (Gamma X) J(B Gamma X) + B
    phi2    X -> B Gamma X - (Gamma X) J(B Gamma X) + B          (needs JB = 0)
    phi3    X -> B Gamma X + B                                    (needs J = 0)
    series  X* = B + B Gamma B + B Gamma (B Gamma B) + ...
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import (
    BudgetError,
    DomainError,
    NonConvergenceError,
    SingularityError,
    StructuralError,
)
from .kernels import KERNEL_KINDS, PSI_L1_CONSTANT, SQRT3, MultiplierPair
from .operators import (
    NORM_KINDS,
    beurling_support,
    check_gap_condition,
    product_condition_residual,
    is_pinching,
    operator_norm,
    transform_gamma,
    transform_j,
)
from .oracle import dense_spectrum, match_spectra

LOGGER = logging.getLogger(__name__)

VARIANTS = ("phi", "phi1", "phi2", "phi3", "series")

# c(variant) in the sufficient condition c * j * gamma * ||B|| < 1
VARIANT_CONSTANTS = {
    "phi": 3.0 + 2.0 * math.sqrt(2.0),
    "phi1": 4.0,
    "phi2": 3.0,
    "phi3": 2.0,
    "series": 0.0,
}

# radius of the invariant ball ||X* - B|| <= r ||B|| guaranteed under the budget
BALL_RADIUS = {"phi": math.sqrt(2.0), "phi1": 3.0, "phi3": 1.0}

# ||psi||_1 <= 4 / (sqrt(3) a) for the triangle pair: ||omega||_2^2 = 8/(3a),
# ||omega'||_2^2 = 8/(3a^3) in the L1 <= sqrt(2 ||f^|| ||f^'||) estimate
TRIANGLE_PSI_L1_CONSTANT = 4.0 / math.sqrt(3.0)

DIVERGENCE_FACTOR = 100.0
VERIFY_RTOL = 1e-6
STRUCTURE_RTOL = 1e-12
SINGULAR_CONDITION = 1e12


@dataclass(frozen=True)
class IterationConfig:
    variant: str = "phi"
    a: float = 1.0
    kernel_kind: str = "trapezoid"
    tol: float = 1e-12
    max_iter: int = 10000
    norm_kind: str = "spectral"
    force: bool = False
    tight: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown variant {self.variant!r}")
        if self.kernel_kind not in KERNEL_KINDS:
            raise DomainError(f"unknown kernel kind {self.kernel_kind!r}")
        if self.norm_kind not in NORM_KINDS:
            raise DomainError(f"unknown norm kind {self.norm_kind!r}")
        if not (math.isfinite(self.a) and self.a > 0):
            raise DomainError("a must be positive")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if int(self.max_iter) < 1:
            raise DomainError("max_iter must be at least 1")

    @property
    def pair(self):
        return MultiplierPair(self.kernel_kind, self.a)


@dataclass(frozen=True)
class ContractionBudget:
    j: float
    gamma: float
    norm_B: float
    lhs: float
    variant: str
    threshold: float = 1.0

    @property
    def satisfied(self):
        return self.lhs < self.threshold

    @property
    def contraction_factor(self):
        return self.lhs

    def to_dict(self):
        return {
            "variant": self.variant,
            "j": self.j,
            "gamma": self.gamma,
            "norm_b": self.norm_B,
            "lhs": self.lhs,
            "threshold": self.threshold,
            "satisfied": self.satisfied,
        }


@dataclass(frozen=True)
class Intertwiner:
    U: np.ndarray
    U_inverse: np.ndarray
    condition_number: float
    neumann_discrepancy: float | None = None


@dataclass(frozen=True)
class SimilarityCheck:
    residual_rel: float
    spectra_distance: float
    perturbed: np.ndarray
    reduced: np.ndarray


@dataclass
class SimilarityReport:
    variant: str
    a: float
    kernel_kind: str
    norm_kind: str
    X_star: np.ndarray
    JX_star: np.ndarray
    U: np.ndarray
    U_inverse: np.ndarray
    residual_rel: float
    iterations: int
    convergence_log: list
    budget: ContractionBudget
    spectra: dict
    condition_number: float = 1.0
    inverse_defect: float = 0.0
    fixed_point_residual: float = 0.0
    ball_ratio: float = 0.0
    ball_radius: float | None = None
    term_norms: list = field(default_factory=list)
    factorial_bound_holds: bool | None = None
    requested_variant: str | None = None
    notes: list = field(default_factory=list)

    @property
    def ball_ok(self):
        if self.ball_radius is None:
            return None
        return self.ball_ratio <= self.ball_radius * (1.0 + 1e-12)


def _gamma_constant(pair, norm_kind):
    if norm_kind == "frobenius":
        return pair.omega_sup
    if pair.kind == "trapezoid":
        return PSI_L1_CONSTANT / pair.a
    return TRIANGLE_PSI_L1_CONSTANT / pair.a


def _j_constant(frame, pair, config, variant):
    if variant in ("phi3", "series") or config.norm_kind == "frobenius":
        return 1.0
    if pair.kind == "triangle":
        # the Fejer kernel is non-negative, so its L1 norm equals tau(0) = 1
        return 1.0
    if config.tight and is_pinching(frame, pair):
        return 1.0
    return SQRT3


def contraction_budget(frame, config, B, variant=None):
    """Sufficient contraction condition ``c * j * gamma * ||B|| < 1``.

    With the default constants ``gamma = 1.35/a`` and ``j = sqrt(3)`` bound
    the transforms in the operator norm; the Frobenius norm uses the exact
    multiplier bounds ``gamma = sup |omega|`` and ``j = 1``.  ``tight`` sets
    ``j = 1`` when J is a pinching of a separated frame.
    """
    variant = config.variant if variant is None else variant
    B = frame.check(B)
    pair = config.pair
    j = _j_constant(frame, pair, config, variant)
    gamma = _gamma_constant(pair, config.norm_kind)
    norm_b = operator_norm(B, config.norm_kind)
    lhs = VARIANT_CONSTANTS[variant] * j * gamma * norm_b
    return ContractionBudget(j=j, gamma=gamma, norm_B=norm_b, lhs=lhs, variant=variant)


def homological_defect(frame, pair):
    """Largest ``|1 - tau - lam*omega|`` over the frame's differences."""
    delta = frame.difference_set
    return float(np.max(np.abs(1.0 - pair.tau(delta) - delta * pair.omega(delta))))


def _j_is_idempotent(frame, pair):
    tau = pair.tau(frame.difference_set)
    return bool(np.all((tau < STRUCTURE_RTOL) | (tau > 1.0 - STRUCTURE_RTOL)))


def _make_map(variant, frame, pair, B):
    J = lambda Y: transform_j(frame, pair, Y)  # noqa: E731
    G = lambda Y: transform_gamma(frame, pair, Y)  # noqa: E731
    if variant == "phi":
        def step(X):
            gx = G(X)
            return B @ gx - gx @ J(X) + B
    elif variant == "phi1":
        jb = J(B)

        def step(X):
            gx = G(X)
            bgx = B @ gx
            return bgx - gx @ jb - gx @ J(bgx) + B
    elif variant == "phi2":
        def step(X):
            gx = G(X)
            bgx = B @ gx
            return bgx - gx @ J(bgx) + B
    elif variant == "phi3":
        def step(X):
            return B @ G(X) + B
    else:
        raise DomainError(f"no iteration map for variant {variant!r}")
    return step


def _check_structure(frame, B, config, variant, notes):
    """Validate the structural preconditions; may downgrade phi1/phi2 to phi."""
    pair = config.pair
    defect = homological_defect(frame, pair)
    if defect > STRUCTURE_RTOL:
        raise StructuralError(
            f"homological identity fails on the frame (defect {defect:.3g}); "
            f"the {pair.kind} pair needs differences outside (0, {pair.a:g})"
        )
    norm_b = operator_norm(B, config.norm_kind)
    if variant in ("phi1", "phi2"):
        if not check_gap_condition(frame, pair.a) or not _j_is_idempotent(frame, pair):
            raise StructuralError(
                f"{variant} needs eigenvalue differences outside (a, 2a); J is not idempotent"
            )
        if variant == "phi2":
            jb = operator_norm(transform_j(frame, pair, B), config.norm_kind)
            if jb > STRUCTURE_RTOL * norm_b:
                raise StructuralError(f"phi2 needs JB = 0, got ||JB|| = {jb:.3g}")
        probe = product_condition_residual(frame, pair)
        if probe > STRUCTURE_RTOL:
            notes.append(
                f"J((Gamma X)JY) != 0 on random probes ({probe:.3g}); falling back to phi"
            )
            LOGGER.info("falling back from %s to phi", variant)
            return "phi"
    if variant == "phi3":
        support = beurling_support(frame, B)
        if support.min_modulus() < pair.band_edge * (1.0 - 1e-12):
            raise StructuralError(
                f"phi3 needs the support of B outside (-{pair.band_edge:g}, {pair.band_edge:g})"
            )
    return variant


def iterate_fixed_point(frame, B, config):
    """Solve the selected fixed-point equation by simple iteration from ``X1 = B``.

    Raises:
        StructuralError: gap / ``JB = 0`` / support preconditions fail.
        BudgetError: the contraction budget fails and ``config.force`` is off.
        NonConvergenceError: the iteration diverges, exhausts ``max_iter``,
            or the converged result does not verify as a similarity.
    """
    if config.variant == "series":
        return hypercausal_series(frame, B, config)
    B = frame.check(B)
    notes = []
    variant = _check_structure(frame, B, config, config.variant, notes)
    budget = contraction_budget(frame, config, B, variant)
    # Gamma annihilates a memoryless B, so B itself is an exact fixed point
    memoryless = beurling_support(frame, B, tol=0.0).cls in ("zero", "memoryless")
    if memoryless and budget.norm_B > 0.0:
        notes.append("B is memoryless and is its own fixed point")
    elif not budget.satisfied:
        if not config.force:
            raise BudgetError(
                f"contraction budget violated for {variant}: lhs = {budget.lhs:.6g} >= 1",
                budget,
            )
        notes.append(f"budget violated (lhs = {budget.lhs:.6g}); forced")

    pair = config.pair
    norm = lambda Y: operator_norm(Y, config.norm_kind)  # noqa: E731
    norm_b = budget.norm_B
    log = []
    if memoryless:
        X = B.copy()
        iterations = 1
        log.append(0.0)
    else:
        step = _make_map(variant, frame, pair, B)
        X = B.copy()
        for iterations in range(1, int(config.max_iter) + 1):
            X_new = step(X)
            if variant == "phi3":
                jx = norm(transform_j(frame, pair, X_new))
                if jx > STRUCTURE_RTOL * norm(X_new):
                    raise StructuralError(f"J does not annihilate iterate {iterations}")
            diff = norm(X_new - X)
            log.append(diff / norm_b)
            X = X_new
            if not math.isfinite(diff) or diff > DIVERGENCE_FACTOR * norm_b:
                raise NonConvergenceError(
                    f"iteration diverged at step {iterations} (update {diff:.3g})", log
                )
            if diff < config.tol * norm_b:
                break
        else:
            raise NonConvergenceError(
                f"no convergence within {config.max_iter} iterations (last update {log[-1]:.3g})",
                log,
            )

    JX = transform_j(frame, pair, X)
    if variant == "phi3":
        JX = np.zeros_like(X)
    intertwiner = build_intertwiner(transform_gamma(frame, pair, X), config.norm_kind)
    check = verify_similarity(frame, B, X, JX, intertwiner.U, config.norm_kind)
    if check.residual_rel > VERIFY_RTOL:
        raise NonConvergenceError(
            f"converged iterate is not a similarity (residual {check.residual_rel:.3g})", log
        )
    fp_residual = 0.0
    if norm_b > 0.0:
        fp_residual = norm(_make_map(variant, frame, pair, B)(X) - X) / norm_b
    ball_ratio = norm(X - B) / norm_b if norm_b > 0 else 0.0
    return SimilarityReport(
        variant=variant,
        a=config.a,
        kernel_kind=config.kernel_kind,
        norm_kind=config.norm_kind,
        X_star=X,
        JX_star=JX,
        U=intertwiner.U,
        U_inverse=intertwiner.U_inverse,
        residual_rel=check.residual_rel,
        iterations=iterations,
        convergence_log=log,
        budget=budget,
        spectra=_spectra_dict(check),
        condition_number=intertwiner.condition_number,
        inverse_defect=_inverse_defect(intertwiner),
        fixed_point_residual=fp_residual,
        ball_ratio=ball_ratio,
        ball_radius=BALL_RADIUS.get(variant),
        requested_variant=config.variant,
        notes=notes,
    )


def _log_factorial_bound(n, norm_b, width):
    # log of ||B||^n / (width^(n-1) (n-1)!)
    return n * math.log(norm_b) - (n - 1) * math.log(width) - math.lgamma(n)


def hypercausal_series(frame, B, config):
    """Sum ``X* = B + B Gamma B + B Gamma(B Gamma B) + ...`` for one-sided ``B``.

    The support of ``B`` must lie in ``[2a, inf)`` or ``(-inf, -2a]``; no
    smallness of ``B`` is needed.  Each term ``B_n`` has support beyond
    ``2na`` and obeys ``||B_n|| <= ||B||^n / ((2a)^(n-1) (n-1)!)``; in finite
    dimension the terms become exactly zero once the support leaves the
    frame's difference set.
    """
    B = frame.check(B)
    pair = config.pair
    width = pair.band_edge
    support = beurling_support(frame, B)
    if support.cls not in ("zero", "hypercausal", "hyperanticausal"):
        raise StructuralError(f"series needs a one-sided support, got class {support.cls!r}")
    if support.cls != "zero" and support.min_modulus() < width * (1.0 - 1e-12):
        raise StructuralError(
            f"series needs |offsets| >= {width:g}, smallest is {support.min_modulus():g}"
        )
    norm = lambda Y: operator_norm(Y, config.norm_kind)  # noqa: E731
    norm_b = norm(B)
    X = B.copy()
    term_norms = [norm_b]
    log = [1.0 if norm_b > 0 else 0.0]
    bound_ok = True
    if norm_b > 0.0:
        term = B
        for n in range(2, int(config.max_iter) + 1):
            term = B @ transform_gamma(frame, pair, term)
            t_norm = norm(term)
            if t_norm == 0.0:
                break
            bound = math.exp(_log_factorial_bound(n, norm_b, width))
            if t_norm > bound * (1.0 + 1e-12):
                bound_ok = False
            term_norms.append(t_norm)
            log.append(t_norm / norm_b)
            X = X + term
            if t_norm < config.tol * norm_b:
                break
        else:
            raise NonConvergenceError("series did not terminate within max_iter terms", log)

    JX = np.zeros_like(X)
    intertwiner = build_intertwiner(transform_gamma(frame, pair, X), config.norm_kind)
    check = verify_similarity(frame, B, X, JX, intertwiner.U, config.norm_kind)
    if check.residual_rel > VERIFY_RTOL:
        raise NonConvergenceError(
            f"series sum is not a similarity (residual {check.residual_rel:.3g})", log
        )
    budget = ContractionBudget(j=1.0, gamma=1.0 / width, norm_B=norm_b, lhs=0.0, variant="series")
    return SimilarityReport(
        variant="series",
        a=config.a,
        kernel_kind=config.kernel_kind,
        norm_kind=config.norm_kind,
        X_star=X,
        JX_star=JX,
        U=intertwiner.U,
        U_inverse=intertwiner.U_inverse,
        residual_rel=check.residual_rel,
        iterations=len(term_norms),
        convergence_log=log,
        budget=budget,
        spectra=_spectra_dict(check),
        condition_number=intertwiner.condition_number,
        inverse_defect=_inverse_defect(intertwiner),
        term_norms=term_norms,
        factorial_bound_holds=bound_ok,
        requested_variant=config.variant,
    )


def _neumann_inverse(G, max_terms=20000):
    n = G.shape[0]
    total = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for _ in range(max_terms):
        term = -(term @ G)
        t_norm = np.linalg.norm(term, 2)
        total = total + term
        if t_norm == 0.0 or t_norm < 1e-15 * np.linalg.norm(total, 2):
            break
    return total


def build_intertwiner(GammaX, norm_kind="spectral"):
    """``U = I + Gamma X`` with its inverse (direct solve) and condition number.

    When ``||Gamma X|| < 1`` the Neumann series ``sum (-Gamma X)^n`` is
    evaluated as an independent cross-check of the inverse.
    """
    G = np.asarray(GammaX, dtype=complex)
    n = G.shape[0]
    eye = np.eye(n, dtype=complex)
    U = eye + G
    s = scipy.linalg.svdvals(U)
    cond = math.inf if s[-1] == 0.0 else float(s[0] / s[-1])
    if cond > SINGULAR_CONDITION:
        raise SingularityError(f"intertwining operator is singular (condition {cond:.3g})")
    U_inv = scipy.linalg.solve(U, eye)
    neumann = None
    if operator_norm(G, "spectral") < 1.0:
        neumann = operator_norm(_neumann_inverse(G) - U_inv, norm_kind)
    return Intertwiner(U, U_inv, cond, neumann)


def _inverse_defect(intertwiner):
    n = intertwiner.U.shape[0]
    return operator_norm(intertwiner.U @ intertwiner.U_inverse - np.eye(n))


def verify_similarity(frame, B, X_star, JX_star, U, norm_kind="spectral"):
    """Intertwining residual and oracle spectra of ``A - B`` and ``A - JX*``.

    ``residual_rel = ||(A-B)U - U(A-JX*)|| / max(1, ||A-B||)``.
    """
    B = frame.check(B)
    A = frame.diagonal
    perturbed_op = A - B
    reduced_op = A - np.asarray(JX_star, dtype=complex)
    lhs = perturbed_op @ U - U @ reduced_op
    scale = max(1.0, operator_norm(perturbed_op, norm_kind))
    residual = operator_norm(lhs, norm_kind) / scale
    perturbed = dense_spectrum(perturbed_op).eigenvalues
    reduced = dense_spectrum(reduced_op).eigenvalues
    return SimilarityCheck(residual, match_spectra(perturbed, reduced), perturbed, reduced)


def _spectra_dict(check):
    return {
        "perturbed": check.perturbed,
        "reduced": check.reduced,
        "max_match_distance": check.spectra_distance,
    }


def with_variant(config, variant, **changes):
    """Copy of ``config`` with another variant (and optional field changes)."""
    return replace(config, variant=variant, **changes)
