"""Spectral frames and the entrywise realisation of the transforms J and Gamma.

The unperturbed operator ``A`` is diagonal with real eigenvalues
``lam_1, ..., lam_N``.  Every transform used by the method acts on an
``N x N`` matrix entrywise through the difference ``lam_i - lam_j``: J
multiplies entry ``(i, j)`` by ``tau(lam_i - lam_j)`` and Gamma by
``omega(lam_i - lam_j)``.  Matrices are plain complex ``numpy`` arrays whose
row/column order follows the frame.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, SingularityError
from .kernels import MultiplierPair

NORM_KINDS = ("spectral", "frobenius")
ROLES = ("J", "Gamma")
DEFAULT_SUPPORT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpectralFrame:
    """Diagonal unperturbed operator given by its eigenvalue list.

    Repeated eigenvalues are allowed; ``d`` is the minimal gap between
    distinct eigenvalues (0 when all eigenvalues coincide).
    """

    eigenvalues: np.ndarray

    @property
    def n(self):
        return self.eigenvalues.shape[0]

    @cached_property
    def differences(self):
        """Matrix of ``lam_i - lam_j``."""
        lam = self.eigenvalues
        return lam[:, None] - lam[None, :]

    @cached_property
    def difference_set(self):
        """Sorted distinct values of ``lam_i - lam_j``."""
        return np.unique(self.differences)

    @cached_property
    def d(self):
        distinct = np.unique(self.eigenvalues)
        if distinct.size < 2:
            return 0.0
        return float(np.min(np.diff(distinct)))

    @property
    def diagonal(self):
        return np.diag(self.eigenvalues.astype(complex))

    def check(self, X):
        """Validate that ``X`` is a finite square matrix tied to this frame."""
        X = np.asarray(X)
        if X.shape != (self.n, self.n):
            raise DomainError(f"matrix of shape {X.shape} does not match frame of size {self.n}")
        if not np.all(np.isfinite(X)):
            raise DomainError("matrix has non-finite entries")
        return X.astype(complex, copy=False)


def make_frame(eigenvalues):
    """Build a :class:`SpectralFrame`; eigenvalue order is preserved."""
    lam = np.array(eigenvalues, dtype=float).ravel()
    if lam.size == 0:
        raise DomainError("a frame needs at least one eigenvalue")
    if not np.all(np.isfinite(lam)):
        raise DomainError("eigenvalues must be finite")
    lam.setflags(write=False)
    return SpectralFrame(lam)


GAP_RTOL = 1e-12


def check_gap_condition(frame, a):
    """True iff no eigenvalue difference lies in ``(-2a, -a) U (a, 2a)``.

    Differences within a relative ``1e-12`` of an endpoint count as lying on
    it, so frames like ``2 pi n / omega`` are not rejected over round-off.
    """
    if a <= 0:
        raise DomainError("a must be positive")
    mod = np.abs(frame.difference_set)
    eps = GAP_RTOL * a
    return not bool(np.any((mod > a + eps) & (mod < 2 * a - eps)))


def apply_toeplitz_multiplier(frame, pair, role, X):
    """Multiply entry ``(i, j)`` of ``X`` by ``m(lam_i - lam_j)``.

    ``m = tau`` for role ``"J"`` and ``m = omega`` for role ``"Gamma"``.
    Beyond the band edge Gamma divides by the difference directly, so that
    for well separated frames the result is exactly the divided-difference
    matrix and J is exact block-diagonal extraction.
    """
    X = frame.check(X)
    delta = frame.differences
    if role == "J":
        # tau takes the exact values 1 and 0 off the sloped band, so the
        # product is an exact extraction whenever the frame is well separated
        return pair.tau(delta) * X
    if role == "Gamma":
        outside = np.abs(delta) > pair.band_edge
        safe = np.where(outside, delta, 1.0)
        return np.where(outside, X / safe, pair.omega(delta) * X)
    raise DomainError(f"unknown role {role!r}; expected one of {ROLES}")


def transform_j(frame, pair, X):
    return apply_toeplitz_multiplier(frame, pair, "J", X)


def transform_gamma(frame, pair, X):
    return apply_toeplitz_multiplier(frame, pair, "Gamma", X)


def is_pinching(frame, pair):
    """True when J reduces to extracting the blocks of equal eigenvalues."""
    return frame.d == 0.0 or pair.band_edge <= frame.d


def operator_norm(X, kind="spectral"):
    """Spectral norm (largest singular value) or Frobenius norm."""
    X = np.asarray(X)
    if X.size == 0:
        return 0.0
    if kind == "spectral":
        return float(np.linalg.norm(X, 2))
    if kind == "frobenius":
        return float(np.linalg.norm(X, "fro"))
    raise DomainError(f"unknown norm kind {kind!r}")


def commutator_with_frame(frame, Y):
    """``A Y - Y A`` for the diagonal ``A`` of ``frame``."""
    return frame.differences * Y


def homological_residual(frame, pair, X, norm="spectral"):
    """Norm of ``A(Gamma X) - (Gamma X)A - X + JX``."""
    X = frame.check(X)
    gx = transform_gamma(frame, pair, X)
    jx = transform_j(frame, pair, X)
    return operator_norm(commutator_with_frame(frame, gx) - X + jx, norm)


SUPPORT_CLASSES = (
    "zero",
    "memoryless",
    "causal",
    "anticausal",
    "hypercausal",
    "hyperanticausal",
    "mixed",
)


@dataclass(frozen=True)
class SupportSet:
    """Achieved eigenvalue differences over the non-negligible entries."""

    offsets: tuple
    cls: str

    @property
    def min_offset(self):
        return min(self.offsets) if self.offsets else math.nan

    @property
    def max_offset(self):
        return max(self.offsets) if self.offsets else math.nan

    def min_modulus(self):
        return min(abs(o) for o in self.offsets) if self.offsets else math.inf


def _classify(offsets):
    if offsets.size == 0:
        return "zero"
    lo, hi = offsets.min(), offsets.max()
    if lo == 0.0 and hi == 0.0:
        return "memoryless"
    if lo > 0.0:
        return "hypercausal"
    if hi < 0.0:
        return "hyperanticausal"
    if lo >= 0.0:
        return "causal"
    if hi <= 0.0:
        return "anticausal"
    return "mixed"


def beurling_support(frame, X, tol=DEFAULT_SUPPORT_TOL):
    """Beurling support of ``X`` and its causality class.

    Entries with ``|X_ij| <= tol * ||X||`` (spectral norm) are treated as
    structural zeros.
    """
    if tol < 0:
        raise DomainError("tol must be non-negative")
    X = frame.check(X)
    scale = operator_norm(X)
    if scale == 0.0:
        return SupportSet((), "zero")
    mask = np.abs(X) > tol * scale
    offsets = np.unique(frame.differences[mask])
    return SupportSet(tuple(float(o) for o in offsets), _classify(offsets))


def resolvent(frame, z):
    """``(A - z I)^{-1}`` as a diagonal matrix."""
    z = complex(z)
    dist = np.abs(frame.eigenvalues - z)
    if np.min(dist) <= 1e-14:
        raise SingularityError(f"z = {z} coincides with an eigenvalue of the frame")
    return np.diag(1.0 / (frame.eigenvalues - z))


def product_condition_residual(frame, pair, rng=None, trials=4):
    """Largest relative size of ``J((Gamma X)(JY))`` over random probes.

    The refined iteration variants need ``J((Gamma X) JY) = 0`` for all
    ``X, Y``; this returns ``max ||J((Gamma X)(JY))|| / (||X|| ||Y||)``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n = frame.n
    worst = 0.0
    for _ in range(trials):
        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        Y = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        prod = transform_gamma(frame, pair, X) @ transform_j(frame, pair, Y)
        val = operator_norm(transform_j(frame, pair, prod))
        worst = max(worst, val / (operator_norm(X) * operator_norm(Y)))
    return worst
