"""Independent eigenvalue oracle used to check every similarity claim."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, OracleError

BACKWARD_RTOL = 1e-10
SORT_ROUNDING = 1e-9
GREEDY_TRIGGER = 1e-6


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    backward_error: float


def dense_spectrum(X):
    """All eigenvalues of a dense (nonsymmetric) matrix.

    Uses LAPACK's balanced Hessenberg/shifted-QR driver.  Each eigenpair is
    re-checked through ``||X v - mu v||`` with ``||v|| = 1``; a maximum
    residual above ``1e-10 (1 + ||X||)`` raises :class:`OracleError`.
    """
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError("matrix has non-finite entries")
    if X.shape[0] == 0:
        return SpectrumResult(np.zeros(0, dtype=complex), 0.0)
    try:
        w, v = scipy.linalg.eig(X)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"eigenvalue iteration failed: {exc}") from exc
    if not np.all(np.isfinite(w)):
        raise OracleError("eigenvalue iteration returned non-finite values")
    v = v / np.linalg.norm(v, axis=0, keepdims=True)
    residual = np.linalg.norm(X @ v - v * w[None, :], axis=0)
    backward = float(np.max(residual))
    scale = 1.0 + float(np.linalg.norm(X, 2))
    if backward >= BACKWARD_RTOL * scale:
        raise OracleError(f"backward error {backward:.3g} exceeds {BACKWARD_RTOL:g}*(1+||X||)")
    return SpectrumResult(w, backward)


def _sorted(values):
    values = np.asarray(values, dtype=complex)
    re = np.round(values.real / SORT_ROUNDING) * SORT_ROUNDING
    im = np.round(values.imag / SORT_ROUNDING) * SORT_ROUNDING
    return values[np.lexsort((im, re))]


def _greedy(s1, s2):
    dist = np.abs(s1[:, None] - s2[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    used1 = np.zeros(s1.size, dtype=bool)
    used2 = np.zeros(s2.size, dtype=bool)
    worst, matched = 0.0, 0
    for flat in order:
        i, j = divmod(int(flat), s2.size)
        if used1[i] or used2[j]:
            continue
        used1[i] = used2[j] = True
        worst = max(worst, float(dist[i, j]))
        matched += 1
        if matched == s1.size:
            break
    return worst


def match_spectra(s1, s2):
    """Maximum pairwise distance between two eigenvalue multisets.

    Sort-then-pair on ``(real, imag)`` rounded to ``1e-9``; if that pairing
    is worse than ``1e-6`` a greedy nearest-neighbour matching is tried too
    and the smaller of the two is returned.
    """
    s1 = np.asarray(s1, dtype=complex).ravel()
    s2 = np.asarray(s2, dtype=complex).ravel()
    if s1.size != s2.size:
        raise DomainError(f"spectra have different lengths {s1.size} and {s2.size}")
    if s1.size == 0:
        return 0.0
    best = float(np.max(np.abs(_sorted(s1) - _sorted(s2))))
    if best > GREEDY_TRIGGER:
        best = min(best, _greedy(s1, s2))
    return best
