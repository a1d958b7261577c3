"""First-order operators ``-i d/dt - v`` with an ``omega``-periodic potential.

In the Fourier basis ``e_n(t) = exp(2 pi i n t / omega)`` the derivative is
the diagonal frame ``lam_n = 2 pi n / omega`` and multiplication by ``v`` is
the Laurent matrix ``B_nm = v^_{n-m}``.  The reduction can be run in two
independent ways:

* directly on coefficient sequences, where products of multiplication
  operators are convolutions and J, Gamma are pointwise multipliers
  ``tau(lam_n)``, ``omega(lam_n)``;
* on the truncated Laurent matrix with the generic engine.

Both are computed and compared on the central index window.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .engine import (
    DIVERGENCE_FACTOR,
    VARIANT_CONSTANTS,
    ContractionBudget,
    IterationConfig,
    hypercausal_series,
    iterate_fixed_point,
    with_variant,
)
from .errors import (
    BudgetError,
    DomainError,
    NonConvergenceError,
    StructuralError,
    TruncationError,
)
from .kernels import PSI_L1_CONSTANT, SQRT3
from .operators import make_frame, operator_norm
from .oracle import match_spectra

# 5.4 sqrt(3) omega / pi * ||v|| < 1 guarantees reduction to a constant
CONSTANT_REDUCTION_FACTOR = 4.0 * SQRT3 * PSI_L1_CONSTANT / math.pi
# a > 13.64 ||v|| makes the general (banded) reduction contract
BANDED_REDUCTION_FACTOR = VARIANT_CONSTANTS["phi"] * SQRT3 * PSI_L1_CONSTANT


@dataclass(frozen=True)
class FourierPotential:
    """Coefficients ``v^_n``, ``n = -N..N``, of an ``omega``-periodic potential."""

    period: float
    coefficients: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.period) and self.period > 0):
            raise DomainError("period must be positive")
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise DomainError("coefficients must be a 1-D array of odd length 2N+1")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def N(self):
        return (self.coefficients.size - 1) // 2

    @property
    def indices(self):
        return np.arange(-self.N, self.N + 1)

    def coefficient(self, n):
        return self.coefficients[n + self.N] if abs(n) <= self.N else 0.0j

    def frequencies(self):
        return 2.0 * np.pi * self.indices / self.period

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        phase = np.exp(2j * np.pi * np.multiply.outer(t, self.indices) / self.period)
        return phase @ self.coefficients

    @property
    def sup_norm_estimate(self):
        """Upper estimate of ``sup |v|``.

        The sampled maximum over a dense grid plus a Lipschitz correction,
        capped by the absolute coefficient sum.
        """
        c = self.coefficients
        l1 = float(np.sum(np.abs(c)))
        if self.N == 0:
            return l1
        samples = 64 * (2 * self.N + 1)
        t = np.arange(samples) * self.period / samples
        sampled = float(np.max(np.abs(self.evaluate(t))))
        lipschitz = float(np.sum(np.abs(self.frequencies() * c)))
        return min(l1, sampled + 0.5 * lipschitz * self.period / samples)

    def support(self):
        return [int(n) for n in self.indices[self.coefficients != 0]]

    def to_dict(self):
        return {
            "omega": self.period,
            "coefficients": [
                {"n": int(n), "re": float(c.real), "im": float(c.imag)}
                for n, c in zip(self.indices, self.coefficients)
                if c != 0
            ],
        }


def make_potential(period, coefficients):
    """Build a potential from a mapping ``{n: v^_n}``."""
    coefficients = {int(n): complex(v) for n, v in dict(coefficients).items()}
    N = max((abs(n) for n in coefficients), default=0)
    arr = np.zeros(2 * N + 1, dtype=complex)
    for n, v in coefficients.items():
        arr[n + N] += v
    return FourierPotential(float(period), arr)


def potential_from_dict(doc):
    """Parse ``{"omega": ..., "coefficients": [{"n", "re", "im"}, ...]}``."""
    try:
        entries = {}
        for item in doc["coefficients"]:
            n = int(item["n"])
            entries[n] = entries.get(n, 0) + complex(float(item.get("re", 0.0)), float(item.get("im", 0.0)))
        return make_potential(float(doc["omega"]), entries)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed potential document: {exc}") from exc


def build_laurent(potential, truncation):
    """Frame ``2 pi n / omega`` and Laurent matrix ``v^_{n-m}`` for ``|n|, |m| <= M``."""
    M = int(truncation)
    if M < potential.N:
        raise TruncationError(f"truncation M = {M} is below the potential bandwidth N = {potential.N}")
    n = np.arange(-M, M + 1)
    frame = make_frame(n * (2.0 * np.pi / potential.period))
    size = 2 * M + 1
    col = np.array([potential.coefficient(k) for k in range(size)], dtype=complex)
    row = np.array([potential.coefficient(-k) for k in range(size)], dtype=complex)
    return frame, scipy.linalg.toeplitz(col, row)


class _Sequences:
    """Multiplication-operator algebra on coefficients ``n = -M..M``."""

    def __init__(self, period, pair, M):
        self.M = M
        lam = np.arange(-M, M + 1) * (2.0 * np.pi / period)
        self.tau = pair.tau(lam)
        self.omega = pair.omega(lam)

    def pad(self, potential):
        out = np.zeros(2 * self.M + 1, dtype=complex)
        N = potential.N
        out[self.M - N : self.M + N + 1] = potential.coefficients
        return out

    def mul(self, x, y):
        # modes outside [-M, M] are discarded, no wrap-around
        return np.convolve(x, y)[self.M : 3 * self.M + 1]

    def J(self, x):
        return self.tau * x

    def G(self, x):
        return self.omega * x

    @staticmethod
    def norm(x):
        return float(np.sum(np.abs(x)))


def _sequence_map(variant, alg, v):
    if variant == "phi":
        def step(x):
            gx = alg.G(x)
            return alg.mul(v, gx) - alg.mul(gx, alg.J(x)) + v
    elif variant == "phi1":
        jv = alg.J(v)

        def step(x):
            gx = alg.G(x)
            vgx = alg.mul(v, gx)
            return vgx - alg.mul(gx, jv) - alg.mul(gx, alg.J(vgx)) + v
    elif variant == "phi2":
        def step(x):
            gx = alg.G(x)
            vgx = alg.mul(v, gx)
            return vgx - alg.mul(gx, alg.J(vgx)) + v
    elif variant == "phi3":
        def step(x):
            return alg.mul(v, alg.G(x)) + v
    else:
        raise DomainError(f"variant {variant!r} is not available for coefficient sequences")
    return step


def solve_sequence_fixed_point(potential, config, truncation):
    """Fixed point ``v*`` of the selected map in the multiplication-operator class.

    Returns ``(v_star, iterations, log)``; norms are absolute coefficient
    sums, which dominate the sup norm.
    """
    M = int(truncation)
    alg = _Sequences(potential.period, config.pair, M)
    v = alg.pad(potential)
    norm_v = alg.norm(v)
    if norm_v == 0.0:
        return v, 1, [0.0]
    step = _sequence_map(config.variant, alg, v)
    x = v.copy()
    log = []
    for iterations in range(1, int(config.max_iter) + 1):
        x_new = step(x)
        diff = alg.norm(x_new - x)
        log.append(diff / norm_v)
        x = x_new
        if not math.isfinite(diff) or diff > DIVERGENCE_FACTOR * norm_v:
            raise NonConvergenceError(f"coefficient iteration diverged at step {iterations}", log)
        if diff < config.tol * norm_v:
            return x, iterations, log
    raise NonConvergenceError(f"coefficient iteration did not converge in {config.max_iter} steps", log)


@dataclass
class PeriodicReduction:
    c: complex | None
    report: object
    v0_coefficients: np.ndarray
    v_star: np.ndarray
    truncation: int
    a: float
    constant_regime: bool
    constant_budget: float
    sequence_iterations: int
    crossval_discrepancy: float
    interior_eigen_distance: float | None

    def v0_dict(self):
        M = self.truncation
        return [
            {"n": int(n), "re": float(c.real), "im": float(c.imag)}
            for n, c in zip(range(-M, M + 1), self.v0_coefficients)
            if c != 0
        ]


def constant_reduction_budget(potential):
    """``5.4 sqrt(3) omega / pi * sup|v|``; below 1 the potential reduces to a constant."""
    return CONSTANT_REDUCTION_FACTOR * potential.period * potential.sup_norm_estimate


def default_periodic_config(potential, **overrides):
    """Engine configuration used by :func:`reduce_periodic` when none is given.

    In the constant-reduction regime, and for constant potentials, this is
    ``phi1`` with ``a = pi/omega`` (the largest ``a`` keeping every nonzero
    frequency out of the J band); otherwise ``phi`` with ``a`` just above
    ``13.64 sup|v|``.
    """
    sup = potential.sup_norm_estimate
    a_const = math.pi / potential.period
    if constant_reduction_budget(potential) < 1.0 or set(potential.support()) <= {0}:
        base = IterationConfig(variant="phi1", a=a_const)
    else:
        base = IterationConfig(variant="phi", a=max(a_const, 1.01 * BANDED_REDUCTION_FACTOR * sup))
    return with_variant(base, overrides.pop("variant", base.variant), **overrides)


def _interior(M):
    half = M // 2
    return np.arange(M - half, M + half + 1)


def reduce_periodic(potential, config=None, truncation=None):
    """Reduce ``-i d/dt - v`` to ``-i d/dt - v0`` with band-limited ``v0``.

    ``v0 = phi_a * v*`` has Fourier support in ``|2 pi n / omega| <= 2a``.
    When no nonzero frequency lies in the J band (``a <= pi / omega``) ``v0``
    is the constant ``c``.  The coefficient-space result is cross-checked
    against the Laurent-matrix run of the engine.
    """
    M = int(truncation) if truncation is not None else max(4 * potential.N, 16)
    if M < potential.N:
        raise TruncationError(f"truncation M = {M} is below the potential bandwidth N = {potential.N}")
    if config is None:
        config = default_periodic_config(potential)
    if config.variant == "series":
        raise DomainError("use reduce_hypercausal_potential for the series variant")
    const_budget = constant_reduction_budget(potential)

    frobenius = config.norm_kind == "frobenius"
    j = 1.0 if frobenius else SQRT3
    gamma = config.pair.omega_sup if frobenius else PSI_L1_CONSTANT / config.a
    norm_v = potential.sup_norm_estimate
    seq_budget = ContractionBudget(
        j=j,
        gamma=gamma,
        norm_B=norm_v,
        lhs=VARIANT_CONSTANTS[config.variant] * j * gamma * norm_v,
        variant=config.variant,
    )
    memoryless = set(potential.support()) <= {0}
    if not seq_budget.satisfied and not config.force and not memoryless:
        raise BudgetError(
            f"contraction budget violated for the potential: lhs = {seq_budget.lhs:.6g} >= 1",
            seq_budget,
        )

    frame, B = build_laurent(potential, M)
    report = iterate_fixed_point(frame, B, config)

    v_star, seq_iters, _ = solve_sequence_fixed_point(
        potential, with_variant(config, report.variant), M
    )
    alg = _Sequences(potential.period, config.pair, M)
    v0 = alg.J(v_star)
    nonzero_in_band = np.any(alg.tau[np.arange(2 * M + 1) != M] != 0.0)
    c = None if nonzero_in_band else complex(v0[M])

    _, V0 = build_laurent(FourierPotential(potential.period, v0), M)
    idx = _interior(M)
    window = np.ix_(idx, idx)
    scale = max(operator_norm(B), 1e-300)
    crossval = float(np.max(np.abs(report.JX_star[window] - V0[window]))) / scale

    interior_distance = None
    if c is not None:
        targets = frame.eigenvalues[idx] - c
        eigs = report.spectra["perturbed"]
        interior_distance = float(max(np.min(np.abs(eigs - z)) for z in targets))

    return PeriodicReduction(
        c=c,
        report=report,
        v0_coefficients=v0,
        v_star=v_star,
        truncation=M,
        a=config.a,
        constant_regime=const_budget < 1.0,
        constant_budget=const_budget,
        sequence_iterations=seq_iters,
        crossval_discrepancy=crossval,
        interior_eigen_distance=interior_distance,
    )


def hypercausal_side(potential):
    """``+1`` / ``-1`` for one-sided support, ``0`` for the zero potential."""
    support = potential.support()
    if not support:
        return 0
    if min(support) > 0:
        return 1
    if max(support) < 0:
        return -1
    raise StructuralError(f"potential spectrum is two-sided (modes {support})")


def reduce_hypercausal_potential(potential, truncation=None, config=None):
    """Similarity of ``-i d/dt - v`` to ``-i d/dt`` for one-sided ``v^``.

    No smallness of ``v`` is required.  ``a`` is half the smallest
    frequency present, so that the support sits in ``[2a, inf)`` (or its
    mirror).
    """
    side = hypercausal_side(potential)
    M = int(truncation) if truncation is not None else max(4 * potential.N, 16)
    frame, B = build_laurent(potential, M)
    if side == 0:
        a = math.pi / potential.period
    else:
        smallest = min(abs(n) for n in potential.support())
        a = math.pi * smallest / potential.period
    if config is None:
        config = IterationConfig(variant="series", a=a)
    else:
        config = with_variant(config, "series", a=a)
    report = hypercausal_series(frame, B, config)
    scale = 1.0 + operator_norm(frame.diagonal - B, config.norm_kind)
    distance = match_spectra(report.spectra["perturbed"], frame.eigenvalues)
    report.notes.append(f"spectrum distance to the frame: {distance:.3g}")
    if distance > 1e-12 * scale or report.residual_rel > 1e-12 * scale:
        raise NonConvergenceError(
            f"hypercausal similarity not verified (residual {report.residual_rel:.3g}, "
            f"spectrum distance {distance:.3g})"
        )
    return report
