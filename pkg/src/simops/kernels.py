"""Multiplier functions and their time-domain kernels.

The transforms J and Gamma act through two scalar multipliers: a band
filter ``tau`` and a regularised reciprocal ``omega`` tied together by the
homological identity ``1 - tau(lam) = lam * omega(lam)``.  Their
time-domain counterparts ``phi`` (with ``phi^ = tau``) and ``psi`` (with
``psi^ = omega``) only enter through L1 norms, which bound the norms of the
transforms.  Fourier convention: ``f^(lam) = int f(t) exp(-i lam t) dt``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import sici

from .errors import DomainError, ResolutionError

KERNEL_KINDS = ("trapezoid", "triangle")

SQRT3 = math.sqrt(3.0)
PSI_L1_CONSTANT = 1.35
NORM_RTOL = 0.02


def _check_a(a, name="a"):
    a = float(a)
    if not math.isfinite(a) or a <= 0.0:
        raise DomainError(f"{name} must be a positive finite number, got {a!r}")
    return a


@dataclass(frozen=True)
class MultiplierPair:
    """Band filter ``tau`` and its companion ``omega`` with parameter ``a``.

    ``trapezoid`` is 1 on ``[-a, a]``, falls linearly to 0 at ``|lam| = 2a``
    and satisfies the homological identity everywhere.  ``triangle`` is
    ``1 - |lam|/a`` on ``[-a, a]``; its identity only holds for ``|lam| >= a``
    and at 0.
    """

    kind: str = "trapezoid"
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise DomainError(f"unknown kernel kind {self.kind!r}")
        object.__setattr__(self, "a", _check_a(self.a))

    def tau(self, lam):
        lam = np.asarray(lam, dtype=float)
        mod = np.abs(lam)
        a = self.a
        if self.kind == "trapezoid":
            return np.where(mod <= a, 1.0, np.where(mod <= 2 * a, (2 * a - mod) / a, 0.0))
        return np.where(mod <= a, 1.0 - mod / a, 0.0)

    def omega(self, lam):
        lam = np.asarray(lam, dtype=float)
        mod = np.abs(lam)
        a = self.a
        safe = np.where(mod <= a, 1.0, lam)
        inv = 1.0 / safe
        if self.kind == "trapezoid":
            middle = np.sign(lam) / a - inv
            return np.where(mod <= a, 0.0, np.where(mod <= 2 * a, middle, inv))
        return np.where(mod <= a, lam / (a * a), inv)

    @property
    def omega_sup(self):
        """Supremum of ``|omega|`` over the real line."""
        return 1.0 / (2 * self.a) if self.kind == "trapezoid" else 1.0 / self.a

    @property
    def band_edge(self):
        """Smallest ``|lam|`` beyond which ``tau`` vanishes."""
        return 2 * self.a if self.kind == "trapezoid" else self.a


def multiplier_pair(pair, lam):
    """Evaluate ``(tau(lam), omega(lam))`` for a single real ``lam``."""
    lam = float(lam)
    if not math.isfinite(lam):
        raise DomainError(f"lambda must be finite, got {lam!r}")
    return float(pair.tau(lam)), float(pair.omega(lam))


def phi_kernel_sample(a, t):
    """Time-domain kernel whose Fourier transform is the trapezoid ``tau_a``.

    The removable singularity at ``t = 0`` is replaced by its limit
    ``3a / (2 pi)``.
    """
    a = _check_a(a)
    t = np.asarray(t, dtype=float)
    small = np.abs(a * t) < 1e-4
    ts = np.where(small, 1.0, t)
    value = 2.0 * np.sin(1.5 * a * ts) * np.sin(0.5 * a * ts) / (np.pi * a * ts * ts)
    # Taylor series: 3a/(2pi) * (1 - 5 (a t)^2 / 12 + ...)
    limit = 1.5 * a / np.pi * (1.0 - 5.0 * (a * t) ** 2 / 12.0)
    out = np.where(small, limit, value)
    return float(out) if out.ndim == 0 else out


def _band_nodes(a, t_max):
    n = int(0.75 * a * t_max) + 48
    x, w = np.polynomial.legendre.leggauss(n)
    lam = 1.5 * a + 0.5 * a * x
    return lam, 0.5 * a * w


def _psi_positive(a, t):
    """``Im psi_a(t)`` for ``t >= 0``, using the right limit ``1/2`` at 0.

    The band ``a < lam <= 2a`` is integrated with Gauss-Legendre nodes; the
    ``1/lam`` tail beyond ``2a`` is the exact sine-integral remainder
    ``pi/2 - Si(2at)``.
    """
    t = np.asarray(t, dtype=float)
    t_max = float(np.max(t)) if t.size else 0.0
    lam, w = _band_nodes(a, t_max)
    band = np.sin(np.multiply.outer(t, lam)) @ (w * (1.0 / a - 1.0 / lam))
    si2, _ = sici(2.0 * a * t)
    return (band + 0.5 * np.pi - si2) / np.pi


def psi_kernel_sample(a, t):
    """Samples of ``psi_a`` (purely imaginary, odd; 0 at ``t = 0``)."""
    a = _check_a(a)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    im = np.sign(t) * _psi_positive(a, np.abs(t))
    return 1j * im


def _aux_g(x):
    # g(x) = int_0^inf cos(u) / (u + x) du
    si, ci = sici(x)
    return -ci * np.cos(x) - (si - 0.5 * np.pi) * np.sin(x)


def _aux_f(x):
    # f' = -g and f(0+) = pi/2
    si, ci = sici(x)
    return ci * np.sin(x) - (si - 0.5 * np.pi) * np.cos(x)


def psitilde_kernel_sample(b, t):
    """Kernel with Fourier transform ``1 / (|lam - 2b| + 2b)``.

    Logarithmically singular at ``t = 0``; callers should avoid that node.
    """
    b = _check_a(b, "b")
    t = np.asarray(t, dtype=float)
    return np.exp(2j * b * t) * _aux_g(2.0 * b * np.abs(t)) / np.pi


@dataclass(frozen=True)
class KernelTable:
    """Uniform symmetric samples of a kernel with its L1 norm estimate."""

    a: float
    grid: np.ndarray
    values: np.ndarray
    l1_estimate: float
    quadrature_error_bound: float
    tail_bound: float = 0.0
    kind: str = "psi"

    @property
    def step(self):
        return float(self.grid[1] - self.grid[0])


# Explicit bounds on the part of the L1 norm beyond |t| = T (both sides).
# |phi_a(t)| <= 2 / (pi a t^2).  For psi_a two integrations by parts give
# |psi_a(t)| <= (jumps of omega' + ||omega''||_1) / (2 pi t^2) = 5 / (2 pi a^2 t^2).
# For psitilde_b, g(x) <= 1/x^2.


def _phi_tail(a, T):
    return 4.0 / (np.pi * a * T)


def _psi_tail(a, T):
    return 5.0 / (np.pi * a * a * T)


def _psitilde_tail(b, T):
    return 1.0 / (2.0 * np.pi * b * b * T)


def _half_trapezoid(values, step):
    """Trapezoid rule on ``[0, T]`` for samples at ``0, h, ..., T``."""
    return step * (values.sum() - 0.5 * (values[0] + values[-1]))


def _l1_phi(a, T, h):
    t = np.arange(0.0, T + 0.5 * h, h)
    return 2.0 * _half_trapezoid(np.abs(phi_kernel_sample(a, t)), h)


def _l1_psi(a, T, h):
    t = np.arange(0.0, T + 0.5 * h, h)
    return 2.0 * _half_trapezoid(np.abs(_psi_positive(a, t)), h)


def _l1_psitilde(b, T, h):
    # nodes at h/2, 3h/2, ...; the singular first half-cell is integrated exactly
    t = np.arange(0.5 * h, T + 0.5 * h, h)
    inner = _half_trapezoid(np.abs(_aux_g(2.0 * b * t)), h) / np.pi
    first = (0.5 * np.pi - _aux_f(b * h)) / (2.0 * np.pi * b)
    return 2.0 * (first + inner)


_L1_RULES = {
    "phi": (_l1_phi, _phi_tail),
    "psi": (_l1_psi, _psi_tail),
    "psitilde": (_l1_psitilde, _psitilde_tail),
}


@dataclass(frozen=True)
class L1Estimate:
    value: float
    error_bound: float
    tail_bound: float
    step: float
    halvings: int


def l1_norm(kind, a, half_width=None, step=None, rtol=0.005, max_halvings=8):
    """L1 norm of ``phi_a``, ``psi_a`` or ``psitilde_a`` by quadrature.

    Composite trapezoid on ``[-T, T]`` with the step halved until two
    successive estimates differ by less than ``rtol`` (relative).  The
    returned value includes the analytic tail bound beyond ``T``; the error
    bound is the last Richardson difference.
    """
    a = _check_a(a)
    rule, tail = _L1_RULES[kind]
    T = 200.0 / a if half_width is None else float(half_width)
    h = 0.2 / a if step is None else float(step)
    previous = rule(a, T, h)
    for k in range(1, max_halvings + 1):
        h *= 0.5
        current = rule(a, T, h)
        diff = abs(current - previous)
        if diff < rtol * abs(current):
            t_bound = tail(a, T)
            return L1Estimate(current + t_bound, diff, t_bound, h, k)
        previous = current
    raise ResolutionError(
        f"{kind} quadrature did not settle after {max_halvings} halvings",
        estimate=diff,
    )


def psi_kernel_table(a, half_width=None, step=None, kind="psi"):
    """Sample ``psi_a`` (or ``psitilde_a`` for ``kind='psitilde'``) on a grid.

    ``psi`` samples sit at ``k * step``; ``psitilde`` samples sit at
    ``(k + 1/2) * step`` to avoid its logarithmic singularity at 0.  The L1
    estimate is the trapezoid integral plus the analytic tail bound; the
    discretisation error is estimated by comparison with the doubled step.
    """
    a = _check_a(a)
    half_width = 200.0 / a if half_width is None else float(half_width)
    if kind not in ("psi", "psitilde"):
        raise DomainError(f"unknown table kind {kind!r}")
    if step is None:
        # the log singularity of psitilde needs a finer grid
        step = 1.0 / (8.0 * a) if kind == "psi" else 1.0 / (64.0 * a)
    step = float(step)
    if not 0.0 < step < 1.0 / (4.0 * a):
        raise DomainError(f"step must lie in (0, 1/(4a)) = (0, {0.25 / a:g})")
    if half_width < 50.0 / a:
        raise DomainError(f"half_width must be at least 50/a = {50.0 / a:g}")
    rule, tail = _L1_RULES[kind]
    n = int(math.floor(half_width / step))
    if kind == "psi":
        grid = step * np.arange(-n, n + 1)
        values = psi_kernel_sample(a, grid)
    else:
        grid = step * (np.arange(-n, n) + 0.5)
        values = psitilde_kernel_sample(a, grid)
    T = n * step
    fine = rule(a, T, step)
    coarse = rule(a, T, 2.0 * step)
    t_bound = tail(a, T)
    l1 = fine + t_bound
    err = abs(fine - coarse)
    if err > 0.01 * l1:
        raise ResolutionError(
            f"discretisation error {err:.3g} exceeds 1% of the L1 estimate {l1:.3g}",
            estimate=err,
        )
    return KernelTable(a, grid, values, l1, err, t_bound, kind)


def omega_l2_squared(a):
    """Closed form of ``||omega_a||_2^2`` for the trapezoid pair."""
    return (4.0 - 4.0 * math.log(2.0)) / _check_a(a)


def omega_prime_l2_squared(a):
    """Closed form of ``||omega_a'||_2^2`` for the trapezoid pair."""
    return 2.0 / (3.0 * _check_a(a) ** 3)


def psi_l1_sobolev_bound(a):
    """``sqrt(2 ||omega_a||_2 ||omega_a'||_2)``, an upper bound for ``||psi_a||_1``."""
    return math.sqrt(2.0 * math.sqrt(omega_l2_squared(a) * omega_prime_l2_squared(a)))


@dataclass(frozen=True)
class NormReport:
    a: float
    b: float
    phi_l1: float
    psi_l1: float
    psitilde_l1: float
    phi_error: float
    psi_error: float
    psitilde_error: float
    sobolev_bound: float
    bounds_hold: bool
    checks: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "a": self.a,
            "b": self.b,
            "phi_l1": self.phi_l1,
            "psi_l1": self.psi_l1,
            "psitilde_l1": self.psitilde_l1,
            "bounds_hold": self.bounds_hold,
        }


def verify_norm_bounds(a, b=None):
    """Check the L1 bounds ``||phi_a|| <= sqrt3``, ``||psi_a|| <= 1.35/a``
    and ``||psitilde_b|| = 1/(2b)`` (``b`` defaults to ``a``)."""
    a = _check_a(a)
    b = a if b is None else _check_a(b, "b")
    phi = l1_norm("phi", a)
    psi = l1_norm("psi", a)
    pst = l1_norm("psitilde", b)
    sobolev = psi_l1_sobolev_bound(a)
    target = 1.0 / (2.0 * b)
    checks = {
        "phi_le_sqrt3": phi.value - phi.error_bound <= SQRT3,
        "psi_le_1.35/a": psi.value - psi.error_bound <= PSI_L1_CONSTANT / a,
        "psi_le_sobolev": psi.value - psi.error_bound <= sobolev,
        "psitilde_eq_1/2b": abs(pst.value - target) - pst.error_bound <= NORM_RTOL * target,
    }
    return NormReport(
        a=a,
        b=b,
        phi_l1=phi.value,
        psi_l1=psi.value,
        psitilde_l1=pst.value,
        phi_error=phi.error_bound,
        psi_error=psi.error_bound,
        psitilde_error=pst.error_bound,
        sobolev_bound=sobolev,
        bounds_hold=all(checks.values()),
        checks=checks,
    )
