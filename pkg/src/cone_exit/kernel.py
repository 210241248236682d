"""Dirichlet heat kernels of wedges, the half-line, the quarter plane and
type-A Weyl chambers, plus the boundary normal derivative of the wedge
kernel at time one.

The wedge kernel is the eigen-series

    p(t, x, y) = exp(-(|x|^2 + |y|^2) / 2t) / t
                 * sum_j I_{alpha_j}(|x||y|/t) m_j(theta_x) m_j(theta_y)

truncated adaptively (see ``truncation_order``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import DomainError, SeriesNotConverged
from .geometry import Wedge
from .spectral import (
    DEFAULT_TOL,
    SeriesTolerance,
    alpha_sequence,
    eigenfunction_matrix,
    log_bessel_bound,
    log_bessel_i,
)

BACKENDS = ("wedge-series", "half-line", "quarter-product", "weyl-km")

#: Kernel values below this are returned as exactly zero.
FLUSH_BELOW = 1e-300

_BLOCK = 32

# Pointwise sums whose cancellation ratio sum|terms| / |sum| exceeds
# 0.01 * rel_tol / _DOUBLE_EPS are redone in extended precision.
_DOUBLE_EPS = 1e-16


def _bessel_tol(tol):
    # Bessel values feed signed sums, so they are summed to full precision.
    return SeriesTolerance(min(tol.rel_tol, 1e-17), tol.max_terms)


def _signed_sum(terms, tol, exact):
    """Sum ``terms``; fall back to ``exact()`` if cancellation ruins doubles."""
    val = math.fsum(terms.tolist())
    mag = float(np.sum(np.abs(terms)))
    if mag == 0.0:
        return 0.0
    cond = mag / abs(val) if val != 0.0 else math.inf
    if cond * _DOUBLE_EPS > 0.01 * tol.rel_tol:
        cond = min(cond, 1e280)
        digits = 20 + int(math.log10(cond))
        # the truncated tail must also be small relative to the sum itself
        val = exact(digits, SeriesTolerance(tol.rel_tol / cond, tol.max_terms))
    return val


@dataclass(frozen=True)
class KernelSpec:
    backend: str = "wedge-series"
    truncation: int | None = None
    tol: SeriesTolerance = field(default_factory=lambda: DEFAULT_TOL)

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise DomainError(f"unknown kernel backend {self.backend!r}")
        if self.truncation is not None and (
            int(self.truncation) != self.truncation or self.truncation < 1
        ):
            raise DomainError(f"truncation must be >= 1, got {self.truncation!r}")


DEFAULT_SPEC = KernelSpec()


def _as_wedge(wedge):
    if isinstance(wedge, Wedge):
        return wedge
    return Wedge(float(wedge))


def _point(p, dim, name):
    v = np.asarray(p, dtype=float).reshape(-1)
    if v.shape[0] != dim or not np.all(np.isfinite(v)):
        raise DomainError(f"{name} must be a finite {dim}-vector, got {p!r}")
    return v


def truncation_order(beta, z, tol=DEFAULT_TOL, weight=None, sup_weight=None):
    """Number of series terms needed at Bessel argument ``z``.

    ``weight(j)`` gives the magnitude of the non-Bessel factor of term j
    (defaults to its supremum ``sup_weight(j)``, itself defaulting to
    ``2/beta``). Stops at the first J whose successor satisfies

        bound_{J+1} * sup_weight(J+1) < rel_tol * sum_{j<=J} |term_j|

    where ``bound`` is the series bound ``(z/2)^nu e^z / Gamma(nu+1)``, or
    the tail certificate ``T_{J+1} / (1 - T_{J+1}/T_J)`` that follows from
    log-concavity of ``nu -> I_nu(z)`` once the terms decrease. Returns
    ``(J, achieved)`` where ``achieved`` is the relative tail estimate.
    """
    if sup_weight is None:

        def sup_weight(j):
            return np.full(j.shape, 2.0 / beta)

    if weight is None:
        weight = sup_weight
    if z <= 0.0:
        return 1, 0.0

    log_tol = math.log(tol.rel_tol)
    # acc holds sum |term_j| / e^{ref}; large z would overflow otherwise
    acc = 0.0
    ref = None
    prev_log_t = None
    start = 1
    while True:
        stop = min(start + _BLOCK, tol.max_terms + 2)
        j = np.arange(start, stop)
        nu = j * (math.pi / beta)
        log_i = log_bessel_i(nu, np.full(nu.shape, z), tol)
        with np.errstate(divide="ignore"):
            log_term = log_i + np.log(weight(j))
            log_sup = log_i + np.log(sup_weight(j))
        log_bound = log_bessel_bound(nu, z) + np.log(sup_weight(j))
        for k in range(j.size):
            jj = int(j[k])
            if jj > 1 and acc > 0.0:
                log_acc = math.log(acc) + ref
                if log_bound[k] < log_tol + log_acc:
                    return jj - 1, math.exp(log_bound[k] - log_acc)
                if prev_log_t is not None and log_sup[k] < prev_log_t:
                    r = math.exp(log_sup[k] - prev_log_t)
                    log_tail = log_sup[k] - math.log1p(-r)
                    if log_tail < log_tol + log_acc:
                        return jj - 1, math.exp(log_tail - log_acc)
            if jj > tol.max_terms:
                achieved = (
                    math.exp(log_bound[k] - math.log(acc) - ref) if acc > 0 else math.inf
                )
                raise SeriesNotConverged(
                    f"heat-kernel series unconverged after {tol.max_terms} terms "
                    f"(z={z:.6g})",
                    achieved_bound=achieved,
                    terms=tol.max_terms,
                )
            if np.isfinite(log_term[k]):
                if ref is None:
                    ref = float(log_term[k])
                acc += math.exp(log_term[k] - ref)
            prev_log_t = log_sup[k]
        start = stop


def _series_order(beta, z, spec, weight=None, sup_weight=None):
    if spec.truncation is not None:
        return int(spec.truncation)
    return truncation_order(beta, z, spec.tol, weight, sup_weight)[0]


def wedge_series(beta, t, rx, theta_x, ry, theta_y, spec=DEFAULT_SPEC):
    """Raw eigen-series value for polar coordinates, without domain checks.

    Angles outside ``[0, beta]`` evaluate the odd continuation of the
    kernel across the edge lines, which finite-difference checks use.
    """
    if rx == 0.0 or ry == 0.0:
        return 0.0
    z = rx * ry / t
    c = math.sqrt(2.0 / beta)

    def weight(j):
        k = j * (math.pi / beta)
        return np.abs(c * np.sin(k * theta_x) * c * np.sin(k * theta_y))

    n = _series_order(beta, z, spec, weight)
    alphas = alpha_sequence(beta, n)
    log_i = log_bessel_i(alphas, np.full(n, z), _bessel_tol(spec.tol))
    mx = eigenfunction_matrix(beta, n, [theta_x])[:, 0]
    my = eigenfunction_matrix(beta, n, [theta_y])[:, 0]
    scale = -(rx * rx + ry * ry) / (2.0 * t) - math.log(t)
    terms = np.exp(log_i + scale) * mx * my

    def exact(digits, fine_tol):
        m = n if spec.truncation is not None else truncation_order(
            beta, z, fine_tol, weight
        )[0]
        with mpmath.workdps(digits):
            b = mpmath.mpf(beta)
            zz = mpmath.mpf(rx) * ry / t
            acc = mpmath.mpf(0)
            for j in range(1, m + 1):
                k = j * mpmath.pi / b
                acc += (
                    mpmath.besseli(k, zz)
                    * mpmath.sin(k * theta_x)
                    * mpmath.sin(k * theta_y)
                )
            pref = 2 / b * mpmath.exp(-(mpmath.mpf(rx) ** 2 + mpmath.mpf(ry) ** 2) / (2 * t)) / t
            return float(pref * acc)

    val = _signed_sum(terms, spec.tol, exact)
    return 0.0 if abs(val) < FLUSH_BELOW else val


def heat_kernel_wedge(wedge, t, x, y, spec=DEFAULT_SPEC):
    """Dirichlet heat kernel of a wedge at Cartesian points ``x``, ``y``.

    ``wedge`` may be a :class:`Wedge` or an opening angle. Points on the
    boundary give 0; points outside the closed wedge raise DomainError.
    """
    w = _as_wedge(wedge)
    if not t > 0.0:
        raise DomainError(f"time must be positive, got {t!r}")
    x = _point(x, 2, "x")
    y = _point(y, 2, "y")
    for name, p in (("x", x), ("y", y)):
        where = w.locate(p)
        if where == "exterior":
            raise DomainError(f"{name}={p.tolist()} lies outside the wedge")
        if where == "boundary":
            return 0.0
    rx, thx = w.to_polar(x)
    ry, thy = w.to_polar(y)
    return wedge_series(w.beta, t, rx, thx, ry, thy, spec)


def radial_log_terms(beta, t, rx, rho, n_terms, tol=DEFAULT_TOL):
    """``log[e^{-(rx^2+rho^2)/2t} I_{alpha_j}(rx*rho/t) / t]`` for ``j=1..n_terms``.

    Returns an array of shape ``(n_terms, len(rho))``.
    """
    rho = np.asarray(rho, dtype=float)
    alphas = alpha_sequence(beta, n_terms)[:, None]
    z = (rx / t) * rho[None, :]
    log_i = log_bessel_i(alphas, z, tol)
    return log_i - (rx * rx + rho[None, :] ** 2) / (2.0 * t) - math.log(t)


def grid_series_order(beta, t, rx, theta_x, rho_max, spec=DEFAULT_SPEC):
    """Series length for evaluating the kernel from ``x`` out to ``rho_max``.

    The ratio of term j to term 1 grows with the Bessel argument, so the
    order chosen at the largest radius serves the whole grid.
    """
    c = math.sqrt(2.0 / beta)

    def weight(j):
        return np.abs(c * np.sin(j * (math.pi / beta) * theta_x)) * c

    return _series_order(beta, rx * rho_max / t, spec, weight)


def heat_kernel_wedge_grid(wedge, t, x, rho, theta, spec=DEFAULT_SPEC):
    """Kernel ``p(t, x, y)`` on the polar grid ``rho`` x ``theta`` (canonical angles).

    Returns an array of shape ``(len(rho), len(theta))``.
    """
    w = _as_wedge(wedge)
    x = _point(x, 2, "x")
    if w.locate(x) != "interior":
        raise DomainError(f"x={x.tolist()} must be interior")
    rx, thx = w.to_polar(x)
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n = grid_series_order(w.beta, t, rx, thx, float(np.max(rho)), spec)
    log_r = radial_log_terms(w.beta, t, rx, rho, n, _bessel_tol(spec.tol))
    mx = eigenfunction_matrix(w.beta, n, [thx])[:, 0]
    my = eigenfunction_matrix(w.beta, n, theta)
    out = (np.exp(log_r) * mx[:, None]).T @ my
    out[np.abs(out) < FLUSH_BELOW] = 0.0
    return out


def gaussian_kernel(t, x, y):
    """Free one-dimensional heat kernel, the N(x, t) density at ``y``."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return np.exp(-d * d / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


def heat_kernel_halfline(t, x, y):
    """Dirichlet heat kernel of ``(0, inf)`` by the method of images."""
    if not t > 0.0:
        raise DomainError(f"time must be positive, got {t!r}")
    x = float(x)
    y = float(y)
    if x < 0.0 or y < 0.0:
        raise DomainError(f"half-line points must be >= 0, got x={x}, y={y}")
    # phi(x-y) - phi(x+y) = phi(x-y) * (1 - e^{-2xy/t})
    return float(gaussian_kernel(t, x, y) * -math.expm1(-2.0 * x * y / t))


def heat_kernel_quarter(t, x, y):
    """Quarter-plane kernel: product of half-line kernels per coordinate."""
    x = _point(x, 2, "x")
    y = _point(y, 2, "y")
    return heat_kernel_halfline(t, x[0], y[0]) * heat_kernel_halfline(t, x[1], y[1])


def heat_kernel_halfplane(t, x, y):
    """Upper half-plane kernel: free Gaussian in x_1 times half-line in x_2."""
    x = _point(x, 2, "x")
    y = _point(y, 2, "y")
    return float(gaussian_kernel(t, x[0], y[0])) * heat_kernel_halfline(t, x[1], y[1])


def karlin_mcgregor_det(t, x, y):
    """``det(p(t, x_i, y_j))`` for 1-d Gaussian kernels, with no ordering checks."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise DomainError("x and y must have the same dimension")
    mat = gaussian_kernel(t, x[:, None], y[None, :])
    # LAPACK getrf: LU with partial pivoting
    return float(np.linalg.det(mat))


def heat_kernel_weyl(t, x, y):
    """Kernel of the Weyl chamber ``{x_1 < ... < x_d}`` (Karlin-McGregor)."""
    if not t > 0.0:
        raise DomainError(f"time must be positive, got {t!r}")
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    for name, p in (("x", x), ("y", y)):
        if not np.all(np.isfinite(p)) or np.any(np.diff(p) <= 0.0):
            raise DomainError(f"{name} must be strictly increasing, got {p.tolist()}")
    return karlin_mcgregor_det(t, x, y)


def _edge_of(w, a):
    """Return (radius, sign pattern function) for a boundary point ``a``."""
    a = _point(a, 2, "a")
    if w.locate(a) != "boundary" or not np.any(a):
        raise DomainError(f"a={a.tolist()} must be a non-zero boundary point")
    r, th = w.to_polar(a)
    upper = abs(th - w.beta) < abs(th)
    return r, upper


def normal_derivative_wedge(wedge, x, a, spec=DEFAULT_SPEC):
    """Inward normal derivative of ``y -> p(1, x, y)`` at a boundary point ``a``.

    Differentiating the series term by term: at the lower edge the inward
    normal derivative of ``m_j`` is ``sqrt(2/beta) * alpha_j / |a|``; at the
    upper edge it picks up the factor ``(-1)^(j+1)``.
    """
    w = _as_wedge(wedge)
    x = _point(x, 2, "x")
    if w.locate(x) != "interior":
        raise DomainError(f"x={x.tolist()} must be interior")
    r, upper = _edge_of(w, a)
    rx, thx = w.to_polar(x)
    beta = w.beta
    c = math.sqrt(2.0 / beta)
    z = rx * r

    def sup_weight(j):
        return (2.0 / beta) * j * (math.pi / beta)

    def weight(j):
        k = j * (math.pi / beta)
        return np.abs(c * np.sin(k * thx)) * c * k

    n = _series_order(beta, z, spec, weight, sup_weight)
    j = np.arange(1, n + 1)
    alphas = alpha_sequence(beta, n)
    log_i = log_bessel_i(alphas, np.full(n, z), _bessel_tol(spec.tol))
    mx = eigenfunction_matrix(beta, n, [thx])[:, 0]
    sign = np.where(j % 2 == 1, 1.0, -1.0) if upper else np.ones(n)
    terms = np.exp(log_i - (rx * rx + r * r) / 2.0) * mx * c * alphas * sign

    def exact(digits, fine_tol):
        m = n if spec.truncation is not None else truncation_order(
            beta, z, fine_tol, weight, sup_weight
        )[0]
        with mpmath.workdps(digits):
            b = mpmath.mpf(beta)
            acc = mpmath.mpf(0)
            for jj in range(1, m + 1):
                k = jj * mpmath.pi / b
                s_j = -1 if (upper and jj % 2 == 0) else 1
                acc += s_j * k * mpmath.besseli(k, mpmath.mpf(z)) * mpmath.sin(k * thx)
            pref = 2 / b * mpmath.exp(-(mpmath.mpf(rx) ** 2 + mpmath.mpf(r) ** 2) / 2)
            return float(pref * acc)

    return _signed_sum(terms, spec.tol, exact) / r
