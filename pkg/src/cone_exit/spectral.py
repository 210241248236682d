"""Dirichlet eigen-data of planar wedges and the special functions they need.

Eigenfunctions use the orthonormal normalisation on ``(0, beta)``::

    m_j(theta) = sqrt(2/beta) * sin(j*pi*theta/beta)

so that the heat-kernel expansion holds with unit coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, SeriesNotConverged

TWO_PI = 2.0 * math.pi
_LN_RESCALE = 250.0 * math.log(10.0)
_RESCALE_AT = 1e250


@dataclass(frozen=True)
class SeriesTolerance:
    """Stopping rule for the Bessel and heat-kernel series."""

    rel_tol: float = 1e-12
    max_terms: int = 10**6

    def __post_init__(self):
        if not self.rel_tol > 0.0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol!r}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms!r}")


DEFAULT_TOL = SeriesTolerance()


@dataclass(frozen=True)
class EigenData:
    j: int
    lambda_j: float
    alpha_j: float
    p_j: float
    beta: float
    d: int = 2


def _check_beta(beta):
    if not (math.isfinite(beta) and 0.0 < beta < TWO_PI):
        raise DomainError(f"wedge opening must lie in (0, 2*pi), got {beta!r}")


def eigen_2d(beta, j):
    """Eigen-data of the j-th Dirichlet mode of the arc ``(0, beta)``."""
    _check_beta(beta)
    if int(j) != j or j < 1:
        raise DomainError(f"eigen index must be a positive integer, got {j!r}")
    alpha = j * math.pi / beta
    # d = 2: alpha_j = sqrt(lambda_j) and p_j = alpha_j
    return EigenData(int(j), alpha * alpha, alpha, alpha, beta, 2)


def alpha_sequence(beta, n):
    """``alpha_j = j*pi/beta`` for ``j = 1..n`` as an array."""
    return np.arange(1, n + 1) * (math.pi / beta)


def eigenfunction_m(beta, j, theta):
    """Orthonormal eigenfunction ``m_j`` evaluated at ``theta`` in ``[0, beta]``.

    Accepts scalar or array ``theta``. Endpoints give 0; anything outside
    the closed arc is rejected.
    """
    _check_beta(beta)
    if int(j) != j or j < 1:
        raise DomainError(f"eigen index must be a positive integer, got {j!r}")
    th = np.asarray(theta, dtype=float)
    if np.any((th < 0.0) | (th > beta)):
        raise DomainError(f"theta must lie in [0, {beta}], got {theta!r}")
    val = math.sqrt(2.0 / beta) * np.sin(j * math.pi * th / beta)
    val = np.where((th == 0.0) | (th == beta), 0.0, val)
    return float(val) if np.ndim(val) == 0 else val


def eigenfunction_matrix(beta, n, theta):
    """Rows ``m_1..m_n`` evaluated on the angle array ``theta`` (no checks)."""
    th = np.asarray(theta, dtype=float)
    j = np.arange(1, n + 1)[:, None]
    return math.sqrt(2.0 / beta) * np.sin(j * (math.pi / beta) * th[None, :])


def log_gamma(z):
    """``log Gamma(z)`` for ``z > 0``."""
    z = float(z)
    if not z > 0.0:
        raise DomainError(f"log_gamma needs z > 0, got {z!r}")
    return math.lgamma(z)


def log_bessel_i(nu, x, tol=DEFAULT_TOL):
    """Logarithm of the modified Bessel function ``I_nu(x)``.

    The ascending series is summed relative to its leading term
    ``(x/2)**nu / Gamma(nu+1)``, with periodic rescaling so that large
    arguments do not overflow. ``nu`` and ``x`` broadcast against each other.
    Returns ``-inf`` where ``I_nu(x) = 0`` (``x = 0``, ``nu > 0``).
    """
    nu_a = np.asarray(nu, dtype=float)
    x_a = np.asarray(x, dtype=float)
    if np.any(nu_a < 0.0) or not np.all(np.isfinite(nu_a)):
        raise DomainError("bessel order must be finite and >= 0")
    if np.any(x_a < 0.0) or not np.all(np.isfinite(x_a)):
        raise DomainError("bessel argument must be finite and >= 0")
    nu_b, x_b = np.broadcast_arrays(nu_a, x_a)
    out = np.full(nu_b.shape, -np.inf)
    zero = x_b == 0.0
    out[zero & (nu_b == 0.0)] = 0.0

    pos = ~zero
    if np.any(pos):
        nu_p = nu_b[pos]
        x_p = x_b[pos]
        lead = nu_p * np.log(0.5 * x_p) - gammaln(nu_p + 1.0)
        out[pos] = lead + _scaled_series_log(nu_p, 0.25 * x_p * x_p, tol)
    return float(out) if out.ndim == 0 else out


def _scaled_series_log(nu, q, tol):
    """log of sum_m q^m / (m! (nu+1)_m) for 1-d arrays ``nu``, ``q``."""
    n = nu.shape[0]
    total = np.ones(n)
    term = np.ones(n)
    offset = np.zeros(n)
    idx = np.arange(n)
    k = 0
    while idx.size:
        k += 1
        if k > tol.max_terms:
            raise SeriesNotConverged(
                f"Bessel series did not converge in {tol.max_terms} terms",
                achieved_bound=float(np.max(term[idx] / total[idx])),
                terms=k - 1,
            )
        nu_i = nu[idx]
        q_i = q[idx]
        t_i = term[idx] * q_i / (k * (nu_i + k))
        s_i = total[idx] + t_i
        big = s_i > _RESCALE_AT
        if np.any(big):
            t_i[big] *= 1.0 / _RESCALE_AT
            s_i[big] *= 1.0 / _RESCALE_AT
            offset[idx[big]] += _LN_RESCALE
        term[idx] = t_i
        total[idx] = s_i
        # tail after term k is bounded by term*r/(1-r) once the next
        # ratio r is below one (ratios decrease with k)
        r = q_i / ((k + 1) * (nu_i + k + 1))
        done = (r < 1.0) & (t_i * r <= tol.rel_tol * (1.0 - r) * s_i)
        idx = idx[~done]
    return np.log(total) + offset


def bessel_i(nu, x, tol=DEFAULT_TOL):
    """Modified Bessel function of the first kind ``I_nu(x)`` for ``x >= 0``."""
    return np.exp(log_bessel_i(nu, x, tol))


def log_bessel_bound(nu, x):
    """log of the series bound ``(x/2)**nu * e**x / Gamma(nu+1)`` on ``I_nu(x)``."""
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return nu * np.log(0.5 * x) + x - gammaln(nu + 1.0)
