"""Exact non-exit probabilities.

Closed forms cover the half-line and the quarter plane. General wedges go
through the Girsanov representation

    P_x[tau > t] = e^{-<a,x> - t|a|^2/2} * integral_C e^{<a,y>} p(t, x, y) dy

evaluated by tensor Gauss-Legendre quadrature in polar coordinates. The
rescaled form (``y -> t*y``, kernel at time one) is available as a
cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfcx, log_ndtr, ndtr

from .errors import DomainError, QuadratureError
from .geometry import Wedge
from .kernel import DEFAULT_SPEC, grid_series_order, radial_log_terms
from .kernel import _bessel_tol
from .spectral import eigenfunction_matrix

_SQRT2 = math.sqrt(2.0)
_MAX_PANELS = 24
_APEX_LEVELS = 8


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and cutoffs for the polar Gauss-Legendre rule.

    Node counts are totals, spread over the panels of each direction.
    """

    radial_nodes: int = 256
    angular_nodes: int = 128
    radial_cutoff_sigmas: float = 12.0
    self_check_tol: float = 1e-6

    def __post_init__(self):
        if self.radial_nodes < 8 or self.angular_nodes < 8:
            raise DomainError("quadrature node counts must be >= 8")
        if not self.radial_cutoff_sigmas > 0.0:
            raise DomainError("radial_cutoff_sigmas must be positive")
        if not self.self_check_tol > 0.0:
            raise DomainError("self_check_tol must be positive")


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class SurvivalValue:
    p: float
    method: str
    est_quad_error: float = 0.0
    details: dict = field(default_factory=dict, compare=False, repr=False)


def _clamp(p, method):
    if p > 1.0 + 1e-9:
        warnings.warn(f"{method} probability {p!r} exceeds 1; clamped", stacklevel=3)
    return min(max(p, 0.0), 1.0)


def halfline_probability(x, a, t):
    """``Phi((x+at)/sqrt t) - e^{-2ax} Phi((-x+at)/sqrt t)`` computed stably."""
    st = math.sqrt(t)
    u1 = (-x - a * t) / st
    u2 = (x - a * t) / st
    if u1 > 0.0:
        # both terms are Gaussian tails sharing the factor e^{-u1^2/2}
        # (since 2ax + u2^2/2 = u1^2/2); erfcx keeps them representable
        return 0.5 * math.exp(-0.5 * u1 * u1) * (
            float(erfcx(u1 / _SQRT2)) - float(erfcx(u2 / _SQRT2))
        )
    return float(ndtr(-u1)) - math.exp(-2.0 * a * x + float(log_ndtr(-u2)))


def survival_halfline(x, a, t):
    """``P_x[tau > t]`` for Brownian motion with drift ``a`` on ``(0, inf)``."""
    x, a, t = float(x), float(a), float(t)
    if not (x > 0.0 and t > 0.0 and math.isfinite(a)):
        raise DomainError(f"need x > 0, t > 0 and finite drift (x={x}, t={t}, a={a})")
    return SurvivalValue(_clamp(halfline_probability(x, a, t), "closed-form"), "closed-form")


def survival_quarter(x, a, t):
    """Quarter-plane survival as the product of the two coordinate half-lines."""
    x = np.asarray(x, dtype=float).reshape(-1)
    a = np.asarray(a, dtype=float).reshape(-1)
    if x.shape != (2,) or a.shape != (2,):
        raise DomainError("quarter plane needs 2-dimensional x and drift")
    p = survival_halfline(x[0], a[0], t).p * survival_halfline(x[1], a[1], t).p
    return SurvivalValue(p, "product")


def _gl_panels(breaks, n):
    """Composite Gauss-Legendre rule with ``n`` nodes on each panel."""
    breaks = np.unique(np.asarray(breaks, dtype=float))
    g, w = np.polynomial.legendre.leggauss(n)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (g[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def _per_panel(n_total, n_pan, refine):
    return refine * max(8, -(-n_total // n_pan))


def _radial_rule(lo, hi, sigma, extra, apex_scale, n_total, refine):
    n_pan = int(min(max(math.ceil((hi - lo) / (2.0 * sigma)), 1), _MAX_PANELS))
    pts = list(np.linspace(lo, hi, n_pan + 1))
    pts += [e for e in extra if lo < e < hi]
    n = _per_panel(n_total, len(set(pts)) - 1, refine)
    if lo == 0.0:
        # geometric grading around the apex, where strongly repelling
        # drifts concentrate the integrand on a scale well below sigma
        s0 = min(apex_scale, sigma)
        pts += [s0 * 2.0**k for k in range(-_APEX_LEVELS, _APEX_LEVELS) if s0 * 2.0**k < hi]
    return _gl_panels(pts, n)


def _angular_breaks(beta, phi, width):
    pts = [0.0, beta]
    if phi is not None and width > 0.0:
        for m in (0.0, 1.0, 2.0, 4.0, 8.0):
            for s in (-1.0, 1.0):
                p = phi + s * m * width
                if 0.0 < p < beta:
                    pts.append(p)
    return pts


@dataclass(frozen=True)
class _Problem:
    beta: float
    rx: float
    thx: float
    x: np.ndarray
    a: np.ndarray
    t: float


def _integrate(prob, form, lo, hi, n_r, n_th, refine, spec):
    """One tensor-rule evaluation of the Girsanov integral on ``[lo, hi] x [0, beta]``."""
    beta, t = prob.beta, prob.t
    a, x, rx, thx = prob.a, prob.x, prob.rx, prob.thx
    a_norm = float(np.hypot(*a))
    phi_a = math.atan2(a[1], a[0])
    ax = float(a @ x)
    if form == "time":
        s, sigma, split, k = t, math.sqrt(t), a_norm * t, a_norm
        center = x + a * t
    else:
        s, sigma, split, k = 1.0, 1.0 / math.sqrt(t), a_norm, t * a_norm
        center = (x + a * t) / t
    c_norm = float(np.hypot(*center))
    phi_c = math.atan2(center[1], center[0]) % (2.0 * math.pi)
    x_scale = rx if form == "time" else rx / t

    apex = 1.0 / a_norm if a_norm > 0.0 else sigma
    if form != "time":
        apex /= t
    rho, w_rho = _radial_rule(lo, hi, sigma, [split, x_scale, c_norm], apex, n_r, refine)
    ang_phi = phi_c if (c_norm > 0.0 and 0.0 < phi_c < beta) else None
    ang_w = sigma / c_norm if c_norm > 0.0 else 0.0
    ang_breaks = _angular_breaks(beta, ang_phi, ang_w)
    theta, w_th = _gl_panels(ang_breaks, _per_panel(n_th, len(set(ang_breaks)) - 1, refine))

    n = grid_series_order(beta, s, rx, thx, float(rho.max()), spec)
    log_r = radial_log_terms(beta, s, rx, rho, n, _bessel_tol(spec.tol))
    if form == "time":
        e0 = k * rho - ax - 0.5 * t * a_norm**2
    else:
        e0 = (
            math.log(t)
            + 0.5 * rho**2
            - 0.5 * t * (a_norm - rho) ** 2
            - ax
            - 0.5 * rx * rx / t
            + 0.5 * rx * rx
        )
    mx = eigenfunction_matrix(beta, n, [thx])[:, 0]
    radial = np.exp(log_r + e0[None, :]) * mx[:, None] * (rho * w_rho)[None, :]
    tilt = np.exp(k * rho[:, None] * (np.cos(theta[None, :] - phi_a) - 1.0))
    ang = (tilt * w_th[None, :]) @ eigenfunction_matrix(beta, n, theta).T
    return float(np.sum(radial.T * ang))


def _evaluate(prob, form, quad, spec, refine):
    n_r, n_th = quad.radial_nodes, quad.angular_nodes
    t = prob.t
    k = quad.radial_cutoff_sigmas
    a_norm = float(np.hypot(*prob.a))
    r_star = a_norm * t + k * math.sqrt(t) + prob.rx + 10.0
    c_norm = float(np.hypot(*(prob.x + prob.a * t)))
    sd = math.sqrt(t)
    scale = 1.0 if form == "time" else 1.0 / t

    # the integrand is dominated by the drifted free Gaussian density centred
    # at x + a t, so the disc of radius k*sqrt(t) around it misses at most
    # e^{-k^2/2} of absolute mass
    lo = max(0.0, c_norm - k * sd)
    hi = min(r_star, c_norm + k * sd)
    p_ball = _integrate(prob, form, lo * scale, hi * scale, n_r, n_th, refine, spec)
    if lo == 0.0 and hi == r_star:
        return p_ball
    if math.exp(-0.5 * k * k) <= 1e-3 * quad.self_check_tol * abs(p_ball):
        return p_ball
    return _integrate(prob, form, 0.0, r_star * scale, n_r, n_th, refine, spec)


def survival_wedge_exact(
    wedge, a, x, t, quad=DEFAULT_QUAD, spec=DEFAULT_SPEC, form="time"
):
    """``P_x[tau > t]`` for a wedge by quadrature of the Girsanov integral.

    ``form="time"`` integrates the kernel at time ``t``; ``form="scaled"``
    uses the kernel at time one after ``y -> t*y``. The rule is evaluated
    once and again with twice the nodes on every panel; the finer value is
    returned with the relative change as ``est_quad_error``.
    """
    if not isinstance(wedge, Wedge):
        wedge = Wedge(float(wedge))
    if form not in ("time", "scaled"):
        raise DomainError(f"unknown integral form {form!r}")
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"time must be positive, got {t!r}")
    a = np.asarray(a, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if a.shape != (2,) or x.shape != (2,) or not np.all(np.isfinite(a)):
        raise DomainError("wedge survival needs 2-dimensional drift and start point")
    if wedge.locate(x) != "interior":
        raise DomainError(f"start point {x.tolist()} must be interior")

    rx, thx = wedge.to_polar(x)
    rot = np.array(
        [[math.cos(wedge.rotation), math.sin(wedge.rotation)],
         [-math.sin(wedge.rotation), math.cos(wedge.rotation)]]
    )
    prob = _Problem(wedge.beta, rx, thx, rot @ x, rot @ a, t)

    coarse = _evaluate(prob, form, quad, spec, 1)
    fine = _evaluate(prob, form, quad, spec, 2)
    if fine == 0.0:
        err = 0.0 if coarse == 0.0 else math.inf
    else:
        err = abs(fine - coarse) / abs(fine)
    if err > quad.self_check_tol:
        raise QuadratureError(
            f"quadrature self-check failed: coarse={coarse!r}, fine={fine!r} "
            f"(relative change {err:.3g})",
            coarse,
            fine,
        )
    return SurvivalValue(_clamp(fine, "quadrature"), "quadrature", err)
