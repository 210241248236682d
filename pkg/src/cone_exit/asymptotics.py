"""Large-time laws ``P_x[tau > t] ~ prefactor * t^(-alpha) * e^(-gamma t)``.

Constants use orthonormal eigenfunctions. With ``u(x) = |x|^p1 m_1(theta_x)``
and ``b = 1 / (2^alpha1 Gamma(alpha1 + 1))`` the wedge laws are

    A  b * int_0^beta m_1(th) Gamma(p1+2) / c(th)^(p1+2) dth * e^{-<a,x>} u(x)
       with c(th) = -<a, (cos th, sin th)>
    B  b * 2^(p1/2) Gamma(p1/2+1) * int m_1 * u(x)
    C  2 pi e^{|x-a|^2/2} p(1, x, a)
    D  sqrt(2 pi) e^{|x-a|^2/2} dn p(1, x, a)
    E  e^{|x-a|^2/2} sum_p sqrt(2 pi) e^{(|p|^2-|a|^2)/2} / |p-a|^2 * dn p(1, x, p)
    F  b * sqrt(2/beta) pi/beta * 2^(p1/2-1) Gamma(p1/2) / |a|^2 * e^{-<a,x>} u(x)
       (twice that for the half-plane)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from .errors import DomainError
from .geometry import Regime, Wedge, classify_regime, project_onto_cone
from .kernel import DEFAULT_SPEC, heat_kernel_wedge, normal_derivative_wedge
from .spectral import eigen_2d

_SQRT_2PI = math.sqrt(2.0 * math.pi)

#: alpha as ``coef * alpha1 + const`` for each regime.
ALPHA_FORM = {
    Regime.POLAR_INTERIOR: (Fraction(1), Fraction(1)),
    Regime.ZERO: (Fraction(1, 2), Fraction(0)),
    Regime.INTERIOR: (Fraction(0), Fraction(0)),
    Regime.BOUNDARY: (Fraction(0), Fraction(1, 2)),
    Regime.NON_POLAR_EXTERIOR: (Fraction(0), Fraction(3, 2)),
    Regime.POLAR_BOUNDARY: (Fraction(1, 2), Fraction(1)),
}


def alpha_label(coef, const):
    """Human-readable ``coef*alpha1 + const``, e.g. ``alpha1/2+1``."""
    if coef == 0:
        return str(const)
    head = "alpha1" if coef == 1 else f"alpha1/{coef.denominator}" if coef.numerator == 1 else f"{coef}*alpha1"
    return head if const == 0 else f"{head}+{const}"


@dataclass(frozen=True)
class AsymptoticLaw:
    regime: Regime
    gamma: float
    alpha: float
    prefactor: float
    alpha_form: tuple = (Fraction(0), Fraction(0))
    provenance: dict = field(default_factory=dict, compare=False)

    def log_value(self, t):
        return math.log(self.prefactor) - self.alpha * math.log(t) - self.gamma * t

    def value(self, t):
        return math.exp(self.log_value(t))


def exponents(wedge, a):
    """Regime, gamma, alpha and the symbolic alpha form, without prefactors."""
    regime = classify_regime(wedge, a)
    gamma = project_onto_cone(wedge, a).gamma
    coef, const = ALPHA_FORM[regime]
    alpha1 = math.pi / wedge.beta
    return regime, gamma, float(coef) * alpha1 + float(const), (coef, const)


def _canonical(wedge, v):
    c, s = math.cos(wedge.rotation), math.sin(wedge.rotation)
    return np.array([c * v[0] + s * v[1], -s * v[0] + c * v[1]])


def harmonic_u(beta, rho, theta):
    """Positive harmonic function ``|x|^p1 m_1(theta)`` of the canonical wedge."""
    p1 = math.pi / beta
    return rho**p1 * math.sqrt(2.0 / beta) * math.sin(p1 * theta)


def kappa_a(beta, a):
    e = eigen_2d(beta, 1)
    p1 = e.p_j
    c0 = math.sqrt(2.0 / beta)

    def f(th):
        c = -(a[0] * math.cos(th) + a[1] * math.sin(th))
        # log form: c can be small near the polar-cone edge
        return c0 * math.sin(p1 * th) * math.exp(math.lgamma(p1 + 2.0) - (p1 + 2.0) * math.log(c))

    val, err = integrate.quad(f, 0.0, beta, epsabs=0.0, epsrel=1e-12, limit=400)
    return _b(e.alpha_j) * val, err


def _b(alpha1):
    return math.exp(-alpha1 * math.log(2.0) - math.lgamma(alpha1 + 1.0))


def kappa_b(beta):
    p1 = math.pi / beta
    int_m1 = math.sqrt(2.0 / beta) * 2.0 * beta / math.pi
    return _b(p1) * 2.0 ** (p1 / 2.0) * math.gamma(p1 / 2.0 + 1.0) * int_m1


def kappa_f(beta, a_norm):
    p1 = math.pi / beta
    dn_u = math.sqrt(2.0 / beta) * math.pi / beta
    k = _b(p1) * dn_u * 2.0 ** (p1 / 2.0 - 1.0) * math.gamma(p1 / 2.0) / a_norm**2
    return 2.0 * k if abs(beta - math.pi) <= 1e-12 else k


def kappa_e(p, a):
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    return _SQRT_2PI * math.exp(0.5 * (p @ p - a @ a)) / float((p - a) @ (p - a))


def asymptotic_law(wedge, a, x, spec=DEFAULT_SPEC):
    """Asymptotic law of ``P_x[tau > t]`` for drift ``a`` in ``wedge``."""
    if not isinstance(wedge, Wedge):
        wedge = Wedge(float(wedge))
    a = np.asarray(a, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if a.shape != (2,) or x.shape != (2,):
        raise DomainError("wedge laws need 2-dimensional drift and start point")
    if wedge.locate(x) != "interior":
        raise DomainError(f"start point {x.tolist()} must be interior")
    regime, gamma, alpha, form = exponents(wedge, a)
    beta = wedge.beta
    rx, thx = wedge.to_polar(x)
    u = harmonic_u(beta, rx, thx)
    ac = _canonical(wedge, a)
    xc = _canonical(wedge, x)
    prov = {"law": regime.letter}

    if regime is Regime.POLAR_INTERIOR:
        kappa, err = kappa_a(beta, ac)
        pref = kappa * math.exp(-float(ac @ xc)) * u
        prov.update(kappa=kappa, kappa_quad_error=err, h="e^{-<a,x>} u(x)")
    elif regime is Regime.ZERO:
        kappa = kappa_b(beta)
        pref = kappa * u
        prov.update(kappa=kappa, h="u(x)")
    elif regime is Regime.INTERIOR:
        d2 = float((x - a) @ (x - a))
        p = heat_kernel_wedge(wedge, 1.0, x, a, spec)
        pref = 2.0 * math.pi * math.exp(0.5 * d2) * p
        prov.update(kernel=p)
    elif regime is Regime.BOUNDARY:
        d2 = float((x - a) @ (x - a))
        dn = normal_derivative_wedge(wedge, x, a, spec)
        pref = _SQRT_2PI * math.exp(0.5 * d2) * dn
        prov.update(normal_derivative=dn)
    elif regime is Regime.NON_POLAR_EXTERIOR:
        proj = project_onto_cone(wedge, a)
        d2 = float((x - a) @ (x - a))
        terms = []
        for p in proj.minimizers:
            k = kappa_e(p, a)
            dn = normal_derivative_wedge(wedge, x, p, spec)
            terms.append({"point": p.tolist(), "kappa": k, "normal_derivative": dn})
        pref = math.exp(0.5 * d2) * sum(t["kappa"] * t["normal_derivative"] for t in terms)
        prov.update(contact_points=terms)
    else:
        if beta > math.pi:
            raise AssertionError("polar-boundary drift cannot occur for reflex wedges")
        kappa = kappa_f(beta, float(np.hypot(*a)))
        pref = kappa * math.exp(-float(ac @ xc)) * u
        prov.update(kappa=kappa, h="e^{-<a,x>} u(x)", doubled=abs(beta - math.pi) <= 1e-12)

    return AsymptoticLaw(regime, gamma, alpha, float(pref), form, prov)


def halfline_law(x, a):
    """Law on ``(0, inf)``: the three one-dimensional regimes."""
    x, a = float(x), float(a)
    if not x > 0.0:
        raise DomainError(f"start point must be positive, got {x!r}")
    if a < 0.0:
        pref = math.sqrt(2.0 / math.pi) * x * math.exp(-a * x) / (a * a)
        return AsymptoticLaw(Regime.POLAR_INTERIOR, 0.5 * a * a, 1.5, pref, (Fraction(0), Fraction(3, 2)))
    if a == 0.0:
        pref = math.sqrt(2.0 / math.pi) * x
        return AsymptoticLaw(Regime.ZERO, 0.0, 0.5, pref, (Fraction(0), Fraction(1, 2)))
    return AsymptoticLaw(Regime.INTERIOR, 0.0, 0.0, -math.expm1(-2.0 * a * x))


def halfline_law_sqrt2pi(x, a):
    """Negative-drift half-line law with a ``1/sqrt(2 pi)`` constant.

    Kept as a reference point: the true constant is ``sqrt(2/pi)``, twice this.
    """
    x, a = float(x), float(a)
    if not (x > 0.0 and a < 0.0):
        raise DomainError("this law covers x > 0, a < 0 only")
    pref = x * math.exp(-a * x) / (_SQRT_2PI * a * a)
    return AsymptoticLaw(Regime.POLAR_INTERIOR, 0.5 * a * a, 1.5, pref, (Fraction(0), Fraction(3, 2)))


def weyl_interior_limit(a, x):
    """``e^{-<a,x>} det(e^{x_i a_j})``: limit for a drift inside a Weyl chamber."""
    a = np.asarray(a, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if a.shape != x.shape:
        raise DomainError("drift and start point dimensions differ")
    if not (np.all(np.diff(a) > 0.0) and np.all(np.diff(x) > 0.0)):
        raise DomainError("drift and start point must be strictly increasing")
    return math.exp(-float(a @ x)) * float(np.linalg.det(np.exp(np.outer(x, a))))


@dataclass(frozen=True)
class RatioDiagnostic:
    t_grid: tuple
    ratios: tuple
    trend: str


def ratio_diagnostic(law, exact, t_grid):
    """Compare ``exact(t)`` against the law along an increasing horizon grid.

    ``exact`` returns a probability or anything with a ``.p`` attribute.
    The verdict is ``converging`` when ``|ratio - 1|`` strictly decreases and
    ends below 0.1, ``diverging`` when it strictly increases, otherwise
    ``inconclusive``.
    """
    grid = [float(t) for t in t_grid]
    if len(grid) < 3:
        raise DomainError("ratio diagnostic needs at least three horizons")
    if any(s >= t for s, t in zip(grid, grid[1:])):
        raise DomainError(f"horizons must be strictly increasing, got {grid}")
    ratios = []
    for t in grid:
        v = exact(t)
        p = float(getattr(v, "p", v))
        ratios.append(math.exp(math.log(p) - law.log_value(t)) if p > 0.0 else 0.0)
    dev = [abs(r - 1.0) for r in ratios]
    if all(b < c for c, b in zip(dev, dev[1:])) and dev[-1] < 0.1:
        trend = "converging"
    elif all(b > c for c, b in zip(dev, dev[1:])):
        trend = "diverging"
    else:
        trend = "inconclusive"
    return RatioDiagnostic(tuple(grid), tuple(ratios), trend)
