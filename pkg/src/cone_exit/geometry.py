"""Cones, drift regimes and projections.

Planar wedges are the main object. A wedge of opening ``beta`` and
rotation ``r`` is the open set ``{rho*e^{i theta}: rho > 0, r < theta < r + beta}``.
The half-line and Weyl chambers are also here because the kernel and
Monte Carlo modules need their faces.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * math.pi

#: Absolute tolerance (radians) used when deciding edge membership.
ANGLE_TOL = 1e-12

#: Relative tolerance for declaring two projection candidates tied.
TIE_RTOL = 1e-12


class Regime(enum.Enum):
    """Position of a drift relative to a cone."""

    POLAR_INTERIOR = "A"
    ZERO = "B"
    INTERIOR = "C"
    BOUNDARY = "D"
    NON_POLAR_EXTERIOR = "E"
    POLAR_BOUNDARY = "F"

    @property
    def letter(self):
        return self.value

    @classmethod
    def from_letter(cls, letter):
        return cls(letter.upper())


class PolarMembership(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    EXTERIOR = "exterior"


def _as_vector(a, dim=None, name="drift"):
    v = np.asarray(a, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite entries: {v}")
    if dim is not None and v.shape[0] != dim:
        raise DomainError(f"{name} must be {dim}-dimensional, got {v.shape[0]}")
    return v


def _mod2pi(angle):
    r = math.fmod(angle, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    # fmod can return exactly 2*pi after the shift for tiny negatives
    return 0.0 if r >= TWO_PI else r


def _unit(angle):
    return np.array([math.cos(angle), math.sin(angle)])


@dataclass(frozen=True)
class Wedge:
    """Open planar wedge with apex at the origin."""

    beta: float
    rotation: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.beta) and 0.0 < self.beta < TWO_PI):
            raise DomainError(
                f"wedge opening must lie in (0, 2*pi), got {self.beta!r}"
            )
        if not math.isfinite(self.rotation):
            raise DomainError(f"rotation must be finite, got {self.rotation!r}")

    @property
    def dim(self):
        return 2

    @property
    def is_convex(self):
        return self.beta <= math.pi

    def edge_directions(self):
        """Unit vectors along the lower (angle 0) and upper (angle beta) edges."""
        return _unit(self.rotation), _unit(self.rotation + self.beta)

    def inward_normals(self):
        """Unit normals of the two edge lines, pointing into the wedge."""
        r, b = self.rotation, self.rotation + self.beta
        return (
            np.array([-math.sin(r), math.cos(r)]),
            np.array([math.sin(b), -math.cos(b)]),
        )

    def rotated(self, phi):
        return Wedge(self.beta, self.rotation + phi)

    def relative_angle(self, point):
        """Polar angle of ``point`` measured from the lower edge, in [0, 2*pi)."""
        p = _as_vector(point, 2, "point")
        return _mod2pi(math.atan2(p[1], p[0]) - self.rotation)

    def to_polar(self, point):
        """Return ``(rho, theta)`` with theta measured from the lower edge.

        Angles within ``ANGLE_TOL`` below zero are reported as 0 so that
        points computed on the lower edge do not wrap to ``2*pi``.
        """
        p = _as_vector(point, 2, "point")
        rho = math.hypot(p[0], p[1])
        theta = self.relative_angle(p)
        if theta > TWO_PI - ANGLE_TOL:
            theta = 0.0
        return rho, theta

    def from_polar(self, rho, theta):
        return rho * _unit(self.rotation + theta)

    def locate(self, point, tol=ANGLE_TOL):
        """Classify a point as ``"interior"``, ``"boundary"`` or ``"exterior"``."""
        rho, theta = self.to_polar(point)
        if rho == 0.0:
            return "boundary"
        if abs(theta) <= tol or abs(theta - self.beta) <= tol:
            return "boundary"
        if 0.0 < theta < self.beta:
            return "interior"
        return "exterior"

    def contains(self, point):
        return self.locate(point) == "interior"


def quarter_plane():
    return Wedge(math.pi / 2.0)


@dataclass(frozen=True)
class HalfLine:
    """The cone (0, inf) in dimension one."""

    @property
    def dim(self):
        return 1

    def inward_normals(self):
        return (np.array([1.0]),)

    def contains(self, point):
        p = _as_vector(point, 1, "point")
        return bool(p[0] > 0.0)


@dataclass(frozen=True)
class WeylChamber:
    """Type-A Weyl chamber ``{x_1 < x_2 < ... < x_d}``."""

    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"Weyl chamber dimension must be >= 1, got {self.d!r}")

    @property
    def dim(self):
        return self.d

    def inward_normals(self):
        out = []
        for i in range(self.d - 1):
            n = np.zeros(self.d)
            n[i] = -1.0
            n[i + 1] = 1.0
            out.append(n / math.sqrt(2.0))
        return tuple(out)

    def contains(self, point):
        p = _as_vector(point, self.d, "point")
        return bool(np.all(np.diff(p) > 0.0))

    def is_interior_drift(self, a):
        return self.contains(a)


@dataclass(frozen=True)
class Projection:
    """Nearest points of the closed cone to a drift vector."""

    distance: float
    gamma: float
    minimizers: tuple


def _check_wedge(wedge):
    if not isinstance(wedge, Wedge):
        raise DomainError(f"expected a Wedge, got {type(wedge).__name__}")


def _drift_angle(wedge, a):
    return wedge.relative_angle(a)


def _near(angle, target, tol):
    # distance on the circle
    d = abs(_mod2pi(angle - target))
    return min(d, TWO_PI - d) <= tol


def polar_membership(wedge, a, tol=ANGLE_TOL):
    """Locate ``a`` relative to the polar cone of ``wedge``.

    For a convex wedge the polar cone is the closed sector of directions
    ``[beta + pi/2, 3*pi/2]`` (relative to the lower edge). For ``beta > pi``
    it reduces to the origin.
    """
    _check_wedge(wedge)
    a = _as_vector(a, 2)
    if not np.any(a):
        return PolarMembership.BOUNDARY
    if wedge.beta > math.pi + tol:
        return PolarMembership.EXTERIOR
    phi = _drift_angle(wedge, a)
    lo, hi = wedge.beta + math.pi / 2.0, 1.5 * math.pi
    if _near(phi, lo, tol) or _near(phi, hi, tol):
        return PolarMembership.BOUNDARY
    if lo < phi < hi:
        return PolarMembership.INTERIOR
    return PolarMembership.EXTERIOR


def classify_regime(wedge, a, tol=ANGLE_TOL):
    """Return the regime (A-F) of drift ``a`` for ``wedge``."""
    _check_wedge(wedge)
    a = _as_vector(a, 2)
    if not np.any(a):
        return Regime.ZERO
    phi = _drift_angle(wedge, a)
    if _near(phi, 0.0, tol) or _near(phi, wedge.beta, tol):
        return Regime.BOUNDARY
    if 0.0 < phi < wedge.beta:
        return Regime.INTERIOR
    membership = polar_membership(wedge, a, tol)
    if membership is PolarMembership.INTERIOR:
        return Regime.POLAR_INTERIOR
    if membership is PolarMembership.BOUNDARY:
        return Regime.POLAR_BOUNDARY
    return Regime.NON_POLAR_EXTERIOR


def regime_boundary_distance(wedge, a):
    """Angular distance (radians) from ``a`` to the nearest regime boundary.

    The zero drift is its own regime and returns 0.
    """
    _check_wedge(wedge)
    a = _as_vector(a, 2)
    if not np.any(a):
        return 0.0
    phi = _drift_angle(wedge, a)
    targets = [0.0, wedge.beta]
    if wedge.beta <= math.pi:
        targets += [wedge.beta + math.pi / 2.0, 1.5 * math.pi]
    best = math.inf
    for target in targets:
        d = abs(_mod2pi(phi - target))
        best = min(best, d, TWO_PI - d)
    return best


def project_onto_cone(wedge, a, tol=ANGLE_TOL):
    """Nearest point(s) of the closed wedge to ``a``.

    Ties only happen for reflex wedges (``beta > pi``) with ``a`` on the
    bisector of the excluded sector; both minimizers are returned then.
    """
    _check_wedge(wedge)
    a = _as_vector(a, 2)
    regime = classify_regime(wedge, a, tol)
    if regime in (Regime.ZERO, Regime.INTERIOR, Regime.BOUNDARY):
        return Projection(0.0, 0.0, (a.copy(),))
    if regime in (Regime.POLAR_INTERIOR, Regime.POLAR_BOUNDARY):
        dist = float(np.hypot(*a))
        return Projection(dist, 0.5 * dist * dist, (np.zeros(2),))

    candidates = []
    for e in wedge.edge_directions():
        s = max(float(a @ e), 0.0)
        foot = s * e
        candidates.append((float(np.hypot(*(a - foot))), foot))
    dist = min(c[0] for c in candidates)
    minimizers = tuple(
        foot for d, foot in candidates if d <= dist * (1.0 + TIE_RTOL)
    )
    if len(minimizers) == 2 and np.allclose(minimizers[0], minimizers[1]):
        minimizers = minimizers[:1]
    return Projection(dist, 0.5 * dist * dist, minimizers)
