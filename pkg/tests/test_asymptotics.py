import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cone_exit.asymptotics import (
    ALPHA_FORM,
    alpha_label,
    asymptotic_law,
    exponents,
    halfline_law,
    ratio_diagnostic,
    weyl_interior_limit,
)
from cone_exit.errors import DomainError
from cone_exit.geometry import Regime, Wedge, project_onto_cone
from cone_exit.kernel import heat_kernel_halfline, heat_kernel_weyl
from cone_exit.survival import survival_halfline, survival_quarter, survival_wedge_exact

QP = Wedge(math.pi / 2)
W3 = Wedge(2 * math.pi / 3)
X3 = W3.from_polar(1.0, W3.beta / 2)


def polar(r, th):
    return np.array([r * math.cos(th), r * math.sin(th)])


QUARTER_DRIFTS = {
    "A": [-1.0, -1.0],
    "B": [0.0, 0.0],
    "C": [1.0, 1.0],
    "D": [1.0, 0.0],
    "E": [1.0, -1.0],
    "F": [0.0, -1.0],
}


def test_quarter_alpha_table():
    expected = {"A": 3, "B": 1, "C": 0, "D": 0.5, "E": 1.5, "F": 2}
    for letter, a in QUARTER_DRIFTS.items():
        law = asymptotic_law(QP, a, [0.7, 1.1])
        assert law.regime.letter == letter
        assert law.alpha == pytest.approx(expected[letter], abs=1e-15)
        assert law.gamma == project_onto_cone(QP, a).gamma
        assert law.prefactor > 0


def test_general_wedge_alphas():
    assert asymptotic_law(W3, [-0.6, -0.8], X3).alpha == pytest.approx(2.5)
    assert asymptotic_law(W3, polar(1, W3.beta + math.pi / 2), X3).alpha == pytest.approx(1.75)


def test_alpha_forms_are_exact_rationals():
    assert ALPHA_FORM[Regime.POLAR_INTERIOR] == (Fraction(1), Fraction(1))
    assert alpha_label(Fraction(1, 2), Fraction(1)) == "alpha1/2+1"
    assert alpha_label(Fraction(0), Fraction(3, 2)) == "3/2"
    assert alpha_label(Fraction(1), Fraction(1)) == "alpha1+1"


def _half(x, a):
    return halfline_law(x, a)


@pytest.mark.parametrize("letter", list(QUARTER_DRIFTS))
def test_quarter_laws_factor_into_halfline_laws(letter):
    a = np.array(QUARTER_DRIFTS[letter])
    x = np.array([0.7, 1.1])
    law = asymptotic_law(QP, a, x)
    l1, l2 = _half(x[0], a[0]), _half(x[1], a[1])
    assert law.alpha == pytest.approx(l1.alpha + l2.alpha, abs=1e-14)
    assert law.gamma == pytest.approx(l1.gamma + l2.gamma, rel=1e-14, abs=0)
    assert law.prefactor == pytest.approx(l1.prefactor * l2.prefactor, rel=1e-9)


def test_halfplane_polar_boundary_uses_doubled_constant():
    hp = Wedge(math.pi)
    x = np.array([0.3, 0.8])
    law = asymptotic_law(hp, [0.0, -1.3], x)
    assert law.regime is Regime.POLAR_BOUNDARY
    assert law.provenance["doubled"]
    ref = halfline_law(0.8, -1.3)
    assert law.alpha == pytest.approx(ref.alpha)
    assert law.prefactor == pytest.approx(ref.prefactor, rel=1e-12)


def test_halfline_regime_c_from_kernel():
    for x, a in ((0.4, 0.7), (1.0, 2.0), (2.5, 0.1)):
        lhs = math.sqrt(2 * math.pi) * math.exp((x - a) ** 2 / 2) * heat_kernel_halfline(1.0, x, a)
        assert lhs == pytest.approx(1 - math.exp(-2 * a * x), rel=1e-13)
        assert halfline_law(x, a).prefactor == pytest.approx(lhs, rel=1e-13)


def test_halfline_diagnostic():
    d = ratio_diagnostic(halfline_law(1, -1), lambda t: survival_halfline(1, -1, t), [10, 20, 40])
    assert d.trend == "converging"
    # slow 1 - O(1/t) approach: at t = 40 the gap is still about 8%
    assert d.ratios[-1] == pytest.approx(0.92193054677, rel=1e-9)


def test_regime_c_converges_from_above():
    x = [0.5, 0.9]
    law = asymptotic_law(QP, [0.8, 0.4], x)
    assert law.prefactor == pytest.approx(survival_quarter(x, [0.8, 0.4], 1e6).p, rel=1e-12)
    d = ratio_diagnostic(law, lambda t: survival_quarter(x, [0.8, 0.4], t), [2, 4, 8, 16])
    assert d.trend == "converging"
    assert all(r > 1 for r in d.ratios)


def test_quarter_regime_b_diagnostic():
    x = [1.0, 1.0]
    law = asymptotic_law(QP, [0, 0], x)
    d = ratio_diagnostic(law, lambda t: survival_wedge_exact(QP, [0, 0], x, t), [8, 16, 32, 64])
    assert d.trend == "converging"


def test_case_b_cross_check():
    law = asymptotic_law(W3, [0, 0], X3)
    p1 = math.pi / W3.beta
    extracted = 64 ** (p1 / 2) * survival_wedge_exact(W3, [0, 0], X3, 64).p
    assert extracted == pytest.approx(law.prefactor, rel=0.05)


def test_weyl_interior_limit():
    a, x = np.array([-1.0, 1.0]), np.array([0.0, 1.0])
    lim = weyl_interior_limit(a, x)
    assert lim == pytest.approx(1 - math.exp(-2), rel=1e-14)
    km = 2 * math.pi * math.exp(float((x - a) @ (x - a)) / 2) * heat_kernel_weyl(1.0, x, a)
    assert km == pytest.approx(lim, rel=1e-12)
    with pytest.raises(DomainError):
        weyl_interior_limit([1.0, -1.0], x)


def test_gamma_consistency_many():
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        w = Wedge(rng.uniform(0.05, 2 * math.pi - 0.05))
        a = rng.normal(size=2) * 2
        _, gamma, _, _ = exponents(w, a)
        assert gamma == project_onto_cone(w, a).gamma


@settings(max_examples=60, deadline=None)
@given(st.floats(0.3, 6.0), st.floats(0.2, 2.5), st.floats(0.05, 0.95), st.floats(0.1, 2), st.floats(0, 2 * math.pi))
def test_prefactor_positive(beta, r, f, ra, phi):
    w = Wedge(beta)
    law = asymptotic_law(w, polar(ra, phi), w.from_polar(r, f * beta))
    assert law.prefactor > 0 and math.isfinite(law.prefactor)


@pytest.mark.parametrize("letter", ["A", "B", "C", "D", "E", "F"])
def test_rotation_invariance(letter):
    drifts = {
        "A": [-0.6, -0.8],
        "B": [0, 0],
        "C": polar(1, 1.0),
        "D": polar(1, 0.0),
        "E": polar(1, -0.7),
        "F": polar(1, W3.beta + math.pi / 2),
    }
    a = np.asarray(drifts[letter], dtype=float)
    phi = 0.9
    R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    l0 = asymptotic_law(W3, a, X3)
    l1 = asymptotic_law(W3.rotated(phi), R @ a, R @ X3)
    assert l1.regime is l0.regime
    assert l1.prefactor == pytest.approx(l0.prefactor, rel=1e-12)
    assert l1.gamma == pytest.approx(l0.gamma, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("letter", ["A", "B", "C", "D", "E", "F"])
def test_brownian_scaling_covariance(letter):
    c = 2.0
    drifts = {
        "A": [-0.6, -0.8],
        "B": [0, 0],
        "C": polar(1, 1.0),
        "D": polar(1, 0.0),
        "E": polar(1, -0.7),
        "F": polar(1, W3.beta + math.pi / 2),
    }
    a = np.asarray(drifts[letter], dtype=float)
    l0 = asymptotic_law(W3, a, X3)
    l1 = asymptotic_law(W3, a / c, c * X3)
    # law(a/c, cx) at c^2 t must equal law(a, x) at t
    assert l1.prefactor * c ** (-2 * l1.alpha) == pytest.approx(l0.prefactor, rel=1e-9)
    assert l1.gamma * c * c == pytest.approx(l0.gamma, rel=1e-12, abs=1e-15)
    t = 4.0
    p0 = survival_wedge_exact(W3, a, X3, t).p
    p1 = survival_wedge_exact(W3, a / c, c * X3, c * c * t).p
    assert p1 == pytest.approx(p0, rel=1e-6)


def test_law_rejects_boundary_start():
    with pytest.raises(DomainError):
        asymptotic_law(QP, [1, 1], [1.0, 0.0])


def test_ratio_diagnostic_validation_and_verdicts():
    law = halfline_law(1.0, 0.5)
    with pytest.raises(DomainError):
        ratio_diagnostic(law, lambda t: 0.5, [1, 2])
    with pytest.raises(DomainError):
        ratio_diagnostic(law, lambda t: 0.5, [1, 3, 2])
    lim = law.prefactor
    assert ratio_diagnostic(law, lambda t: lim * (1 + 1 / t), [10, 20, 40]).trend == "converging"
    assert ratio_diagnostic(law, lambda t: lim * (1 + t), [1, 2, 4]).trend == "diverging"
    assert ratio_diagnostic(law, lambda t: lim * (1 + (t - 2) ** 2), [1, 2, 4]).trend == "inconclusive"
