import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cone_exit.errors import DomainError, QuadratureError
from cone_exit.geometry import Wedge
from cone_exit.survival import (
    QuadratureSpec,
    SurvivalValue,
    _clamp,
    survival_halfline,
    survival_quarter,
    survival_wedge_exact,
)
from oracles import halfline_survival_erf, normal_cdf

QP = Wedge(math.pi / 2)


def test_halfline_zero_drift_reflection():
    for x, t in ((1.0, 1.0), (0.3, 5.0), (2.0, 0.1)):
        assert survival_halfline(x, 0.0, t).p == pytest.approx(2 * normal_cdf(x / math.sqrt(t)) - 1, rel=1e-13)


def test_halfline_positive_drift_limit():
    assert survival_halfline(0.7, 0.5, 1e4).p == pytest.approx(1 - math.exp(-0.7), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 5), st.floats(-3, 3), st.floats(0.01, 20))
def test_halfline_matches_erf_form(x, a, t):
    ref = halfline_survival_erf(x, a, t)
    v = survival_halfline(x, a, t)
    assert v.method == "closed-form"
    assert v.p == pytest.approx(ref, rel=1e-9, abs=1e-15)


def test_halfline_deep_tail_stays_positive():
    p = survival_halfline(1.0, -1.0, 500.0).p
    assert 0 < p < 1e-100
    assert math.isfinite(math.log(p))


def test_halfline_domain():
    with pytest.raises(DomainError):
        survival_halfline(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        survival_halfline(1.0, 1.0, 0.0)


def test_quarter_examples():
    assert survival_quarter([1, 1], [0, 0], 1).p == pytest.approx((2 * normal_cdf(1) - 1) ** 2, rel=1e-13)
    ps = [survival_quarter([0.5, 1.2], [0.3, -0.4], t).p for t in (0.5, 1, 2, 4, 8)]
    assert all(b < a for a, b in zip(ps, ps[1:]))


def test_exact_matches_quarter_product():
    rng = np.random.default_rng(12)
    for _ in range(10):
        x = rng.uniform(0.1, 3, 2)
        a = rng.uniform(-2, 2, 2)
        t = rng.uniform(0.1, 8)
        v = survival_wedge_exact(QP, a, x, t)
        assert v.method == "quadrature"
        assert abs(v.p - survival_quarter(x, a, t).p) <= max(1e-6, 3 * v.est_quad_error)


def test_small_time_deep_start_is_one():
    w = Wedge(2 * math.pi / 3)
    v = survival_wedge_exact(w, [0, 0], w.from_polar(5, w.beta / 2), 0.01)
    assert v.p > 1 - 1e-6


def test_monotone_in_time():
    w = Wedge(2 * math.pi / 3)
    x = w.from_polar(1.0, 0.9)
    ps = [survival_wedge_exact(w, [0.3, -0.5], x, t).p for t in (1, 2, 4, 8)]
    assert all(b < a for a, b in zip(ps, ps[1:]))


def test_monotone_along_bisector():
    w = Wedge(1.3)
    ps = [survival_wedge_exact(w, [0.2, 0.1], w.from_polar(r, 0.65), 2.0).p for r in (0.2, 0.5, 1.0, 2.0)]
    assert all(b > a for a, b in zip(ps, ps[1:]))


def test_zero_drift_equals_kernel_mass():
    from test_kernel import _integrate_kernel

    for beta in (1.0, 4.0):
        w = Wedge(beta)
        x = w.from_polar(1.0, beta / 2)
        mass, _ = _integrate_kernel(w, 1.0, x, 300, 200)
        assert survival_wedge_exact(w, [0, 0], x, 1.0).p == pytest.approx(mass, rel=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.3, 6.0), st.floats(0.2, 3), st.floats(0.05, 0.95), st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 16))
def test_time_and_scaled_forms_agree(beta, r, f, a1, a2, t):
    w = Wedge(beta)
    x = w.from_polar(r, f * beta)
    p1 = survival_wedge_exact(w, [a1, a2], x, t).p
    p2 = survival_wedge_exact(w, [a1, a2], x, t, form="scaled").p
    assert p2 == pytest.approx(p1, rel=1e-6, abs=1e-300)


def test_rotation_invariance():
    w = Wedge(1.1)
    x = w.from_polar(0.8, 0.4)
    a = np.array([0.3, -0.7])
    phi = 2.2
    R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    p = survival_wedge_exact(w, a, x, 3.0).p
    q = survival_wedge_exact(w.rotated(phi), R @ a, R @ x, 3.0).p
    assert q == pytest.approx(p, rel=1e-9)


def test_self_check_failure_reports_both_values():
    crude = QuadratureSpec(radial_nodes=8, angular_nodes=8, self_check_tol=1e-300)
    with pytest.raises(QuadratureError) as info:
        survival_wedge_exact(Wedge(2.5), [0.4, 0.9], Wedge(2.5).from_polar(1, 1), 3.0, crude)
    assert info.value.coarse != info.value.fine


def test_bad_inputs():
    with pytest.raises(DomainError):
        survival_wedge_exact(QP, [0, 0], [1.0, -1.0], 1.0)
    with pytest.raises(DomainError):
        survival_wedge_exact(QP, [0, 0], [1.0, 1.0], -1.0)
    with pytest.raises(DomainError):
        survival_wedge_exact(QP, [0, 0], [1.0, 1.0], 1.0, form="other")
    with pytest.raises(DomainError):
        QuadratureSpec(radial_nodes=4)


def test_clamp_warns_above_one():
    with pytest.warns(UserWarning):
        assert _clamp(1.0 + 1e-6, "quadrature") == 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert _clamp(1.0 + 1e-12, "quadrature") == 1.0
        assert _clamp(-1e-18, "quadrature") == 0.0


def test_value_record():
    v = SurvivalValue(0.5, "product")
    assert v.est_quad_error == 0.0
