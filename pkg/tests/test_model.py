import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import fitted_systems

from hpaxis.errors import DomainError
from hpaxis.model import (
    PHYSIOLOGY,
    Equilibrium,
    HillFeedback,
    SystemParams,
    feedback_deriv,
    feedback_eval,
    find_equilibrium,
    fit_params,
    reference_params,
)


class ConstantFeedback:
    """Duck-typed feedback with zero slope, for the closed-form equilibrium oracle."""

    def __init__(self, value):
        self.value = value

    def __call__(self, u):
        return self.value

    def deriv(self, u):
        return 0.0


def test_hill_at_half_saturation():
    f = HillFeedback(k=2.0, eta=0.5, c=1000.0, alpha=4.0)
    assert f(1000.0) == pytest.approx(2.0 * (1 - 0.25))
    assert f(0.0) == 2.0


def test_hill_large_alpha_no_overflow():
    f = HillFeedback(k=1.0, eta=1.0, c=2000.0, alpha=8.0)
    assert f(1e12) == pytest.approx(0.0, abs=1e-12)
    assert np.isfinite(f.deriv(1e12))


@pytest.mark.parametrize("alpha", [1.0, 2.5, 6.0, 8.0])
@pytest.mark.parametrize("u", [10.0, 1500.0, 2000.0, 3055.0, 9000.0])
def test_deriv_matches_finite_difference(alpha, u):
    f = HillFeedback(k=3.0, eta=0.9, c=2000.0, alpha=alpha)
    h = 1e-4 * u
    fd = (f(u + h) - f(u - h)) / (2 * h)
    assert f.deriv(u) == pytest.approx(fd, rel=1e-6)
    assert feedback_deriv(f, u) == f.deriv(u)
    assert feedback_eval(f, u) == f(u)


def test_elasticity_matches_definition():
    f = HillFeedback(k=3.0, eta=0.7, c=2000.0, alpha=5.0)
    u = 2500.0
    assert f.elasticity(u) == pytest.approx(u * f.deriv(u) / f(u), rel=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [dict(k=0.0), dict(eta=0.0), dict(eta=1.2), dict(c=-1.0), dict(alpha=0.5)],
)
def test_hill_rejects_bad_parameters(kwargs):
    base = dict(k=1.0, eta=0.5, c=2000.0, alpha=2.0)
    with pytest.raises(DomainError):
        HillFeedback(**{**base, **kwargs})


def test_hill_rejects_negative_concentration():
    with pytest.raises(DomainError):
        HillFeedback(1.0, 0.5, 2000.0, 2.0)(-1.0)


def test_reference_fit_values():
    p = reference_params(6.0, 1.0)
    assert p.k3 == pytest.approx(1.31985, abs=1e-4)
    assert p.w1 == pytest.approx(math.log(2) / 4.0)
    assert p.f1(3055.0) == pytest.approx(1.3272, abs=1e-3)
    assert p.f2(3055.0) == pytest.approx(0.0955, abs=1e-3)


def test_reference_fit_alpha3():
    p = reference_params(3.0, 0.95)
    assert p.f1.k == pytest.approx(5.14, abs=1e-2)
    assert p.f2.k == pytest.approx(0.36, abs=1e-2)


@pytest.mark.parametrize("alpha", [0.5, 9.0])
def test_fit_rejects_alpha_out_of_range(alpha):
    with pytest.raises(DomainError):
        reference_params(alpha, 0.5)


def test_fit_rejects_nonpositive_inputs():
    with pytest.raises(DomainError):
        fit_params(**{**PHYSIOLOGY, "T2": 0.0}, alpha=2.0, eta=0.5, mu=0.5, c=2000.0)


def test_equilibrium_constant_feedback_closed_form():
    p = SystemParams(0.2, 0.05, 0.01, 1.5, ConstantFeedback(2.0), ConstantFeedback(0.3))
    e = find_equilibrium(p)
    assert e.x3 == pytest.approx(1.5 * 2.0 * 0.3 / (0.2 * 0.05 * 0.01), rel=1e-12)
    assert e.x1 == pytest.approx(2.0 / 0.2)
    assert e.a == 0.0 and e.b == 0.0


def test_equilibrium_reproduces_means(case6):
    _, e = case6
    assert e.x3 == pytest.approx(3055.0, abs=0.01)
    assert e.x1 == pytest.approx(7.659, rel=1e-9)
    assert e.x2 == pytest.approx(21.0, rel=1e-9)


def test_params_roundtrip(case6):
    p, e = case6
    assert SystemParams.from_dict(p.to_dict()) == p
    assert set(e.to_dict()) == {"x1", "x2", "x3", "a", "b"}


def test_params_from_dict_rejects_unknown_keys(case6):
    d = case6[0].to_dict()
    d["extra"] = 1.0
    with pytest.raises(DomainError):
        SystemParams.from_dict(d)


@given(fitted_systems())
def test_equilibrium_is_fixed_point(sys_):
    p, e = sys_
    g = p.k3 * p.f1(e.x3) * p.f2(e.x3) / (p.w1 * p.w2 * p.w3)
    assert abs(e.x3 - g) <= 1e-10 * max(e.x3, 1.0)
    assert e.a >= 0 and e.b >= 0


@given(
    st.floats(1.0, 8.0), st.floats(0.05, 1.0), st.floats(200.0, 10_000.0)
)
def test_fit_roundtrip_recovers_means(alpha, eta, c):
    p = reference_params(alpha, eta, c)
    e = find_equilibrium(p)
    assert e.x3 == pytest.approx(PHYSIOLOGY["xbar3"], rel=1e-9)
    assert e.x1 == pytest.approx(PHYSIOLOGY["xbar1"], rel=1e-9)
    assert e.x2 == pytest.approx(PHYSIOLOGY["xbar2"], rel=1e-9)


def test_equilibrium_type_is_frozen(case6):
    with pytest.raises(Exception):
        case6[1].x1 = 0.0
    assert isinstance(case6[1], Equilibrium)


@given(st.floats(1.0, 8.0), st.floats(0.05, 1.0), st.floats(1.0, 1e4))
def test_deriv_finite_difference_property(alpha, eta, u):
    f = HillFeedback(k=1.0, eta=eta, c=2000.0, alpha=alpha)
    h = 1e-5 * u
    # difference the saturating part: f itself sits near k and loses digits to cancellation
    fd = -eta * (f.saturation(u + h) - f.saturation(u - h)) / (2 * h)
    assert f.deriv(u) == pytest.approx(fd, rel=1e-6)


def test_feedback_examples(case6):
    p, e = case6
    assert p.f1(0.0) == p.f1.k
    assert p.f1.elasticity(3055.0) == pytest.approx(-6 * 3055.0**6 / (2000.0**6 + 3055.0**6), rel=1e-12)
    assert p.f1.elasticity(3055.0) == pytest.approx(-5.5622, abs=1e-4)
    assert HillFeedback(1.0, 1.0, 2000.0, 6.0).deriv(0.0) == 0.0


def test_elasticity_at_half_saturation():
    for k in (0.5, 3.0):
        f = HillFeedback(k, 0.6, 1500.0, 4.0)
        assert f.elasticity(1500.0) == pytest.approx(-4 * 0.6 / (4 * (1 - 0.3)), rel=1e-12)


def test_gains_from_elasticity(case6):
    p, e = case6
    el = -p.f1.elasticity(e.x3)
    assert e.a == pytest.approx(p.w2 * p.w3 * el, rel=1e-9)
    assert e.b == pytest.approx(p.w1 * p.w2 * p.w3 * el, rel=1e-9)
    assert e.a == pytest.approx(1.758e-3, rel=1e-3)
    assert e.b == pytest.approx(3.046e-4, rel=1e-3)
