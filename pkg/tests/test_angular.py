import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspkit.angular import (SUPPORTED_DEGREES, AngularField, apply_L2, degree_power, fit_C_vector,
                             fit_gradient_eta, fit_hessian_chi, harmonic_coefficients, l2_limit, lm_index,
                             smooth_parts, sphere_rule, spherical_average)
from cuspkit.errors import ConfigurationError

from conftest import rho_handle

FOUR_PI = 4 * np.pi


def field(fn, degree=17):
    rule = sphere_rule(degree)
    return AngularField(rule, fn(rule.nodes))


@pytest.mark.parametrize("d", SUPPORTED_DEGREES)
def test_rule_moments(d):
    rule = sphere_rule(d)
    w1 = rule.nodes[:, 0]
    assert rule.weights.sum() == pytest.approx(FOUR_PI, abs=1e-12)
    assert abs(rule.integrate(w1)) < 1e-12
    assert rule.integrate(w1 ** 2) == pytest.approx(FOUR_PI / 3, abs=1e-10)
    assert np.all(rule.weights > 0)


def test_unsupported_degree():
    with pytest.raises(ConfigurationError):
        sphere_rule(7)


def test_rule_exactness_on_harmonics():
    rule = sphere_rule(17)
    f = AngularField(rule, np.ones(len(rule)))
    c = harmonic_coefficients(f, 8)
    assert c[0] == pytest.approx(np.sqrt(FOUR_PI), abs=1e-10)
    assert np.abs(c[1:]).max() < 1e-10


def test_coefficient_examples():
    c = harmonic_coefficients(field(lambda n: n[:, 0]), 8)
    p = degree_power(c)
    assert p[1] > 0.1 and np.delete(p, 1).max() < 1e-20
    c = harmonic_coefficients(field(lambda n: n[:, 0] ** 2), 8)
    assert c[0] / np.sqrt(FOUR_PI) == pytest.approx(1 / 3, abs=1e-12)
    p = degree_power(c)
    assert p[2] > 0.01 and np.sqrt(np.delete(p, [0, 2]).max()) < 1e-10


def test_aliasing_guard():
    with pytest.raises(ConfigurationError):
        harmonic_coefficients(field(lambda n: n[:, 0], 11), 8)


def test_l2_examples():
    assert np.abs(apply_L2(field(lambda n: np.ones(len(n)))).values).max() < 1e-10
    f = field(lambda n: n[:, 0])
    assert np.allclose(apply_L2(f).values, 2 * f.values, atol=1e-10)
    f = field(lambda n: n[:, 0] ** 2 - 1 / 3)
    assert np.allclose(apply_L2(f).values, 6 * f.values, atol=1e-10)


@given(st.lists(st.floats(-1, 1), min_size=25, max_size=25))
@settings(max_examples=30, deadline=None)
def test_parseval_and_l2_average(coefs):
    rule = sphere_rule(17)
    from cuspkit.angular import synthesize
    f = AngularField(rule, synthesize(rule, np.asarray(coefs)))
    c = harmonic_coefficients(f, 4)
    assert np.sum(c ** 2) <= f.norm() ** 2 * (1 + 1e-10) + 1e-12
    assert abs(rule.integrate(apply_L2(f, 4).values)) <= 1e-10 * max(1.0, f.norm())


def test_at_interpolates_band_limited_fields():
    f = field(lambda n: 2 * n[:, 0] ** 2 - 3 * n[:, 0] + 0.875)
    d = np.array([[1, 0, 0], [0, 1, 0], [1, 1, 1]]) / np.array([[1], [1], [np.sqrt(3)]])
    assert np.allclose(f.at(d), 2 * d[:, 0] ** 2 - 3 * d[:, 0] + 0.875, atol=1e-12)


def test_spherical_average_examples():
    rule = sphere_rule(17)
    assert spherical_average(rho_handle("1s"), rule, 1.0) == pytest.approx(FOUR_PI * np.exp(-1), rel=1e-13)
    r = 0.3
    assert spherical_average(rho_handle("2p"), rule, r) == pytest.approx(FOUR_PI / 3 * r * r * np.exp(-r / 2),
                                                                        rel=1e-13)
    # the l=1 term averages out; the radial Kato slope -Z remains
    r = 1e-3
    assert spherical_average(rho_handle("mixed"), rule, r) == pytest.approx(FOUR_PI * (1 - r), rel=1e-5)


def test_averaging_kills_l2(kind):
    rule = sphere_rule(17)
    for r in (1e-3, 0.1, 1.0):
        v = rho_handle(kind)(r * rule.nodes)
        lv = apply_L2(AngularField(rule, v, r)).values
        assert abs(rule.integrate(lv)) <= 1e-10 * max(abs(rule.integrate(np.abs(v))), 1e-300)


def eta(kind, Z=1.0):
    rho = rho_handle(kind, Z)
    return lambda x: np.exp(Z * np.linalg.norm(x, axis=-1)) * rho(x)


def test_gradient_eta_examples():
    assert np.allclose(fit_gradient_eta(eta("1s")).value, 0, atol=1e-8)
    assert np.allclose(fit_gradient_eta(eta("2s")).value, 0, atol=1e-8)
    g = fit_gradient_eta(eta("mixed"))
    assert np.allclose(g.value, (2, 0, 0), atol=1e-6) and not g.inconclusive


def test_C_vector_examples():
    C = fit_C_vector(eta("mixed"))
    assert np.allclose(C.value, (0.5, 0, 0), atol=1e-4)
    assert np.allclose(fit_C_vector(eta("2s")).value, 0, atol=1e-5)


@pytest.mark.parametrize("kind", ["1s", "2s", "2p"])
@pytest.mark.parametrize("Z", [1.0, 2.0, 3.0])
def test_symmetric_states_have_zero_C(kind, Z):
    assert np.linalg.norm(fit_C_vector(eta(kind, Z)).value) < 1e-5


def test_hessian_examples():
    H = fit_hessian_chi(eta("2p"))
    assert np.allclose(H.value, np.diag([2.0, 0, 0]), atol=1e-4)
    assert np.allclose(fit_hessian_chi(eta("1s")).value, 0, atol=1e-8)
    sp = smooth_parts(rho_handle("mixed"), 1.0)
    assert np.allclose(sp.hessian_chi, np.diag([2.0, 0, 0]) - np.eye(3) / 8, atol=1e-4)
    assert np.array_equal(sp.hessian_chi, sp.hessian_chi.T)
    assert not sp.diagnostics["inconclusive"]


def test_l2_limit_examples():
    lim = l2_limit(rho_handle("2p"))
    n = lim.limit.rule.nodes
    assert np.allclose(lim.limit.values, 6 * n[:, 0] ** 2 - 2, atol=1e-5) and not lim.inconclusive
    lim = l2_limit(rho_handle("1s"))
    # zero up to round-off amplified by l(l+1)/r^2 at the smallest radius
    assert np.abs(lim.limit.values).max() < 1e-6 and not lim.inconclusive
    lim = l2_limit(rho_handle("mixed"))
    assert lim.inconclusive
    assert np.allclose(lim.first_order.values, 4 * lim.first_order.rule.nodes[:, 0], atol=1e-5)


def test_lm_ordering():
    assert [lm_index(0, 0), lm_index(1, -1), lm_index(1, 0), lm_index(1, 1), lm_index(2, -2)] == [0, 1, 2, 3, 4]
