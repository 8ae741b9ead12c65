import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspkit.fitting import linear_limit, quadratic_expansion

R = np.geomspace(1e-4, 5e-2, 24)


def test_exact_quadratic_recovered():
    ex = quadratic_expansion(R, 2.0 - 3.0 * R + 0.5 * R ** 2)
    assert ex.value == pytest.approx(2.0, abs=1e-13)
    assert ex.slope == pytest.approx(-3.0, abs=1e-10)
    assert ex.curvature == pytest.approx(1.0, abs=1e-6)


@given(st.floats(0.2, 4.0))
@settings(max_examples=25, deadline=None)
def test_exponential_taylor_coefficients(z):
    ex = quadratic_expansion(R, np.exp(-z * R))
    assert ex.value == pytest.approx(1.0, abs=1e-9)
    assert ex.slope == pytest.approx(-z, rel=1e-8)
    assert ex.curvature == pytest.approx(z * z, rel=1e-5)
    # the reported uncertainty tracks the actual error above round-off
    assert abs(ex.curvature - z * z) <= max(4 * ex.uncertainties[2] * 2, 1e-8 * z * z)


def test_remainder_exponent_estimated():
    for alpha in (0.3, 0.5, 1.0):
        ex = quadratic_expansion(R, 1.0 + R + R ** 2 + R ** (2 + alpha))
        assert ex.alpha == pytest.approx(alpha, abs=0.1)


def test_vector_valued_samples():
    y = np.stack([np.exp(-R), np.cos(R)], axis=1)
    ex = quadratic_expansion(R, y)
    assert ex.coefficients.shape == (3, 2)
    assert np.allclose(ex.coefficients[1], [-1.0, 0.0], atol=1e-8)


def test_weighted_fit_with_error_bars():
    rng = np.random.default_rng(0)
    err = np.full_like(R, 1e-9)
    ex = quadratic_expansion(R, 1.0 - R + rng.normal(0, 1e-9, R.size), errors=err)
    assert ex.value == pytest.approx(1.0, abs=1e-8)
    assert np.all(ex.uncertainties >= 0)


def test_linear_limit():
    t = np.geomspace(1e-3, 1e-2, 8)
    lim, err = linear_limit(t, 3.0 + 2 * t + t ** 2)
    assert lim == pytest.approx(3.0, abs=1e-12) and err < 1e-4
