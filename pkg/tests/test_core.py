import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cuspkit.core import (NuclearFrame, RadialGrid, WavefunctionModel, atom, cusp_factor, log_grid, make_direction,
                          make_frame, probe_directions, smooth_handle, smooth_part, validate_model)
from cuspkit.errors import CuspRangeError, DomainError, GeometryError
from cuspkit.hydrogenic import HydrogenicState, eval_rho, to_model

coord = st.floats(-5, 5, allow_nan=False)
vec = st.tuples(coord, coord, coord)
charge = st.floats(0.1, 10)


def test_single_nucleus_has_infinite_r0():
    f = make_frame([(0, 1.0)])
    assert f.r0(0) == np.inf
    assert f.is_atomic


def test_diatomic_r0():
    f = make_frame([(0, 1.0), ((0, 0, 1.4), 1.0)])
    assert f.r0(0) == pytest.approx(1.4)
    assert f.r0(1) == pytest.approx(1.4)


def test_duplicate_positions_rejected():
    with pytest.raises(GeometryError):
        make_frame([(0, 1.0), (0, 2.0)])


@pytest.mark.parametrize("z", [0.0, -1.0])
def test_nonpositive_charge_rejected(z):
    with pytest.raises(DomainError):
        make_frame([(0, z)])


def test_empty_frame_rejected():
    with pytest.raises(GeometryError):
        make_frame([])


@given(st.lists(st.tuples(vec, charge), min_size=1, max_size=4), st.integers(0, 3))
def test_duplicate_lists_always_rejected(nuclei, k):
    dup = nuclei + [(nuclei[k % len(nuclei)][0], 1.0)]
    with pytest.raises(GeometryError):
        make_frame(dup)


@given(st.lists(st.tuples(vec, charge), min_size=1, max_size=4, unique_by=lambda n: n[0]))
def test_frame_json_roundtrip(nuclei):
    f = make_frame(nuclei)
    g = NuclearFrame.from_json(f.to_json())
    assert np.array_equal(f.positions, g.positions)
    assert np.array_equal(f.charges, g.charges)
    doc = json.loads(f.to_json())
    assert set(doc) == {"nuclei"} and set(doc["nuclei"][0]) == {"position", "charge"}


def test_cusp_factor_examples():
    f = atom(1.0)
    assert cusp_factor(f, (1.0, 0, 0)) == -1.0
    assert cusp_factor(f, (0, 0, 0)) == 0.0
    two = make_frame([(0, 1.0), ((0, 0, 2), 1.0)])
    assert cusp_factor(two, (0, 0, 1)) == pytest.approx(-2.0)


@given(st.lists(st.tuples(vec, charge), min_size=1, max_size=3, unique_by=lambda n: n[0]), vec, vec)
def test_cusp_factor_lipschitz(nuclei, x, y):
    f = make_frame(nuclei)
    lhs = abs(cusp_factor(f, x) - cusp_factor(f, y))
    assert lhs <= f.charges.sum() * np.linalg.norm(np.subtract(x, y)) * (1 + 1e-12) + 1e-12


def test_smooth_part_examples():
    for Z in (1.0, 2.0):
        st_ = HydrogenicState("1s", Z)
        x = np.array([[0.3, -0.2, 0.5], [2.0, 0.0, 1.0]])
        assert np.allclose(smooth_part(atom(Z), lambda p: eval_rho(st_, p), x), 1.0, rtol=1e-14)
    assert smooth_part(atom(1.0), lambda p: np.zeros(np.shape(p)[:-1]), np.ones((4, 3))).tolist() == [0.0] * 4
    x = np.array([0.3, 0.4, 1.2])
    r = np.linalg.norm(x)
    mu = smooth_part(atom(1.0), lambda p: eval_rho(HydrogenicState("2p", 1.0), p), x)
    assert mu == pytest.approx(x[0] ** 2 * np.exp(r / 2), rel=1e-14)


@given(vec)
def test_smooth_part_roundtrip(x):
    f = make_frame([(0, 1.0), ((0, 0, 1.4), 2.0)])
    rho = lambda p: np.exp(-np.linalg.norm(np.asarray(p), axis=-1)) * 0.7
    back = np.exp(cusp_factor(f, x)) * smooth_part(f, rho, x)
    assert back == pytest.approx(rho(np.asarray(x)), rel=1e-13)


def test_smooth_part_overflow_guard():
    with pytest.raises(CuspRangeError):
        smooth_part(atom(10.0), lambda p: np.ones(np.shape(p)[:-1]), (80.0, 0, 0))
    mu = smooth_handle(atom(1.0), lambda p: np.ones(np.shape(p)[:-1]))
    assert mu(np.zeros((2, 3))).shape == (2,)


def test_directions_are_unit():
    d = probe_directions()
    assert d.shape == (14, 3)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-14)
    assert np.linalg.norm(make_direction((3, 4, 0))) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(DomainError):
        make_direction((0, 0, 0))


def test_radial_grid_validation():
    with pytest.raises(DomainError):
        RadialGrid(np.array([0.0, 0.1]))
    with pytest.raises(DomainError):
        RadialGrid(np.array([0.2, 0.1]))
    g = log_grid(1e-4, 5e-2, 24)
    assert len(g) == 24 and g.r_min == pytest.approx(1e-4) and g.r_max == pytest.approx(5e-2)
    two = make_frame([(0, 1.0), ((0, 0, 1.4), 1.0)])
    with pytest.raises(GeometryError):
        log_grid(0.1, 1.5, 8, frame=two)
    log_grid(0.01, 1.0, 8, anchor=1, frame=two)


def test_validate_model_accepts_hydrogenic(kind):
    validate_model(to_model(HydrogenicState(kind, 1.3)))


def test_validate_model_rejects_bad_gradient_and_symmetry():
    good = to_model(HydrogenicState("2s", 1.0))
    bad_grad = WavefunctionModel(1, good.frame, good.energy, good.value,
                                 lambda c: 2 * np.asarray(good.gradient(c)), symmetry="even")
    with pytest.raises(DomainError):
        validate_model(bad_grad)
    mixed = to_model(HydrogenicState("mixed", 1.0))
    mislabelled = WavefunctionModel(1, mixed.frame, mixed.energy, mixed.value, mixed.gradient, symmetry="even")
    with pytest.raises(DomainError):
        validate_model(mislabelled)
