import json
import math

import numpy as np
import pytest
from helpers import V2, random_correlation
from hypothesis import given, settings
from hypothesis import strategies as st

import gausschain as gc
from gausschain.covariance import (
    as_matrix,
    from_descriptor,
    load_model,
    save_model,
)
from gausschain.errors import CapacityError


def test_identity_column():
    assert np.array_equal(gc.IdentityCorrelation(3).column(1), [0, 1, 0])


def test_dense_column():
    assert np.array_equal(gc.DenseCorrelation(V2).column(1), [0.5, 1.0])


def test_scaledexp_column_d4():
    m = gc.ScaledExponentialKernel(gc.grid_locations(4), 10.0, 7.44 / 8)
    col = m.column(0)
    s = np.asarray(gc.grid_locations(4))
    assert col[0] == 1.0
    for j in range(1, 4):
        want = 0.93 * math.exp(-math.hypot(*(s[0] - s[j])) / 10)
        assert col[j] == pytest.approx(want, rel=1e-14)


def test_powexp_entries():
    locs = [[0, 0], [0.3, 0.4], [1, 1]]
    m = gc.PoweredExponentialKernel(locs, 2.0, 1.5)
    assert m.entry(0, 1) == pytest.approx(math.exp(-((0.5 / 2.0) ** 1.5)))
    assert m.entry(2, 2) == 1.0


def test_column_out_of_range():
    for m in (gc.IdentityCorrelation(3), gc.DenseCorrelation(V2), gc.temperature_model(4)):
        with pytest.raises(IndexError):
            m.column(m.dim)
        with pytest.raises(IndexError):
            m.column(-1)


@pytest.mark.parametrize(
    "d,points",
    [
        (4, [(0, 0), (0, 0.5), (0.5, 0), (0.5, 0.5)]),
        (3, [(0, 0), (0, 0.5), (0.5, 0)]),
        (1, [(0, 0)]),
    ],
)
def test_grid_locations(d, points):
    assert np.allclose(gc.grid_locations(d), points)


def test_grid_locations_d9():
    assert np.allclose(np.asarray(gc.grid_locations(9))[5], (1 / 3, 2 / 3))


def test_grid_locations_distinct():
    locs = np.asarray(gc.grid_locations(100))
    assert len({tuple(p) for p in locs}) == 100


def test_validate_identity():
    rep = gc.validate(gc.IdentityCorrelation(5))
    assert rep.as_dict() == {"symmetric": True, "unitDiagonal": True, "minEigenvalue": 1.0}


def test_validate_rank_one():
    rep = gc.validate(gc.DenseCorrelation([[1, 1], [1, 1]]))
    assert abs(rep.min_eigenvalue) <= 1e-10


def test_validate_scaledexp_eigenvalue():
    assert gc.validate(gc.temperature_model(25)).min_eigenvalue >= 0.07


def test_validate_cap():
    with pytest.raises(CapacityError):
        gc.validate(gc.IdentityCorrelation(10), cap=5)


def test_dense_symmetrizes_with_warning():
    v = [[1.0, 0.5], [0.5 + 1e-6, 1.0]]
    with pytest.warns(RuntimeWarning):
        m = gc.DenseCorrelation(v)
    assert m.entry(0, 1) == m.entry(1, 0)


def test_dense_rejects_bad_input():
    with pytest.raises(ValueError):
        gc.DenseCorrelation([[1, 0.5, 0.2], [0.5, 1, 0.1]])


def test_flat_values():
    m = from_descriptor({"type": "dense", "d": 2, "values": [1, 0.5, 0.5, 1]})
    assert np.array_equal(m.materialize(), V2)


def test_descriptor_roundtrip(tmp_path):
    for m in (
        gc.IdentityCorrelation(4),
        gc.DenseCorrelation(random_correlation(5, 1)),
        gc.PoweredExponentialKernel(gc.grid_locations(6), 0.8, 1.2),
        gc.temperature_model(9),
    ):
        p = tmp_path / "m.json"
        save_model(m, p)
        json.loads(p.read_text())
        back = load_model(p)
        assert type(back) is type(m)
        assert np.array_equal(back.materialize(), m.materialize())


def test_descriptor_dimension_mismatch():
    with pytest.raises(ValueError):
        from_descriptor({"type": "dense", "d": 3, "values": V2.tolist()})
    with pytest.raises(ValueError):
        from_descriptor({"type": "matern", "d": 3})


def test_materialize_cap():
    with pytest.raises(CapacityError):
        gc.temperature_model(50).materialize(cap=10)


def test_as_matrix_accepts_arrays():
    assert as_matrix(V2) is not None
    with pytest.raises(ValueError):
        as_matrix(np.ones((2, 3)))


@settings(max_examples=30, deadline=None)
@given(
    d=st.integers(1, 40),
    r=st.floats(0.05, 20),
    theta=st.floats(0.1, 2.0),
    ratio=st.floats(0.01, 0.99),
)
def test_column_matches_materialize(d, r, theta, ratio):
    for m in (
        gc.PoweredExponentialKernel(gc.grid_locations(d), r, theta),
        gc.ScaledExponentialKernel(gc.grid_locations(d), r, ratio),
    ):
        v = m.materialize()
        assert np.all(np.diag(v) == 1.0)
        assert np.array_equal(v, v.T)
        assert np.all(np.abs(v) <= 1.0)
        for i in range(d):
            assert np.max(np.abs(m.column(i) - v[:, i])) <= 1e-12
            assert m.entry(i, (i + 1) % d) == pytest.approx(v[i, (i + 1) % d], abs=1e-12)


def test_models_are_readonly():
    m = gc.DenseCorrelation(V2)
    with pytest.raises(ValueError):
        m.values[0, 1] = 0.0
    # materialized copies are the caller's to modify
    v = m.materialize()
    v[0, 1] = 0.0
    assert m.entry(0, 1) == 0.5
