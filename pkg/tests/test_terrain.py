import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphereclimb.terrain import TerrainModel, slope_load


@given(st.floats(0.0, 0.5 * math.pi), st.floats(0.1, 10.0))
def test_gravity_vector_magnitude_and_direction(slope, g):
    v = TerrainModel(slope=slope).gravity_vector(g)
    assert np.linalg.norm(v) == pytest.approx(g)
    assert v[0] == 0.0 and v[1] <= 0.0 and v[2] <= 1e-12


def test_vertical_face_gravity_is_all_downslope():
    np.testing.assert_allclose(TerrainModel(slope=0.5 * math.pi).gravity_vector(3.71), [0, -3.71, 0], atol=1e-12)


def test_surface_query():
    d, n = TerrainModel(offset=0.15).surface_query([1.0, 2.0, 0.05])
    assert d == pytest.approx(0.2)
    np.testing.assert_array_equal(n, [0, 0, 1])


def test_slope_load():
    assert slope_load(12.6, 3.7, 0.5 * math.pi) == pytest.approx(46.62)
    assert slope_load(12.6, 3.7, 0.0) == 0.0
    with pytest.raises(ValueError):
        slope_load(0.0, 3.7, 1.0)


@pytest.mark.parametrize("kw", [dict(slope=-0.1), dict(slope=2.0), dict(friction=-1), dict(asperity_radius=0)])
def test_validation(kw):
    with pytest.raises(ValueError):
        TerrainModel(**kw)
