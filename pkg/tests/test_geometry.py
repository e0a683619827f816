import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperstab.errors import ChartError, ConfigError
from hyperstab.geometry import (
    DiscreteVectorField,
    Grid,
    ManifoldKind,
    MetricFrame,
    diameter,
    dist,
    exp_point,
    interpolate,
    log_point,
)
from hyperstab.systems import LinearToral

TORUS = ManifoldKind.TORUS2
CIRCLE = ManifoldKind.CIRCLE

coord = st.floats(min_value=0.0, max_value=1.0, exclude_max=True, allow_nan=False)
small = st.floats(min_value=-0.4, max_value=0.4, allow_nan=False)


def test_kind_dimensions():
    assert CIRCLE.dim == 1
    assert TORUS.dim == 2


def test_exp_wraps():
    assert np.allclose(exp_point([0.9, 0.9], [0.2, 0.2]), [0.1, 0.1], atol=1e-15)


def test_exp_zero_is_identity():
    x = np.array([0.3, 0.7])
    assert np.array_equal(exp_point(x, [0.0, 0.0]), x)


def test_exp_rejects_large_vectors():
    with pytest.raises(ChartError):
        exp_point([0.1, 0.1], [0.5, 0.0])


def test_log_shortest_lift():
    assert np.allclose(log_point([0.1], [0.9]), [-0.2], atol=1e-15)
    assert np.array_equal(log_point([0.4, 0.2], [0.4, 0.2]), [0.0, 0.0])


def test_log_rejects_antipodes():
    with pytest.raises(ChartError):
        log_point([0.0], [0.5])


@settings(max_examples=200, deadline=None)
@given(coord, coord, small, small)
def test_exp_log_roundtrip(x1, x2, v1, v2):
    x = np.array([x1, x2])
    v = np.array([v1, v2])
    assert np.allclose(log_point(x, exp_point(x, v)), v, atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, coord)
def test_log_then_exp(x1, x2, y1, y2):
    x = np.array([x1, x2])
    y = np.array([y1, y2])
    v = np.mod(y - x + 0.5, 1.0) - 0.5
    if np.any(np.abs(v) >= 0.5 - 1e-9):
        return
    back = exp_point(x, log_point(x, y))
    assert np.all(np.abs(np.mod(back - y + 0.5, 1.0) - 0.5) < 1e-14)


def test_dist_examples():
    assert dist([0.0, 0.0], [0.9, 0.0]) == pytest.approx(0.1, abs=1e-15)
    assert dist([0.3, 0.4], [0.3, 0.4]) == 0.0


def test_dist_in_eigenframe_matches_matrix_product():
    frame = LinearToral().frame
    b_inv = np.linalg.inv(frame.basis)
    expected = np.linalg.norm(b_inv @ np.array([0.1, 0.0]))
    assert dist([0.0, 0.0], [0.1, 0.0], frame) == pytest.approx(expected, rel=1e-14)
    # orthonormal eigenframe: lengths agree with the identity frame
    assert expected == pytest.approx(0.1, rel=1e-12)


def test_dist_metric_axioms_random_triples():
    rng = np.random.default_rng(7)
    for frame in (MetricFrame.identity(2), LinearToral().frame, MetricFrame([[1.0, 0.3], [0.0, 1.0]])):
        x, y, z = rng.random((3, 1000, 2))
        dxy, dyx = dist(x, y, frame), dist(y, x, frame)
        assert np.all(dxy >= 0)
        assert np.allclose(dxy, dyx, atol=1e-15)
        assert np.all(dxy <= dist(x, z, frame) + dist(z, y, frame) + 1e-12)
        assert np.all(dxy <= diameter(frame) + 1e-12)


def test_frame_validation():
    with pytest.raises(ConfigError):
        MetricFrame([[1.0, 2.0], [2.0, 4.0]])
    frame = MetricFrame([[2.0, 1.0], [1.0, 1.0]])
    assert np.allclose(frame.inverse @ frame.basis, np.eye(2), atol=1e-12)


def test_grid_basics():
    g = Grid(8, TORUS)
    assert g.size == 64
    assert g.points.shape == (64, 2)
    assert g.node_index(g.points[[5, 17]]).tolist() == [5, 17]
    assert g.node_index(g.points[:2] + 0.01) is None
    with pytest.raises(ConfigError):
        Grid(2, TORUS)


def test_field_shape_and_finiteness():
    g = Grid(8, TORUS)
    with pytest.raises(ConfigError):
        DiscreteVectorField(g, np.zeros((10, 2)), MetricFrame.identity(2))
    bad = np.zeros((64, 2))
    bad[3, 1] = np.nan
    with pytest.raises(ConfigError):
        DiscreteVectorField(g, bad, MetricFrame.identity(2))


def test_interpolate_constant_field():
    g = Grid(16, TORUS)
    eta = DiscreteVectorField(g, np.tile([0.3, -1.2], (g.size, 1)), MetricFrame.identity(2))
    x = np.random.default_rng(0).random((50, 2))
    assert np.allclose(interpolate(eta, x), [0.3, -1.2], atol=1e-13)


def test_interpolate_exact_on_nodes():
    g = Grid(16, TORUS)
    values = np.stack([g.points[:, 0] + 2 * g.points[:, 1], g.points[:, 1]], axis=1)
    eta = DiscreteVectorField(g, values, MetricFrame.identity(2))
    assert np.array_equal(interpolate(eta, g.points[[3, 40, 200]]), values[[3, 40, 200]])


def _sin_error(res, kind):
    g = Grid(res, kind)
    frame = MetricFrame.identity(kind.dim)
    fn = lambda p: np.stack([np.sin(2 * np.pi * p[:, 0])] * kind.dim, axis=1)
    eta = DiscreteVectorField.from_function(g, frame, fn)
    x = np.random.default_rng(1).random((4000, kind.dim))
    return np.max(np.abs(interpolate(eta, x) - fn(x)))


@pytest.mark.parametrize("kind", [CIRCLE, TORUS])
def test_interpolation_order(kind):
    e64, e128 = _sin_error(64, kind), _sin_error(128, kind)
    assert e64 <= 50.0 * 64.0**-3
    assert e64 / e128 >= 6.0
