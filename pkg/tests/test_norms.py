import numpy as np
import pytest

from hyperstab.geometry import DiscreteVectorField, Grid, ManifoldKind, MetricFrame, diameter, dist
from hyperstab.fields import random_trig_field
from hyperstab.norms import (
    NormReport,
    default_window,
    df_distance,
    df_profile,
    estimate_exponent,
    field_norms,
    pair_sample,
    rho_f,
)
from hyperstab.systems import LinearToral, MorseSmaleCircle

TORUS = ManifoldKind.TORUS2


@pytest.fixture(scope="module")
def cat():
    return LinearToral()


def brute_force_df(m, x, y, w):
    best = dist(x, y, m.frame)
    fx, fy, bx, by = x, y, x, y
    for _ in range(w):
        fx, fy = m.evaluate(fx), m.evaluate(fy)
        bx, by = m.inverse(bx), m.inverse(by)
        best = max(best, dist(fx, fy, m.frame), dist(bx, by, m.frame))
    return best


def test_df_trivial_cases(cat):
    x = np.array([0.2, 0.7])
    y = np.array([0.25, 0.71])
    assert df_distance(cat, x, x, 8) == 0.0
    assert df_distance(cat, x, y, 0) == pytest.approx(dist(x, y), abs=1e-15)


def test_df_saturates_along_unstable_direction(cat):
    x = np.array([0.13, 0.42])
    e_u = cat.frame.basis[:, 0]
    y = np.mod(x + 1e-4 * e_u, 1.0)
    value = float(df_distance(cat, x, y, 16))
    assert value == pytest.approx(brute_force_df(cat, x, y, 16), abs=1e-15)
    assert value > 0.5 * diameter(cat.frame)


def test_df_monotone_in_window_and_bounded(cat):
    rng = np.random.default_rng(5)
    x, y = rng.random((2, 1000, 2))
    previous = dist(x, y, cat.frame)
    for w in (4, 8, 16, 32):
        current = df_distance(cat, x, y, w)
        assert np.all(current >= previous - 1e-15)
        assert np.all(current <= diameter(cat.frame) + 1e-12)
        previous = current


def test_df_stable_leaf_argmax_at_most_negative_index(cat):
    x = np.array([0.31, 0.57])
    e_s = cat.frame.basis[:, 1]
    y = np.mod(x + 1e-8 * e_s, 1.0)
    profile = df_profile(cat, x, y, 8)
    assert int(np.argmax(profile)) == 0


def test_rho_f(cat):
    x = np.array([0.4, 0.1])
    assert rho_f(cat, x, x, 0.5, 8) == 0.0
    y = np.array([0.4001, 0.1])
    d = dist(x, y)
    assert rho_f(cat, x, y, 0.5, 8) == pytest.approx(d**0.5, rel=1e-14)
    rng = np.random.default_rng(9)
    a, b = rng.random((2, 500, 2))
    assert np.all(rho_f(cat, a, b, 1.0, 8) <= dist(a, b, cat.frame) + 1e-15)


def test_default_window(cat):
    w = default_window(cat, 1e-4)
    assert w >= 1
    x = np.array([0.13, 0.42])
    y = np.mod(x + 1e-4 * cat.frame.basis[:, 0], 1.0)
    assert df_distance(cat, x, y, w) > 0.5 * diameter(cat.frame)


def test_constant_field_norms(cat):
    grid = Grid(16, TORUS)
    eta = DiscreteVectorField(grid, np.tile([0.3, 0.4], (grid.size, 1)), MetricFrame.identity(2))
    report = field_norms(eta, 0.5, cat, 4, 1000)
    assert report.c0 == pytest.approx(0.5, abs=1e-15)
    assert report.holder == 0.0 and report.df_lip == 0.0
    assert report.combined == report.c0


def test_sine_field_against_dense_scan(cat):
    grid = Grid(64, TORUS)
    frame = MetricFrame.identity(2)
    eta = DiscreteVectorField.from_function(
        grid, frame, lambda p: np.stack([np.sin(2 * np.pi * p[:, 0]), np.zeros(len(p))], axis=1))
    report = field_norms(eta, 0.5, cat, 4, 4096)
    assert report.c0 == pytest.approx(1.0, abs=1e-12)
    s = np.linspace(1e-6, 0.5, 200_001)
    dense = np.max(2 * np.sin(np.pi * s) / s**0.5)
    assert report.holder <= dense * (1 + 1e-12)
    assert report.holder >= 0.95 * dense


def test_homogeneity_and_triangle(cat):
    grid = Grid(32, TORUS)
    rng = np.random.default_rng(11)
    eta = random_trig_field(grid, cat.frame, rng)
    zeta = random_trig_field(grid, cat.frame, rng)
    pairs = pair_sample(cat, grid, 6, 2000)
    r1 = field_norms(eta, 0.5, cat, 6, pairs=pairs)
    r2 = field_norms(zeta, 0.5, cat, 6, pairs=pairs)
    for t in (2.0, 0.37):
        scaled = field_norms(DiscreteVectorField(grid, t * eta.values, eta.frame), 0.5, cat, 6, pairs=pairs)
        for a, b in ((scaled.c0, r1.c0), (scaled.holder, r1.holder), (scaled.df_lip, r1.df_lip)):
            assert a == pytest.approx(t * b, rel=1e-14)
    total = field_norms(DiscreteVectorField(grid, eta.values + zeta.values, eta.frame), 0.5, cat, 6, pairs=pairs)
    assert total.c0 <= r1.c0 + r2.c0 + 1e-14
    assert total.holder <= r1.holder + r2.holder + 1e-14
    assert total.df_lip <= r1.df_lip + r2.df_lip + 1e-14


def test_report_csv_row():
    report = NormReport.build(1.0, 2.0, 3.0, 0.5, 8, 5000)
    assert report.combined == 3.0
    assert dict(zip(NormReport.CSV_COLUMNS, report.csv_row()))["W"] == 8


def test_pair_budget_floor(cat):
    grid = Grid(8, TORUS)
    eta = DiscreteVectorField(grid, np.zeros((64, 2)), MetricFrame.identity(2))
    with pytest.raises(ValueError):
        field_norms(eta, 0.5, cat, 4, 999)


def test_exponent_of_smooth_field(cat):
    grid = Grid(128, TORUS)
    eta = random_trig_field(grid, cat.frame, np.random.default_rng(0))
    est = estimate_exponent(eta, cat)
    assert est.defined and est.alpha_hat >= 0.95


@pytest.mark.parametrize("kind", [ManifoldKind.CIRCLE, TORUS])
def test_exponent_of_square_root_cusp(kind):
    grid = Grid(128 if kind is TORUS else 1024, kind)
    frame = MetricFrame.identity(kind.dim)
    # the cusp sits on a node; off-node cusps bias the finest scales upward
    x0 = np.full(kind.dim, 0.25)
    e = np.zeros(kind.dim)
    e[0] = 1.0
    eta = DiscreteVectorField.from_function(grid, frame, lambda p: dist(p, x0)[:, None] ** 0.5 * e)
    est = estimate_exponent(eta)
    assert est.alpha_hat == pytest.approx(0.5, abs=0.05)


def test_exponent_of_constant_field_is_undefined():
    grid = Grid(32, ManifoldKind.CIRCLE)
    eta = DiscreteVectorField(grid, np.full((32, 1), 2.0), MetricFrame.identity(1))
    est = estimate_exponent(eta, MorseSmaleCircle(0.05))
    assert not est.defined and est.alpha_hat is None
