"""Seeded random trigonometric test fields."""

from __future__ import annotations

import numpy as np

from hyperstab.geometry import DiscreteVectorField, Grid, MetricFrame


def random_trig_coefficients(dim: int, rng: np.random.Generator, modes: int = 3):
    """Wavevectors with max-norm <= modes and Gaussian cos/sin amplitudes per component."""
    axes = np.meshgrid(*[np.arange(-modes, modes + 1)] * dim, indexing="ij")
    ks = np.stack([a.ravel() for a in axes], axis=-1)
    ks = ks[np.any(ks != 0, axis=1) | np.all(ks == 0, axis=1)]
    weights = 1.0 / (1.0 + np.sum(ks**2, axis=1))
    a = rng.standard_normal((len(ks), dim)) * weights[:, None]
    b = rng.standard_normal((len(ks), dim)) * weights[:, None]
    return ks.astype(float), a, b


def evaluate_trig(x, ks, a, b):
    ang = 2.0 * np.pi * np.asarray(x, dtype=float) @ ks.T
    return np.cos(ang) @ a + np.sin(ang) @ b


def random_trig_field(grid: Grid, frame: MetricFrame, rng, modes: int = 3,
                      scale: float = 1.0) -> DiscreteVectorField:
    """Smooth random field with sup norm ``scale`` (frame metric)."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    ks, a, b = random_trig_coefficients(grid.dim, rng, modes)
    values = evaluate_trig(grid.points, ks, a, b)
    field = DiscreteVectorField(grid, values, frame)
    return field * (scale / field.sup_norm())
