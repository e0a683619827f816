"""Flat geometry of the circle R/Z and the torus (R/Z)^2.

Points are numpy arrays of shape ``(..., d)`` with coordinates in [0, 1);
tangent vectors are arrays of the same trailing shape expressed in the
standard lift coordinates. A :class:`MetricFrame` ``B`` defines the adapted
flat metric ``|v| = |B^-1 v|``; for linear toral maps ``B`` is the eigenbasis,
so the stable and unstable directions are orthonormal.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from hyperstab.errors import ChartError, ConfigError


class ManifoldKind(enum.Enum):
    CIRCLE = "circle"
    TORUS2 = "torus2"

    @property
    def dim(self) -> int:
        return 1 if self is ManifoldKind.CIRCLE else 2


@dataclass(frozen=True, eq=False)
class MetricFrame:
    """Constant change of basis ``B``; columns are the frame vectors."""

    basis: np.ndarray
    inverse: np.ndarray = field(init=False)

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise ConfigError(f"frame must be square, got shape {basis.shape}")
        if abs(np.linalg.det(basis)) < 1e-12:
            raise ConfigError("frame matrix is singular")
        inv = np.linalg.inv(basis)
        if not np.allclose(inv @ basis, np.eye(len(basis)), rtol=0, atol=1e-12):
            raise ConfigError("frame inverse check failed")
        basis.setflags(write=False)
        inv.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "inverse", inv)

    @classmethod
    def identity(cls, dim: int) -> "MetricFrame":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def orthogonal(self) -> bool:
        return bool(np.allclose(self.basis.T @ self.basis, np.eye(self.dim), atol=1e-13))

    def coords(self, v):
        """Frame coordinates ``B^-1 v`` of tangent vectors."""
        return np.einsum("ij,...j->...i", self.inverse, v)

    def norm(self, v):
        return np.linalg.norm(self.coords(v), axis=-1)

    def operator_norm(self, mats):
        """Spectral norm of linear maps (``(..., d, d)``) measured in the frame."""
        local = self.inverse @ mats @ self.basis
        if local.shape[-1] == 1:
            return np.abs(local[..., 0, 0])
        return np.linalg.norm(local, ord=2, axis=(-2, -1))

    def to_dict(self):
        return {"basis": self.basis.tolist()}


@dataclass(frozen=True)
class Grid:
    """Regular grid with ``resolution`` nodes per axis.

    Powers of two are the default; other resolutions (>= 4) are accepted so
    that rational lattices invariant under an integer matrix can be sampled.
    Node ``k`` of the torus grid has coordinates ``(i/res, j/res)`` with
    ``k = i*res + j``.
    """

    resolution: int
    kind: ManifoldKind

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 4:
            raise ConfigError(f"grid resolution must be an integer >= 4, got {self.resolution}")

    @property
    def dim(self) -> int:
        return self.kind.dim

    @property
    def shape(self) -> tuple:
        return (self.resolution,) * self.dim

    @property
    def size(self) -> int:
        return self.resolution**self.dim

    @property
    def spacing(self) -> float:
        return 1.0 / self.resolution

    @property
    def is_dyadic(self) -> bool:
        return self.resolution & (self.resolution - 1) == 0

    @cached_property
    def indices(self) -> np.ndarray:
        """Integer node indices, shape ``(size, d)``."""
        axes = np.meshgrid(*[np.arange(self.resolution)] * self.dim, indexing="ij")
        out = np.stack([a.ravel() for a in axes], axis=-1)
        out.setflags(write=False)
        return out

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.indices / self.resolution
        pts.setflags(write=False)
        return pts

    def flat_index(self, multi):
        """Flatten integer multi-indices (taken mod resolution)."""
        multi = np.mod(multi, self.resolution)
        if self.dim == 1:
            return multi[..., 0]
        return multi[..., 0] * self.resolution + multi[..., 1]

    def node_index(self, points, tol: float = 1e-9):
        """Flat indices of ``points`` if every point sits on a node, else None."""
        scaled = np.asarray(points, dtype=float) * self.resolution
        nearest = np.rint(scaled)
        if np.max(np.abs(scaled - nearest), initial=0.0) > tol * self.resolution:
            return None
        return self.flat_index(nearest.astype(np.int64))

    def neighbor_pairs(self):
        """All (node, +1 neighbor along each axis) index pairs."""
        base = np.arange(self.size)
        firsts, seconds = [], []
        for axis in range(self.dim):
            step = np.zeros(self.dim, dtype=np.int64)
            step[axis] = 1
            firsts.append(base)
            seconds.append(self.flat_index(self.indices + step))
        return np.concatenate(firsts), np.concatenate(seconds)


def wrap(v):
    """Representative of ``v`` mod 1 in [-1/2, 1/2]."""
    v = np.asarray(v, dtype=float)
    return v - np.rint(v)


def reduce_mod1(x):
    """Coordinates mod 1 in [0, 1), guarding the ``-0.0 % 1 == 1.0`` edge."""
    r = np.mod(x, 1.0)
    return np.where(r >= 1.0, 0.0, r)


def exp_point(x, v):
    """Flat exponential map ``exp_x(v) = x + v mod 1``."""
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(v) >= 0.5):
        raise ChartError(f"tangent vector outside injectivity radius: max |v| = {np.max(np.abs(v)):.6g}")
    return reduce_mod1(np.asarray(x, dtype=float) + v)


def log_point(x, y):
    """Shortest lift ``v`` with ``exp_x(v) = y``; ties at distance 1/2 are rejected."""
    v = wrap(np.asarray(y, dtype=float) - np.asarray(x, dtype=float))
    if np.any(np.abs(v) >= 0.5 - 1e-12):
        raise ChartError("antipodal points: shortest lift is ambiguous")
    return v


def _minimal_lift_norm(v, frame: MetricFrame):
    v = wrap(v)
    if frame.orthogonal:
        return frame.norm(v)
    # a skew frame can prefer a neighboring integer translate of the wrapped lift
    best = None
    for shift in itertools.product((-1.0, 0.0, 1.0), repeat=frame.dim):
        cand = frame.norm(v + np.asarray(shift))
        best = cand if best is None else np.minimum(best, cand)
    return best


def dist(x, y, frame: MetricFrame | None = None):
    """Flat distance between points; vectorized over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if frame is None:
        frame = MetricFrame.identity(x.shape[-1])
    return _minimal_lift_norm(y - x, frame)


def diameter(frame: MetricFrame, samples: int = 64) -> float:
    """Diameter of the flat manifold in the frame metric."""
    if frame.orthogonal:
        return float(np.linalg.norm(frame.coords(np.full(frame.dim, 0.5))))
    axes = np.meshgrid(*[np.linspace(-0.5, 0.5, samples + 1)] * frame.dim, indexing="ij")
    v = np.stack([a.ravel() for a in axes], axis=-1)
    return float(np.max(_minimal_lift_norm(v, frame)))


@dataclass(eq=False)
class DiscreteVectorField:
    """Tangent vectors sampled on every grid node, shape ``(grid.size, d)``."""

    grid: Grid
    values: np.ndarray
    frame: MetricFrame

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape == (self.grid.size,) and self.grid.dim == 1:
            values = values[:, None]
        if values.shape != (self.grid.size, self.grid.dim):
            raise ConfigError(
                f"field shape {values.shape} does not match grid ({self.grid.size}, {self.grid.dim})"
            )
        if not np.all(np.isfinite(values)):
            raise ConfigError("field has non-finite components")
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid, frame: MetricFrame) -> "DiscreteVectorField":
        return cls(grid, np.zeros((grid.size, grid.dim)), frame)

    @classmethod
    def from_function(cls, grid: Grid, frame: MetricFrame, fn) -> "DiscreteVectorField":
        return cls(grid, fn(grid.points), frame)

    def like(self, values) -> "DiscreteVectorField":
        return DiscreteVectorField(self.grid, values, self.frame)

    def __add__(self, other):
        return self.like(self.values + other.values)

    def __sub__(self, other):
        return self.like(self.values - other.values)

    def __mul__(self, scalar):
        return self.like(self.values * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.values)

    def sup_norm(self) -> float:
        return float(np.max(self.frame.norm(self.values), initial=0.0))

    @cached_property
    def spline_coefficients(self):
        """Periodic cubic B-spline coefficients per component."""
        shaped = self.values.reshape(self.grid.shape + (self.grid.dim,))
        return [
            ndimage.spline_filter(shaped[..., c], order=3, mode="grid-wrap")
            for c in range(self.grid.dim)
        ]

    def component_grid(self, c: int) -> np.ndarray:
        return self.values[:, c].reshape(self.grid.shape)


def interpolate_scalar(grid: Grid, coeffs, x):
    """Evaluate a periodic cubic spline (given its coefficients) at points."""
    x = np.asarray(x, dtype=float)
    lead = x.shape[:-1]
    coords = (reduce_mod1(x).reshape(-1, grid.dim) * grid.resolution).T
    out = ndimage.map_coordinates(coeffs, coords, order=3, mode="grid-wrap", prefilter=False)
    return out.reshape(lead)


def interpolate(field: DiscreteVectorField, x):
    """Periodic cubic interpolation of ``field`` at points ``x``.

    Exact on nodes; points that land on nodes are gathered directly.
    """
    x = np.asarray(x, dtype=float)
    idx = field.grid.node_index(x)
    if idx is not None:
        return field.values[idx]
    comps = [interpolate_scalar(field.grid, c, x) for c in field.spline_coefficients]
    return np.stack(comps, axis=-1)


def interpolate_values(grid: Grid, values, x):
    """Interpolate raw node values of shape ``(size,)`` at points ``x``."""
    values = np.asarray(values, dtype=float)
    x = np.asarray(x, dtype=float)
    idx = grid.node_index(x)
    if idx is not None:
        return values[idx]
    coeffs = ndimage.spline_filter(values.reshape(grid.shape), order=3, mode="grid-wrap")
    return interpolate_scalar(grid, coeffs, x)
