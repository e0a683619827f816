"""Orbit metric d_f, the modulus rho_f, and sampled norms of vector fields.

Suprema over the continuum are estimated by maxima over a deterministic pair
sample: every grid-neighbor pair plus ``pair_budget`` long-range node pairs
drawn from an unscrambled Halton sequence. Reported Hoelder and d_f-Lipschitz
constants are therefore lower bounds of the true suprema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from hyperstab.geometry import DiscreteVectorField, Grid, MetricFrame, diameter, dist
from hyperstab.systems import ModelMap, hyperbolicity_constants

DEFAULT_PAIR_BUDGET = 4096


def default_window(m: ModelMap, separation: float, lam: float | None = None) -> int:
    """Iterate window after which hyperbolic separation saturates at the diameter."""
    if lam is None:
        lam = hyperbolicity_constants(m).lam
    diam = diameter(m.frame)
    return max(1, math.ceil(math.log(diam / separation) / math.log(1.0 / lam)))


def df_profile(m: ModelMap, x, y, w: int):
    """Distances ``d(f^n x, f^n y)`` for ``n = -w..w`` (axis 0)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.empty((2 * w + 1,) + x.shape[:-1])
    out[w] = dist(x, y, m.frame)
    fx, fy = x, y
    bx, by = x, y
    for n in range(1, w + 1):
        fx, fy = m.evaluate(fx), m.evaluate(fy)
        bx, by = m.inverse(bx), m.inverse(by)
        out[w + n] = dist(fx, fy, m.frame)
        out[w - n] = dist(bx, by, m.frame)
    return out


def df_distance(m: ModelMap, x, y, w: int):
    """Truncated orbit metric ``max_{|n| <= w} d(f^n x, f^n y)``."""
    return np.max(df_profile(m, x, y, int(w)), axis=0)


def rho_f(m: ModelMap, x, y, alpha: float, w: int):
    """``min(d(x, y)^alpha, d_f(x, y))``."""
    d = dist(x, y, m.frame)
    return np.minimum(d**alpha, df_distance(m, x, y, w))


def node_orbits(m: ModelMap, grid: Grid, w: int):
    """Positions of ``f^n(node)`` for ``n = -w..w``, shape ``(2w+1, size, d)``."""
    out = np.empty((2 * w + 1, grid.size, grid.dim))
    out[w] = grid.points
    perm = m.grid_permutation(grid)
    if perm is not None:
        inv = np.empty_like(perm)
        inv[perm] = np.arange(grid.size)
        fwd = bwd = np.arange(grid.size)
        for n in range(1, w + 1):
            fwd, bwd = perm[fwd], inv[bwd]
            out[w + n] = grid.points[fwd]
            out[w - n] = grid.points[bwd]
        return out
    fwd = bwd = grid.points
    for n in range(1, w + 1):
        fwd, bwd = m.evaluate(fwd), m.inverse(bwd)
        out[w + n] = fwd
        out[w - n] = bwd
    return out


@dataclass(frozen=True, eq=False)
class PairSample:
    """Node pairs with their distance and truncated orbit distance."""

    grid: Grid
    first: np.ndarray
    second: np.ndarray
    d: np.ndarray
    d_f: np.ndarray
    window: int

    def __len__(self):
        return len(self.first)


def long_range_pairs(grid: Grid, count: int):
    if count <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    sampler = qmc.Halton(d=2 * grid.dim, scramble=False)
    u = sampler.random(count + 1)[1:]
    idx = np.minimum((u * grid.resolution).astype(np.int64), grid.resolution - 1)
    a = grid.flat_index(idx[:, : grid.dim])
    b = grid.flat_index(idx[:, grid.dim :])
    keep = a != b
    return a[keep], b[keep]


def pair_sample(m: ModelMap, grid: Grid, w: int, pair_budget: int = DEFAULT_PAIR_BUDGET) -> PairSample:
    near_a, near_b = grid.neighbor_pairs()
    far_a, far_b = long_range_pairs(grid, pair_budget)
    a = np.concatenate([near_a, far_a])
    b = np.concatenate([near_b, far_b])
    orbits = node_orbits(m, grid, w)
    d_f = np.zeros(len(a))
    for n in range(2 * w + 1):
        np.maximum(d_f, dist(orbits[n, a], orbits[n, b], m.frame), out=d_f)
    d = dist(grid.points[a], grid.points[b], m.frame)
    return PairSample(grid, a, b, d, d_f, w)


@dataclass(frozen=True)
class NormReport:
    c0: float
    holder: float
    df_lip: float
    combined: float
    alpha: float
    window: int
    pairs: int

    @classmethod
    def build(cls, c0, holder, df_lip, alpha, window, pairs):
        c0, holder, df_lip = float(c0), float(holder), float(df_lip)
        return cls(c0, holder, df_lip, max(c0, holder, df_lip), float(alpha), int(window), int(pairs))

    CSV_COLUMNS = ("alpha", "W", "c0", "holder", "df_lip", "combined", "pairs")

    def csv_row(self):
        return (self.alpha, self.window, self.c0, self.holder, self.df_lip, self.combined, self.pairs)


def difference_quotients(values, frame: MetricFrame, pairs: PairSample, alpha: float):
    """Max of ``|v(x)-v(y)|/d^alpha`` and ``|v(x)-v(y)|/d_f`` over the sample."""
    diff = frame.norm(values[pairs.first] - values[pairs.second])
    holder = float(np.max(diff / pairs.d**alpha, initial=0.0))
    df_lip = float(np.max(diff / pairs.d_f, initial=0.0))
    return holder, df_lip


def field_norms(eta: DiscreteVectorField, alpha: float, m: ModelMap, w: int,
                pair_budget: int = DEFAULT_PAIR_BUDGET, pairs: PairSample | None = None) -> NormReport:
    """Sup norm, sampled Hoelder constant and sampled d_f-Lipschitz constant."""
    if pairs is None:
        if pair_budget < 1000:
            raise ValueError("pair_budget must be at least 1000")
        pairs = pair_sample(m, eta.grid, w, pair_budget)
    c0 = eta.sup_norm()
    holder, df_lip = difference_quotients(eta.values, eta.frame, pairs, alpha)
    return NormReport.build(c0, holder, df_lip, alpha, pairs.window, len(pairs))


@dataclass(frozen=True)
class ExponentEstimate:
    alpha_hat: float | None
    distances: tuple
    envelope: tuple

    @property
    def defined(self) -> bool:
        return self.alpha_hat is not None


def _offset_directions(dim):
    if dim == 1:
        return [np.array([1])]
    return [np.array(v) for v in ((1, 0), (0, 1), (1, 1), (1, -1))]


def estimate_exponent(eta: DiscreteVectorField, m: ModelMap | None = None,
                      max_fraction: float = 0.125) -> ExponentEstimate:
    """Empirical Hoelder exponent from the upper envelope of increments.

    For each dyadic node offset the largest increment over all nodes is
    recorded; the slope of log(envelope) against log(distance) is returned.
    """
    grid = eta.grid
    frame = eta.frame if m is None else m.frame
    scales = []
    k = 1
    while k <= max(1, int(grid.resolution * max_fraction)):
        scales.append(k)
        k *= 2
    dists, env = [], []
    for k in scales:
        best_d, best = None, 0.0
        for direction in _offset_directions(grid.dim):
            step = k * direction
            shifted = grid.flat_index(grid.indices + step)
            inc = frame.norm(eta.values[shifted] - eta.values)
            d = float(frame.norm(step / grid.resolution))
            ratio = float(inc.max())
            if best_d is None or ratio / d > best / best_d:
                best_d, best = d, ratio
        dists.append(best_d)
        env.append(best)
    dists = np.array(dists)
    env = np.array(env)
    if np.max(env) <= 1e-14 * max(1.0, eta.sup_norm()) or np.any(env <= 0.0):
        return ExponentEstimate(None, tuple(dists), tuple(env))
    slope = np.polyfit(np.log(dists), np.log(env), 1)[0]
    slope = float(min(max(slope, 1e-6), 1.1))
    return ExponentEstimate(slope, tuple(dists), tuple(env))
