"""Graph transform on line fields and the invariant splitting of toral maps.

A line field close to the reference unstable direction is stored as one slope
``tau`` per node: the line at ``x`` is spanned by ``e_u + tau(x) e_s`` in the
reference frame. Likewise the stable line field is spanned by
``sigma(x) e_u + e_s``. The graph transform pushes lines through the
Jacobian; for the unstable field it reads ``tau`` at ``g^-1(x)``, for the
stable field it reads ``sigma`` at ``g(x)`` through the inverse Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from hyperstab.errors import ConfigError, ConvergenceError, HypothesisError
from hyperstab.geometry import Grid, MetricFrame, interpolate_scalar
from hyperstab.io import write_csv, write_pgm
from hyperstab.norms import pair_sample
from hyperstab.systems import HyperbolicityConstants, ManifoldKind, ModelMap, hyperbolicity_constants

ANGLE_FLOOR = 1e-3
SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class ReferenceSplitting:
    """Constant frame whose first column spans the reference unstable line."""

    frame: MetricFrame

    def __post_init__(self):
        if self.frame.dim != 2:
            raise ConfigError("reference splittings are defined on the 2-torus")
        if self.angle < ANGLE_FLOOR:
            raise ConfigError(f"reference lines nearly parallel: angle {self.angle:.3g}")

    @classmethod
    def for_map(cls, m: ModelMap) -> "ReferenceSplitting":
        if m.kind is not ManifoldKind.TORUS2:
            raise ConfigError("invariant splittings are computed for toral maps only")
        return cls(m.frame)

    @property
    def unstable(self):
        return self.frame.basis[:, 0]

    @property
    def stable(self):
        return self.frame.basis[:, 1]

    @property
    def angle(self) -> float:
        return line_angle(self.frame.basis[:, 0], self.frame.basis[:, 1])


def line_angle(u, s):
    """Angle in [0, pi/2] between lines spanned by vectors (vectorized)."""
    u = np.asarray(u, dtype=float)
    s = np.asarray(s, dtype=float)
    cos = np.abs(np.sum(u * s, axis=-1)) / (np.linalg.norm(u, axis=-1) * np.linalg.norm(s, axis=-1))
    return np.arccos(np.clip(cos, 0.0, 1.0))


@dataclass(frozen=True)
class Blocks:
    """Jacobian in reference coordinates: ``[[uu, su], [us, ss]]``."""

    uu: np.ndarray
    su: np.ndarray
    us: np.ndarray
    ss: np.ndarray

    def assemble(self, frame: MetricFrame):
        local = np.empty(np.shape(self.uu) + (2, 2))
        local[..., 0, 0] = self.uu
        local[..., 0, 1] = self.su
        local[..., 1, 0] = self.us
        local[..., 1, 1] = self.ss
        return frame.basis @ local @ frame.inverse


def _blocks_of(local) -> Blocks:
    return Blocks(local[..., 0, 0], local[..., 0, 1], local[..., 1, 0], local[..., 1, 1])


def block_decompose(m: ModelMap, ref: ReferenceSplitting, x) -> Blocks:
    """Blocks of ``Dm(x)`` from the reference frame at x to the one at m(x)."""
    jac = m.jacobian(np.asarray(x, dtype=float))
    return _blocks_of(ref.frame.inverse @ jac @ ref.frame.basis)


def inverse_blocks(m: ModelMap, ref: ReferenceSplitting, x) -> Blocks:
    """Blocks of ``Dm(x)^-1`` in the reference frame."""
    jac = m.jacobian(np.asarray(x, dtype=float))
    return _blocks_of(ref.frame.inverse @ np.linalg.inv(jac) @ ref.frame.basis)


def gamma(blocks: Blocks, t, where=None):
    """Image slope of the line ``e_u + t e_s``: ``(us + ss t) / (uu + su t)``."""
    denom = blocks.uu + blocks.su * t
    _check_denominator(denom, where)
    return (blocks.us + blocks.ss * t) / denom


def gamma_stable(inv: Blocks, t, where=None):
    """Preimage slope of the line ``t e_u + e_s`` under the inverse blocks."""
    denom = inv.us * t + inv.ss
    _check_denominator(denom, where)
    return (inv.uu * t + inv.su) / denom


def _check_denominator(denom, where):
    bad = np.abs(denom) < 1e-12
    if np.any(bad):
        node = int(np.flatnonzero(np.ravel(bad))[0])
        label = f" at node {node}" if where is None else f" at point {np.asarray(where).reshape(-1, 2)[node]}"
        raise HypothesisError(f"graph transform is singular{label}: invariant cone hypothesis violated")


@dataclass(frozen=True)
class GraphTransformConstants:
    lambda1: float
    lambda2: float
    lambda3: float
    r: float
    eps_graph: float
    K: float = math.inf
    C: float = math.nan
    lam: float = 0.0
    l_alpha: float = 1.0

    def __post_init__(self):
        if not self.lam < self.lambda1 < self.lambda2 < self.lambda3 < 1.0:
            raise ConfigError("need lambda < lambda1 < lambda2 < lambda3 < 1")
        if self.r < 1.0:
            raise ConfigError("disc radius r must be >= 1")
        if self.lambda3**2 * self.l_alpha >= 1.0:
            raise ConfigError("need lambda3^2 l^alpha < 1")
        if self.r * self.eps_graph > 1.0 / self.lambda2 - 1.0 / self.lambda3 + SLACK:
            raise ConfigError("need r * eps <= 1/lambda2 - 1/lambda3")

    @property
    def contraction(self) -> float:
        return self.lambda3**2

    def with_modulus(self, c_const: float) -> "GraphTransformConstants":
        k = modulus_bound(c_const, self.lambda3, self.l_alpha)
        return GraphTransformConstants(self.lambda1, self.lambda2, self.lambda3, self.r, self.eps_graph,
                                       k, c_const, self.lam, self.l_alpha)

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("lambda1", "lambda2", "lambda3", "r", "eps_graph", "K", "C", "lam", "l_alpha")}


def modulus_bound(c_const: float, lambda3: float, l_alpha: float) -> float:
    """A-priori modulus constant ``max{C l^a/(1 - l3^2 l^a), C/(1 - l3^2)}``."""
    return max(c_const * l_alpha / (1.0 - lambda3**2 * l_alpha), c_const / (1.0 - lambda3**2))


def auto_constants(m: ModelMap, constants: HyperbolicityConstants | None = None,
                   r: float = 1.0, margin: float = 0.98) -> GraphTransformConstants:
    """Geometric interpolation from lambda towards the largest admissible lambda3."""
    constants = constants or hyperbolicity_constants(m)
    l_alpha = constants.l**constants.alpha
    top = min(0.999, math.sqrt(margin / l_alpha))
    if top <= constants.lam:
        raise ConfigError("no admissible lambda3: lambda^2 l^alpha too close to 1")
    lams = [constants.lam * (top / constants.lam) ** (j / 3.0) for j in (1, 2, 3)]
    eps = (1.0 / lams[1] - 1.0 / lams[2]) / r
    return GraphTransformConstants(lams[0], lams[1], lams[2], r, eps, lam=constants.lam, l_alpha=l_alpha)


@dataclass(frozen=True)
class BlockReport:
    inv_uu: float
    stable_sum: float
    off_diagonal: float
    ok: bool


def check_block_hypotheses(m: ModelMap, ref: ReferenceSplitting, consts: GraphTransformConstants,
                           grid: Grid) -> BlockReport:
    """Grid-sup of ``|1/F^uu|``, ``|F^ss| + |F^us|`` and the off-diagonal blocks."""
    b = block_decompose(m, ref, grid.points)
    inv_uu = float(np.max(1.0 / np.abs(b.uu)))
    stable_sum = float(np.max(np.abs(b.ss) + np.abs(b.us)))
    off = float(max(np.max(np.abs(b.su)), np.max(np.abs(b.us))))
    ok = inv_uu <= consts.lambda2 and stable_sum <= consts.lambda2
    return BlockReport(inv_uu, stable_sum, off, ok)


@dataclass(eq=False)
class SplittingSection:
    """Slope of a line field per grid node, bounded by the disc radius."""

    grid: Grid
    values: np.ndarray
    r: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.shape != (self.grid.size,):
            raise ConfigError("section must hold one value per node")
        if not np.all(np.isfinite(values)):
            raise ConfigError("section has non-finite values")
        if np.max(np.abs(values), initial=0.0) > self.r * (1.0 + 1e-9):
            raise HypothesisError(f"section leaves the disc bundle of radius {self.r}")
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid, r: float = 1.0) -> "SplittingSection":
        return cls(grid, np.zeros(grid.size), r)

    def like(self, values) -> "SplittingSection":
        return SplittingSection(self.grid, values, self.r)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    def at(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.grid.node_index(x)
        if idx is not None:
            return self.values[idx]
        coeffs = ndimage.spline_filter(self.values.reshape(self.grid.shape), order=3, mode="grid-wrap")
        return interpolate_scalar(self.grid, coeffs, x)

    def image(self):
        return self.values.reshape(self.grid.shape)


class _Transport:
    """Cached geometry for repeated graph transforms on a fixed grid."""

    def __init__(self, m: ModelMap, ref: ReferenceSplitting, grid: Grid):
        pts = grid.points
        self.grid = grid
        self.pre = m.inverse(pts)
        self.post = m.evaluate(pts)
        self.blocks_pre = block_decompose(m, ref, self.pre)
        self.inv_blocks = inverse_blocks(m, ref, pts)

    def unstable(self, tau: SplittingSection) -> SplittingSection:
        return tau.like(gamma(self.blocks_pre, tau.at(self.pre), self.pre))

    def stable(self, sigma: SplittingSection) -> SplittingSection:
        return sigma.like(gamma_stable(self.inv_blocks, sigma.at(self.post), self.grid.points))


def graph_transform(m: ModelMap, ref: ReferenceSplitting, tau: SplittingSection,
                    stable: bool = False) -> SplittingSection:
    """One application of the section map ``F_#``."""
    transport = _Transport(m, ref, tau.grid)
    return transport.stable(tau) if stable else transport.unstable(tau)


def fiber_ratios(m: ModelMap, ref: ReferenceSplitting, grid: Grid, n_pairs: int = 1000,
                 seed: int = 0, r: float = 1.0):
    """Fiberwise ``|Gamma(t1) - Gamma(t2)| / |t1 - t2|`` over seeded random pairs.

    Each pair is two random sections evaluated at a random node of the
    preimage fiber, so the ratio is that of ``F_#`` restricted to one fiber.
    """
    rng = np.random.default_rng(seed)
    nodes = rng.integers(0, grid.size, n_pairs)
    t = rng.uniform(-r, r, size=(2, n_pairs))
    pre = m.inverse(grid.points[nodes])
    b = block_decompose(m, ref, pre)
    out = gamma(b, t[0], pre) - gamma(b, t[1], pre)
    return np.abs(out) / np.abs(t[0] - t[1])


@dataclass(eq=False)
class InvariantSplittingResult:
    reference: ReferenceSplitting
    grid: Grid
    tau: np.ndarray
    sigma: np.ndarray
    ratio: float
    ratios: list
    iterations: int
    residual: float
    constants: GraphTransformConstants
    increments: list = field(default_factory=list)

    def angle(self):
        """Nodewise angle between the computed unstable and stable lines."""
        b = self.reference.frame.basis
        u = (b[:, 0][None, :] + self.tau[:, None] * b[:, 1][None, :])
        s = (self.sigma[:, None] * b[:, 0][None, :] + b[:, 1][None, :])
        return line_angle(u, s)

    def section(self, stable: bool = False) -> SplittingSection:
        return SplittingSection(self.grid, self.sigma if stable else self.tau, self.constants.r)

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "ratio": self.ratio,
            "residual": self.residual,
            "resolution": self.grid.resolution,
            "tau_sup": float(np.max(np.abs(self.tau))),
            "sigma_sup": float(np.max(np.abs(self.sigma))),
            "min_angle": float(np.min(self.angle())),
        }


def _iterate(step, start: SplittingSection, tol: float, max_iter: int, what: str):
    current = start
    increments, ratios = [], []
    for it in range(1, max_iter + 1):
        nxt = step(current)
        inc = float(np.max(np.abs(nxt.values - current.values), initial=0.0))
        if increments and increments[-1] > 0.0:
            ratios.append(inc / increments[-1])
        increments.append(inc)
        current = nxt
        if inc <= tol:
            return current, it, increments, ratios
    last = ratios[-1] if ratios else float("nan")
    raise ConvergenceError(f"{what} section did not converge in {max_iter} sweeps (last ratio {last:.4g})",
                           trace=increments)


def solve_invariant_section(m: ModelMap, ref: ReferenceSplitting, tau0: SplittingSection | None = None,
                            tol: float = 1e-10, max_iter: int = 200,
                            consts: GraphTransformConstants | None = None,
                            sigma0: SplittingSection | None = None) -> InvariantSplittingResult:
    """Fixed points of the unstable and stable section maps.

    The reported ``residual`` is the larger nodewise invariance defect
    ``|F_# tau - tau|`` over the two line fields, i.e. the mismatch between the
    pushed line at every node and the stored line there.
    """
    grid = tau0.grid if tau0 is not None else (sigma0.grid if sigma0 is not None else Grid(128, m.kind))
    consts = consts or auto_constants(m)
    tau0 = tau0 if tau0 is not None else SplittingSection.zeros(grid, consts.r)
    sigma0 = sigma0 if sigma0 is not None else SplittingSection.zeros(grid, consts.r)
    blocks = check_block_hypotheses(m, ref, consts, grid)
    if not blocks.ok:
        raise HypothesisError(
            f"block bounds fail: |1/F^uu| = {blocks.inv_uu:.4g}, |F^ss|+|F^us| = {blocks.stable_sum:.4g}, "
            f"lambda2 = {consts.lambda2:.4g}"
        )
    transport = _Transport(m, ref, grid)
    tau, it_u, inc_u, rat_u = _iterate(transport.unstable, tau0, tol, max_iter, "unstable")
    sigma, it_s, inc_s, rat_s = _iterate(transport.stable, sigma0, tol, max_iter, "stable")
    residual = max(
        float(np.max(np.abs(transport.unstable(tau).values - tau.values))),
        float(np.max(np.abs(transport.stable(sigma).values - sigma.values))),
    )
    ratios = rat_u + rat_s
    ratio = max(ratios) if ratios else 0.0
    return InvariantSplittingResult(ref, grid, tau.values, sigma.values, ratio, ratios,
                                    max(it_u, it_s), residual, consts, inc_u + inc_s)


def modulus_constant(section: SplittingSection, m: ModelMap, alpha: float, w: int,
                     pair_budget: int = 4096, pairs=None) -> float:
    """``max |tau(x) - tau(y)| / rho_f(x, y)`` over the deterministic pair sample."""
    if pairs is None:
        pairs = pair_sample(m, section.grid, w, pair_budget)
    diff = np.abs(section.values[pairs.first] - section.values[pairs.second])
    modulus = np.minimum(pairs.d**alpha, pairs.d_f)
    return float(np.max(diff / modulus, initial=0.0))


def gamma_modulus(m: ModelMap, ref: ReferenceSplitting, grid: Grid, alpha: float, w: int,
                  r: float = 1.0, pair_budget: int = 4096) -> float:
    """Measured constant C: ``max_t |Gamma_x(t) - Gamma_y(t)| / rho_f(x, y)``, t in {-r, 0, r}."""
    pairs = pair_sample(m, grid, w, pair_budget)
    b = block_decompose(m, ref, grid.points)
    modulus = np.minimum(pairs.d**alpha, pairs.d_f)
    worst = 0.0
    for t in (-r, 0.0, r):
        g = gamma(b, t)
        worst = max(worst, float(np.max(np.abs(g[pairs.first] - g[pairs.second]) / modulus, initial=0.0)))
    return worst


def write_section_csv(path, section: SplittingSection):
    pts = section.grid.points
    rows = ((i, pts[i, 0], pts[i, 1], section.values[i]) for i in range(section.grid.size))
    return write_csv(path, ("node", "x1", "x2", "tau"), rows)


def write_section_pgm(path, section: SplittingSection):
    return write_pgm(path, section.image())
