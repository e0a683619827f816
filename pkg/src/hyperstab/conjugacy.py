"""Contraction solver for the conjugacy ``g h = h f`` near the identity.

The unknown is a vector field ``eta`` with ``h(x) = x + eta(x)``. With
``Psi(g, eta)(x) = lift(g(f^-1 x + eta(f^-1 x)) - x)`` and the fixed linear
part ``A = f_#``, the iteration is ``eta_{n+1} = J(Psi(g, eta_n) - f_# eta_n)``
starting from zero, where ``J`` is the series right inverse of ``1 - f_#``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from hyperstab.errors import ChartError, ConfigError, DivergenceError
from hyperstab.geometry import DiscreteVectorField, Grid, diameter, dist, interpolate, wrap
from hyperstab.io import write_csv, write_pgm
from hyperstab.norms import NormReport, default_window, estimate_exponent, field_norms, pair_sample
from hyperstab.rightinverse import (
    ComponentProjectors,
    PartitionOfUnity,
    RightInverse,
    SeriesBudget,
    estimate_j_norm,
    orbit_positions,
    push_forward,
)
from hyperstab.systems import ModelMap, hyperbolicity_constants

CHART_LIMIT = 0.5 - 1e-9
DIVERGENCE_RATIO = 0.95
DIVERGENCE_STREAK = 3


@dataclass(frozen=True)
class SolverConfig:
    budget: SeriesBudget
    alpha: float
    window: int
    tol: float = 1e-10
    max_iter: int = 100
    r_ball: float = 0.2
    eps_ball: float = 0.5
    pair_budget: int = 4096
    probes: int = 20
    probe_resolution: int = 64
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.eps_ball <= 1.0:
            raise ConfigError("eps_ball must lie in (0, 1]")
        if not 0.0 < self.r_ball < 0.25:
            raise ConfigError("r_ball must lie in (0, 1/4)")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.tol <= self.budget.tail_bound * self.r_ball:
            raise ConfigError(
                f"tol = {self.tol:.3g} is below the series truncation floor "
                f"{self.budget.tail_bound * self.r_ball:.3g}; increase N_trunc"
            )
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")

    def to_dict(self):
        return {
            "tol": self.tol,
            "max_iter": self.max_iter,
            "r_ball": self.r_ball,
            "eps_ball": self.eps_ball,
            "alpha": self.alpha,
            "W": self.window,
            "pair_budget": self.pair_budget,
            "probes": self.probes,
            "probe_resolution": self.probe_resolution,
            "seed": self.seed,
            "budget": self.budget.to_dict(),
        }


def psi(g: ModelMap, f: ModelMap, eta: DiscreteVectorField) -> DiscreteVectorField:
    """Chart representative of ``g h f^-1`` with ``h = id + eta``."""
    if eta.grid.dim != g.dim or eta.grid.dim != f.dim:
        raise ConfigError("field and maps live on different manifolds")
    if np.max(np.abs(eta.values), initial=0.0) >= CHART_LIMIT:
        raise ChartError("field leaves the injectivity radius of the flat chart")
    pts = eta.grid.points
    pre = orbit_positions(f, pts, -1, eta.grid)[1]
    moved = pre + interpolate(eta, pre)
    out = wrap(g.evaluate(moved) - pts)
    worst = float(np.max(np.abs(out), initial=0.0))
    if worst >= CHART_LIMIT:
        node = int(np.argmax(np.max(np.abs(out), axis=-1)))
        raise ChartError(f"Psi overflows the chart at node {node} (|value| = {worst:.4g})")
    return eta.like(out)


def q_field(g: ModelMap, f: ModelMap, eta: DiscreteVectorField) -> DiscreteVectorField:
    """``Q(g, eta) = Psi(g, eta) - f_# eta``."""
    return psi(g, f, eta) - push_forward(f, eta)


def c1_distance(g: ModelMap, f: ModelMap, grid: Grid) -> float:
    """Grid estimate of the C^1 distance ``max(sup d(g, f), sup |Dg - Df|)``."""
    pts = grid.points
    c0 = float(np.max(dist(g.evaluate(pts), f.evaluate(pts), f.frame)))
    c1 = float(np.max(f.frame.operator_norm(g.jacobian(pts) - f.jacobian(pts))))
    return max(c0, c1)


@dataclass(frozen=True)
class PerturbationReport:
    q_c0: float
    q_holder: float
    q_df: float
    eps_prime: float
    holder_bound: float
    df_bound: float
    eta_holder: float
    eta_df: float

    def to_dict(self):
        return dict(self.__dict__)


def verify_perturbation_bounds(g: ModelMap, f: ModelMap, eta: DiscreteVectorField, alpha: float, w: int,
                               pairs=None, pair_budget: int = 4096) -> PerturbationReport:
    """Measured norms of Q(g, eta) next to the bounds driven by the C^1 distance eps'."""
    if pairs is None:
        pairs = pair_sample(f, eta.grid, w, pair_budget)
    q = q_field(g, f, eta)
    q_norms = field_norms(q, alpha, f, w, pairs=pairs)
    e_norms = field_norms(eta, alpha, f, w, pairs=pairs)
    constants = hyperbolicity_constants(f, alpha)
    eps_prime = c1_distance(g, f, eta.grid)
    diam = diameter(f.frame)
    holder_bound = eps_prime * (constants.l * diam ** (1.0 - alpha) + constants.l**alpha * e_norms.holder)
    df_bound = eps_prime * (1.0 + e_norms.df_lip)
    return PerturbationReport(q_norms.c0, q_norms.holder, q_norms.df_lip, eps_prime, holder_bound, df_bound,
                              e_norms.holder, e_norms.df_lip)


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    update: float
    ratio: float
    c0: float
    holder: float
    df_lip: float
    combined: float

    CSV_COLUMNS = ("iteration", "update", "ratio", "c0", "holder", "df_lip", "combined")

    def csv_row(self):
        return (self.iteration, self.update, self.ratio, self.c0, self.holder, self.df_lip, self.combined)


@dataclass(frozen=True)
class Certificate:
    positive: bool
    df_lip: float
    injective: bool
    degree: tuple
    witness: tuple | None
    min_separation: float

    def lines(self):
        yield f"certificate {'positive' if self.positive else 'negative'}"
        yield f"df_lipschitz {self.df_lip!r} (bar 0.5)"
        yield f"injective {self.injective}"
        yield f"min_image_separation_cells {self.min_separation!r}"
        yield f"degree {list(map(list, self.degree))}"
        if self.witness is not None:
            yield f"witness_nodes {self.witness[0]} {self.witness[1]}"


@dataclass(eq=False)
class ConjugacyResult:
    eta: DiscreteVectorField
    iterations: int
    ratios: list
    residual: float
    fixed_point_defect: float
    norms: NormReport
    ball_confinement: float
    trace: list
    config: SolverConfig
    j_norm: float = math.nan
    perturbation: PerturbationReport | None = None
    certificate: Certificate | None = None
    extras: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return True

    def h(self, x):
        """The conjugacy at arbitrary points (interpolated between nodes)."""
        x = np.asarray(x, dtype=float)
        return np.mod(x + interpolate(self.eta, x), 1.0)

    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def summary(self) -> dict:
        out = {
            "iterations": self.iterations,
            "residual": self.residual,
            "fixed_point_defect": self.fixed_point_defect,
            "max_ratio": self.max_ratio(),
            "eta_c0": self.norms.c0,
            "eta_holder": self.norms.holder,
            "eta_df_lip": self.norms.df_lip,
            "ball_confinement": self.ball_confinement,
            "J_norm_estimate": self.j_norm,
            "resolution": self.eta.grid.resolution,
        }
        if self.certificate is not None:
            out["certificate"] = int(self.certificate.positive)
        out.update(self.extras)
        return out


def conjugacy_residual(g: ModelMap, f: ModelMap, eta: DiscreteVectorField) -> float:
    """``sup_x d(g(h(x)), h(f(x)))`` over the grid nodes."""
    pts = eta.grid.points
    h_x = pts + eta.values
    fx = orbit_positions(f, pts, 1, eta.grid)[1]
    h_fx = fx + interpolate(eta, fx)
    return float(np.max(dist(g.evaluate(h_x), h_fx, f.frame), initial=0.0))


def solve_conjugacy(f: ModelMap, g: ModelMap, projectors: ComponentProjectors, partition: PartitionOfUnity,
                    cfg: SolverConfig, grid: Grid, eta0: DiscreteVectorField | None = None,
                    certify: bool = True) -> ConjugacyResult:
    """Iterate ``R_g(eta) = J(Psi(g, eta) - f_# eta)`` to its fixed point."""
    op = RightInverse(f, projectors, partition, cfg.budget)
    pairs = pair_sample(f, grid, cfg.window, cfg.pair_budget)
    eta = eta0 if eta0 is not None else DiscreteVectorField.zeros(grid, f.frame)

    def step(field):
        return op.apply(q_field(g, f, field))

    def norms_of(field):
        return field_norms(field, cfg.alpha, f, cfg.window, pairs=pairs)

    first_q = q_field(g, f, eta)
    trace, ratios = [], []
    if first_q.sup_norm() == 0.0:
        norms = norms_of(eta)
        trace.append(TraceRow(0, 0.0, 0.0, norms.c0, norms.holder, norms.df_lip, norms.combined))
        result = ConjugacyResult(eta, 0, ratios, conjugacy_residual(g, f, eta), 0.0, norms, norms.combined,
                                 trace, cfg, 0.0, None)
        if certify:
            result.certificate = check_homeomorphism(result, f, pairs=pairs)
        return result

    op.check_decay(first_q)
    probe_grid = Grid(min(cfg.probe_resolution, grid.resolution), grid.kind)
    j_norm, _ = estimate_j_norm(op, probe_grid, f.frame, cfg.seed, cfg.probes)
    report = verify_perturbation_bounds(g, f, DiscreteVectorField.zeros(grid, f.frame), cfg.alpha,
                                        cfg.window, pairs=pairs)
    gate = cfg.r_ball / (2.0 * j_norm)
    if report.q_c0 > gate:
        raise DivergenceError(
            f"perturbation too large: |Q(g,0)| = {report.q_c0:.4g} exceeds r/(2|J|) = {gate:.4g}", trace=[]
        )

    norms = norms_of(eta)
    trace.append(TraceRow(0, 0.0, math.nan, norms.c0, norms.holder, norms.df_lip, norms.combined))
    confinement = norms.combined
    prev_update = None
    streak = 0
    for it in range(1, cfg.max_iter + 1):
        new = op.apply(q_field(g, f, eta))
        update = float(np.max(f.frame.norm(new.values - eta.values), initial=0.0))
        ratio = update / prev_update if prev_update else math.nan
        if prev_update:
            ratios.append(ratio)
        eta = new
        norms = norms_of(eta)
        confinement = max(confinement, norms.combined)
        trace.append(TraceRow(it, update, ratio, norms.c0, norms.holder, norms.df_lip, norms.combined))
        trace_values = [row.csv_row() for row in trace]
        if eta.sup_norm() >= cfg.r_ball:
            raise DivergenceError(f"iterate left the ball of radius {cfg.r_ball} at step {it}", trace=trace_values)
        streak = streak + 1 if prev_update and ratio >= DIVERGENCE_RATIO else 0
        if streak >= DIVERGENCE_STREAK:
            raise DivergenceError(f"contraction lost: ratio >= {DIVERGENCE_RATIO} for {streak} steps",
                                  trace=trace_values)
        prev_update = update
        if update <= cfg.tol:
            break
    else:
        raise DivergenceError(f"no convergence within {cfg.max_iter} iterations",
                              trace=[row.csv_row() for row in trace])

    check = step(eta)
    fixed_point_defect = float(np.max(f.frame.norm(check.values - eta.values), initial=0.0))
    result = ConjugacyResult(eta, it, ratios, conjugacy_residual(g, f, eta), fixed_point_defect, norms,
                             confinement, trace, cfg, j_norm, report)
    if certify:
        result.certificate = check_homeomorphism(result, f, pairs=pairs)
    return result


def _winding(grid: Grid, images, axis: int):
    """Net displacement of the image loop along each node row of ``axis``."""
    shaped = images.reshape(grid.shape + (grid.dim,))
    steps = wrap(np.roll(shaped, -1, axis=axis) - shaped)
    return np.sum(steps, axis=axis)


def check_homeomorphism(result: ConjugacyResult, f: ModelMap, w: int | None = None, pairs=None) -> Certificate:
    """d_f-Lipschitz bar, grid-level injectivity and degree of ``h = id + eta``."""
    eta = result.eta
    grid = eta.grid
    if pairs is None:
        pairs = pair_sample(f, grid, w if w is not None else result.config.window, result.config.pair_budget)
    df_lip = field_norms(eta, result.config.alpha, f, pairs.window, pairs=pairs).df_lip
    images = np.mod(grid.points + eta.values, 1.0)
    images = np.where(images >= 1.0, 0.0, images)
    tree = cKDTree(images, boxsize=1.0)
    close = tree.query_pairs(0.5 * grid.spacing, output_type="ndarray")
    witness = None if len(close) == 0 else (int(close[0, 0]), int(close[0, 1]))
    nearest, _ = tree.query(images, k=2)
    min_sep = float(np.min(nearest[:, 1])) / grid.spacing
    degree = []
    for axis in range(grid.dim):
        wind = _winding(grid, grid.points + eta.values, axis)
        mean = np.rint(wind.reshape(-1, grid.dim)).astype(int)
        if not np.all(mean == mean[0]):
            degree.append(tuple([-1] * grid.dim))
        else:
            degree.append(tuple(int(v) for v in mean[0]))
    degree_t = tuple(degree)
    identity = tuple(tuple(int(i == j) for j in range(grid.dim)) for i in range(grid.dim))
    injective = witness is None
    positive = df_lip <= 0.5 and injective and degree_t == identity
    return Certificate(positive, df_lip, injective, degree_t, witness, min_sep)


@dataclass(frozen=True)
class HolderRow:
    alpha: float
    admissible: bool
    report: NormReport


def holder_report(result: ConjugacyResult, f: ModelMap, alphas, pairs=None):
    """Per-alpha norms of ``eta`` plus the estimated exponent."""
    constants = hyperbolicity_constants(f)
    if pairs is None:
        pairs = pair_sample(f, result.eta.grid, result.config.window, result.config.pair_budget)
    rows = []
    for a in alphas:
        admissible = bool(0.0 < a < 1.0 and constants.lam * constants.l**a < 1.0)
        rows.append(HolderRow(float(a), admissible, field_norms(result.eta, a, f, pairs.window, pairs=pairs)))
    return rows, estimate_exponent(result.eta, f)


def fixed_point_matching(result: ConjugacyResult, f: ModelMap, g: ModelMap, period: int):
    """Largest distance between h(p) and the Newton-refined period point of g near it."""
    from hyperstab.systems import find_periodic_point, linear_periodic_points

    grid = result.eta.grid
    points = np.asarray(linear_periodic_points(f.linear_part, period), dtype=float)
    idx = grid.node_index(points)
    if idx is None:
        raise ConfigError(f"period-{period} points of f are not grid nodes at resolution {grid.resolution}")
    h_p = np.mod(points + result.eta.values[idx], 1.0)
    worst = 0.0
    for hp in h_p:
        q = find_periodic_point(g, period, hp)
        worst = max(worst, float(dist(hp, q, f.frame)))
    return worst, len(points)


def orbit_defect(result: ConjugacyResult, f: ModelMap, g: ModelMap, n_max: int = 20, count: int = 100,
                 seed: int = 0):
    """``max d(h(f^n x), g^n(h x))`` over random nodes x, and its telescoping factor."""
    grid = result.eta.grid
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, grid.size, count)
    x = grid.points[idx]
    fx = x
    gx = np.mod(x + result.eta.values[idx], 1.0)
    lip_g = float(np.max(f.frame.operator_norm(g.jacobian(grid.points))))
    worst, worst_factor = 0.0, 1.0
    factor = 0.0
    for n in range(1, n_max + 1):
        fx = orbit_positions(f, fx, 1, grid)[1]
        gx = g.evaluate(gx)
        factor = factor * lip_g + 1.0
        d = float(np.max(dist(fx + interpolate(result.eta, fx), gx, f.frame)))
        if d > worst:
            worst, worst_factor = d, factor
    return worst, max(worst_factor, factor)


def write_result_dir(out: Path, result: ConjugacyResult, extra: dict | None = None) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    summary = result.summary()
    if extra:
        summary.update(extra)
    write_csv(out / "result.csv", ("key", "value"), sorted(summary.items()))
    grid = result.eta.grid
    names = ("eta_u", "eta_v")
    for c in range(grid.dim):
        image = result.eta.component_grid(c)
        if image.ndim == 1:
            image = image[None, :]
        write_pgm(out / f"{names[c]}.pgm", image)
    write_csv(out / "trace.csv", TraceRow.CSV_COLUMNS, (row.csv_row() for row in result.trace))
    cert = result.certificate
    text = "\n".join(cert.lines()) + "\n" if cert is not None else "certificate not computed\n"
    (out / "certificate.txt").write_text(text)
    return out


def default_solver_config(f: ModelMap, projectors, partition, grid: Grid, tol: float = 1e-10,
                          alpha: float | None = None, window: int | None = None, series_factor: float = 1e-3,
                          **kwargs) -> SolverConfig:
    """Solver configuration with the series truncation chosen from ``tol``."""
    from hyperstab.rightinverse import series_budget

    constants = hyperbolicity_constants(f, alpha)
    budget = series_budget(f, projectors, partition, tol=series_factor * tol, constants=constants)
    window = window if window is not None else default_window(f, grid.spacing, constants.lam)
    return SolverConfig(budget, constants.alpha if alpha is None else alpha, window, tol=tol, **kwargs)


__all__ = [
    "SolverConfig",
    "ConjugacyResult",
    "PerturbationReport",
    "Certificate",
    "psi",
    "q_field",
    "verify_perturbation_bounds",
    "solve_conjugacy",
    "check_homeomorphism",
    "holder_report",
    "conjugacy_residual",
    "fixed_point_matching",
    "orbit_defect",
    "write_result_dir",
    "default_solver_config",
]
