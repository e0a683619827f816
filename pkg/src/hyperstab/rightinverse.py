"""Push-forward of vector fields and the series right inverse of ``1 - f_#``.

For each basic-set component ``i`` the field ``theta_i * eta`` is split by the
invariant projectors into stable and unstable parts and

    J(eta) = sum_i [ sum_{n=0}^{N} f_#^n(eta_is) - sum_{n=1}^{N} f_#^{-n}(eta_iu) ].

Terms are evaluated along exact orbits of the target points: ``eta`` is
interpolated once per orbit point, and the partial sums are accumulated
Horner-style from the far end of the orbit, re-projecting onto the invariant
bundle after every derivative. Without the re-projection, rounding leaks into
the expanding direction and grows like ``l^n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hyperstab.errors import ConfigError, DecayError
from scipy import ndimage

from hyperstab.geometry import DiscreteVectorField, Grid, MetricFrame, dist, interpolate, interpolate_scalar
from hyperstab.norms import PairSample, difference_quotients, field_norms, pair_sample
from hyperstab.systems import (
    BasicSetData,
    HyperbolicityConstants,
    LinearToral,
    ModelMap,
    basic_sets,
    hyperbolicity_constants,
)

# ---------------------------------------------------------------------------
# partition of unity


def smoothstep(t):
    """Quintic C^2 step from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


class PartitionOfUnity:
    """Weights ``theta_i`` subordinate to the cover by ``f^n(U_i)``, |n| <= cover_N."""

    def __init__(self, weight_fn, k: int, cover_n: int, description: str = ""):
        self._weight_fn = weight_fn
        self.k = k
        self.cover_n = cover_n
        self.description = description

    def weights(self, x):
        """Array of shape ``(k,) + x.shape[:-1]``."""
        return self._weight_fn(np.asarray(x, dtype=float))

    def weight(self, i: int, x):
        return self.weights(x)[i]

    def grid_values(self, grid: Grid):
        return self.weights(grid.points)


def trivial_partition() -> PartitionOfUnity:
    return PartitionOfUnity(lambda x: np.ones((1,) + x.shape[:-1]), 1, 0, "single basic set")


def circle_partition(m: ModelMap, basic: BasicSetData | None = None, inner: float = 0.15,
                     outer: float = 0.35, resolution: int = 1024) -> PartitionOfUnity:
    """Smoothstep pair: theta_1 = 1 near the repeller, theta_2 = 1 - theta_1."""
    basic = basic if basic is not None else basic_sets(m)
    if basic.k != 2:
        raise ConfigError("circle partition needs exactly two basic sets")
    repeller = np.array([basic.components[0].points[0]])
    if not 0.0 < inner < outer < 0.5:
        raise ConfigError("need 0 < inner < outer < 1/2")

    def weights(x):
        d = dist(x, repeller, m.frame)
        t1 = smoothstep((outer - d) / (outer - inner))
        return np.stack([t1, 1.0 - t1])

    part = PartitionOfUnity(weights, 2, 0, f"smoothstep inner={inner} outer={outer}")
    part.cover_n = cover_iterations(m, basic, part, resolution)
    return part


def cover_iterations(m: ModelMap, basic: BasicSetData, partition: PartitionOfUnity,
                     resolution: int = 1024, n_cap: int = 200) -> int:
    """Smallest N with supp(theta_i) inside the union of f^n(U_i), |n| <= N."""
    if all(c.whole for c in basic.components):
        return 0
    grid = Grid(resolution, m.kind)
    pts = grid.points
    theta = partition.grid_values(grid)
    need = theta > 0.0
    covered = np.zeros_like(need)
    fwd = bwd = pts
    for n in range(n_cap + 1):
        for i, comp in enumerate(basic.components):
            centers = np.asarray(comp.points).reshape(-1, m.dim)
            for c in centers:
                covered[i] |= dist(fwd, c, m.frame) < comp.radius
                covered[i] |= dist(bwd, c, m.frame) < comp.radius
        if np.all(covered[need]):
            return n
        # x lies in f^n(U) iff f^-n(x) lies in U
        fwd, bwd = m.inverse(fwd), m.evaluate(bwd)
    raise ConfigError(f"cover by iterates of U_i not reached within {n_cap} steps")


# ---------------------------------------------------------------------------
# projectors


class Projector:
    """Nodewise projector pair onto E^s along E^u and onto E^u along E^s."""

    zero_stable = False
    zero_unstable = False

    def stable(self, x):
        raise NotImplementedError

    def unstable(self, x):
        ps = self.stable(x)
        return np.eye(ps.shape[-1]) - ps


class ConstantProjector(Projector):
    """Constant projector; ``extended`` optionally carries it in long double precision."""

    def __init__(self, stable_matrix, extended=None):
        self.matrix = np.array(stable_matrix, dtype=float)
        self.extended = (np.asarray(extended, dtype=np.longdouble) if extended is not None
                         else self.matrix.astype(np.longdouble))
        d = len(self.matrix)
        self.zero_stable = bool(np.all(self.matrix == 0.0))
        self.zero_unstable = bool(np.all(self.matrix == np.eye(d)))

    def stable(self, x):
        x = np.asarray(x)
        return np.broadcast_to(self.matrix, x.shape[:-1] + self.matrix.shape)

    def unstable(self, x):
        x = np.asarray(x)
        comp = np.eye(len(self.matrix)) - self.matrix
        return np.broadcast_to(comp, x.shape[:-1] + comp.shape)


def _graph_projector(frame: MetricFrame, tau, sigma):
    """Projector onto span(e_s + sigma e_u) along span(e_u + tau e_s), standard coords."""
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    det = 1.0 - sigma * tau
    # frame coords: u-vector (1, tau), s-vector (sigma, 1); P_s = s (row of V^-1 for s)
    local = np.empty(tau.shape + (2, 2))
    local[..., 0, 0] = -sigma * tau / det
    local[..., 0, 1] = sigma / det
    local[..., 1, 0] = -tau / det
    local[..., 1, 1] = 1.0 / det
    return frame.basis @ local @ frame.inverse


class SectionProjector(Projector):
    """Projectors from graph sections tau (E^u) and sigma (E^s) over the reference frame."""

    def __init__(self, grid: Grid, frame: MetricFrame, tau, sigma):
        self.grid = grid
        self.frame = frame
        self.tau = np.asarray(tau, dtype=float)
        self.sigma = np.asarray(sigma, dtype=float)
        self._coeffs = [ndimage.spline_filter(v.reshape(grid.shape), order=3, mode="grid-wrap")
                        for v in (self.tau, self.sigma)]

    def stable(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.grid.node_index(x)
        if idx is not None:
            tau, sigma = self.tau[idx], self.sigma[idx]
        else:
            tau, sigma = (interpolate_scalar(self.grid, c, x) for c in self._coeffs)
        return _graph_projector(self.frame, tau, sigma)


@dataclass
class ComponentProjectors:
    components: list

    @property
    def k(self) -> int:
        return len(self.components)

    def max_norm(self, grid: Grid, frame: MetricFrame) -> float:
        worst = 0.0
        for p in self.components:
            for mats in (p.stable(grid.points), p.unstable(grid.points)):
                worst = max(worst, float(np.max(frame.operator_norm(mats))))
        return worst

    def idempotence_defect(self, grid: Grid) -> float:
        worst = 0.0
        for p in self.components:
            ps = p.stable(grid.points)
            worst = max(worst, float(np.max(np.abs(ps @ ps - ps))))
        return worst


def spectral_stable_projector(matrix):
    """``(A - mu_u)/(mu_s - mu_u)`` for a hyperbolic 2x2 matrix, in long double."""
    a = np.asarray(matrix, dtype=np.longdouble)
    trace = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    disc = trace * trace - 4 * det
    if disc <= 0:
        raise ConfigError("matrix has no real eigenvalue split")
    root = np.sqrt(disc)
    mus = sorted([(trace + root) / 2, (trace - root) / 2], key=abs)
    mu_s, mu_u = mus
    if not abs(mu_s) < 1 < abs(mu_u):
        raise ConfigError("matrix is not hyperbolic")
    return (a - mu_u * np.eye(2, dtype=np.longdouble)) / (mu_s - mu_u)


def eigen_projectors(m: ModelMap) -> ComponentProjectors:
    """Constant spectral projectors of the linear part of a toral map."""
    ext = spectral_stable_projector(m.linear_part)
    return ComponentProjectors([ConstantProjector(ext.astype(float), ext)])


def circle_projectors(basic: BasicSetData) -> ComponentProjectors:
    comps = []
    for c in basic.components:
        comps.append(ConstantProjector([[0.0]] if c.unstable_rank else [[1.0]]))
    return ComponentProjectors(comps)


def splitting_projectors(result) -> ComponentProjectors:
    """Projectors from an invariant splitting (see :mod:`hyperstab.splitting`)."""
    return ComponentProjectors(
        [SectionProjector(result.grid, result.reference.frame, result.tau, result.sigma)]
    )


def default_setup(m: ModelMap):
    """Projectors and partition for the supported families of the base map."""
    basic = basic_sets(m)
    if m.dim == 2:
        return eigen_projectors(m), trivial_partition()
    return circle_projectors(basic), circle_partition(m, basic)


# ---------------------------------------------------------------------------
# series budget


@dataclass(frozen=True)
class SeriesBudget:
    n_trunc: int
    rho: float
    k_decay: float
    tail_bound: float
    kappa: float
    tf_norm: float
    cover_n: int
    n0: int

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ConfigError(f"series decay rate rho = {self.rho:.6g} must lie in (0, 1)")
        if self.n_trunc < 0:
            raise ConfigError("N_trunc must be nonnegative")

    @staticmethod
    def tail(k_decay, rho, n_trunc):
        return k_decay * rho ** (n_trunc + 1) / (1.0 - rho)

    def with_truncation(self, n_trunc: int) -> "SeriesBudget":
        return SeriesBudget(n_trunc, self.rho, self.k_decay, self.tail(self.k_decay, self.rho, n_trunc),
                            self.kappa, self.tf_norm, self.cover_n, self.n0)

    def to_dict(self):
        return {
            "N_trunc": self.n_trunc,
            "rho": self.rho,
            "K_decay": self.k_decay,
            "tail_bound": self.tail_bound,
            "kappa": self.kappa,
            "Tf_norm": self.tf_norm,
            "cover_N": self.cover_n,
            "n0": self.n0,
        }


def series_budget(m: ModelMap, projectors: ComponentProjectors, partition: PartitionOfUnity,
                  n_trunc: int | None = None, tol: float | None = None,
                  constants: HyperbolicityConstants | None = None, grid: Grid | None = None,
                  max_rho_l_alpha: float = 1.0) -> SeriesBudget:
    """Decay constants rho = kappa lambda', K = (|Tf|/rho)^(2 n0 + N) and the tail bound."""
    constants = constants or hyperbolicity_constants(m)
    grid = grid or Grid(128 if m.dim == 2 else 1024, m.kind)
    kappa = 1.01 * max(1.0, projectors.max_norm(grid, m.frame))
    rho = kappa * constants.lam_prime
    if rho >= 1.0:
        raise ConfigError(f"rho = kappa * lambda' = {rho:.6g} >= 1")
    growth = rho * constants.l**constants.alpha
    if growth >= max_rho_l_alpha:
        raise ConfigError(f"rho * l^alpha = {growth:.6g} violates the bound {max_rho_l_alpha}")
    tf_norm = float(np.max(m.frame.operator_norm(m.jacobian(grid.points))))
    cover_n = partition.cover_n
    n0 = 2 * partition.k * cover_n
    k_decay = max(1.0, tf_norm / rho) ** (2 * n0 + cover_n)
    if n_trunc is None:
        if tol is None:
            raise ConfigError("give either N_trunc or a tolerance")
        n_trunc = max(0, math.ceil(math.log(tol * (1.0 - rho) / k_decay) / math.log(rho)) - 1)
    tail = SeriesBudget.tail(k_decay, rho, n_trunc)
    return SeriesBudget(int(n_trunc), rho, k_decay, tail, kappa, tf_norm, cover_n, n0)


# ---------------------------------------------------------------------------
# orbits and push-forward


def orbit_positions(m: ModelMap, x, n: int, grid: Grid | None = None):
    """``[f^j(x) for j in 0..|n|]`` forward (n > 0) or backward (n < 0)."""
    x = np.asarray(x, dtype=float)
    out = [x]
    if n == 0:
        return out
    perm = m.grid_permutation(grid) if grid is not None else None
    idx = grid.node_index(x) if perm is not None else None
    if idx is not None:
        if n < 0:
            inv = np.empty_like(perm)
            inv[perm] = np.arange(grid.size)
            perm = inv
        for _ in range(abs(n)):
            idx = perm[idx]
            out.append(grid.points[idx])
        return out
    step = m.evaluate if n > 0 else m.inverse
    for _ in range(abs(n)):
        x = step(x)
        out.append(x)
    return out


def _apply(mats, v):
    return np.einsum("...ij,...j->...i", mats, v)


def _solve(mats, v):
    if mats.shape[-1] == 1:
        return v / mats[..., 0, :]
    return np.linalg.solve(mats, v[..., None])[..., 0]


def push_forward(m: ModelMap, eta: DiscreteVectorField) -> DiscreteVectorField:
    """``f_#(eta)(x) = Df(f^-1 x) eta(f^-1 x)`` on the grid of ``eta``."""
    grid = eta.grid
    pre = orbit_positions(m, grid.points, -1, grid)[1]
    return eta.like(_apply(m.jacobian(pre), interpolate(eta, pre)))


def push_forward_inverse(m: ModelMap, eta: DiscreteVectorField) -> DiscreteVectorField:
    """``f_#^-1(eta)(x) = Df(x)^-1 eta(f x)``."""
    grid = eta.grid
    post = orbit_positions(m, grid.points, 1, grid)[1]
    return eta.like(_solve(m.jacobian(grid.points), interpolate(eta, post)))


# ---------------------------------------------------------------------------
# decomposition and J


def component_source(eta: DiscreteVectorField, projector: Projector, partition: PartitionOfUnity,
                     i: int, stable: bool):
    """Pointwise ``eta_{i sigma}(y) = P_sigma(y) theta_i(y) eta(y)``."""

    def fn(y):
        weight = partition.weight(i, y)[..., None]
        mats = projector.stable(y) if stable else projector.unstable(y)
        return _apply(mats, weight * interpolate(eta, y))

    return fn


def decompose(eta: DiscreteVectorField, projectors: ComponentProjectors, partition: PartitionOfUnity):
    """Per-component pairs ``(eta_is, eta_iu)`` on the grid."""
    if projectors.k != partition.k:
        raise ConfigError("projector and partition component counts differ")
    pts = eta.grid.points
    out = []
    for i, proj in enumerate(projectors.components):
        s = component_source(eta, proj, partition, i, True)(pts)
        u = component_source(eta, proj, partition, i, False)(pts)
        out.append((eta.like(s), eta.like(u)))
    return out


def stable_series(m, source, projector, x, n_trunc, grid=None):
    """``sum_{n=0}^{N} f_#^n(source)(x)`` by Horner accumulation along the backward orbit."""
    ys = orbit_positions(m, x, -n_trunc, grid)
    acc = source(ys[-1])
    for j in range(n_trunc, 0, -1):
        y_prev = ys[j - 1]
        acc = source(y_prev) + _apply(projector.stable(y_prev), _apply(m.jacobian(ys[j]), acc))
    return acc


def unstable_series(m, source, projector, x, n_trunc, grid=None):
    """``-sum_{n=1}^{N} f_#^-n(source)(x)`` by Horner accumulation along the forward orbit."""
    x = np.asarray(x, dtype=float)
    if n_trunc == 0:
        return np.zeros(x.shape)
    zs = orbit_positions(m, x, n_trunc, grid)
    acc = source(zs[-1])
    for j in range(n_trunc - 1, 0, -1):
        acc = source(zs[j]) + _apply(projector.unstable(zs[j]), _solve(m.jacobian(zs[j]), acc))
    return -_apply(projector.unstable(x), _solve(m.jacobian(x), acc))


def single_term(m, source, projector, x, n, stable: bool, grid=None):
    """The individual term ``f_#^n(source)`` (stable) or ``f_#^-n(source)`` (unstable) at x."""
    pts = orbit_positions(m, x, -n if stable else n, grid)
    v = source(pts[-1])
    for j in range(n, 0, -1):
        if stable:
            v = _apply(projector.stable(pts[j - 1]), _apply(m.jacobian(pts[j]), v))
        else:
            v = _apply(projector.unstable(pts[j - 1]), _solve(m.jacobian(pts[j - 1]), v))
    return v


class RightInverse:
    """Truncated series right inverse of ``1 - f_#`` for a fixed base map."""

    def __init__(self, m: ModelMap, projectors: ComponentProjectors, partition: PartitionOfUnity,
                 budget: SeriesBudget):
        if projectors.k != partition.k:
            raise ConfigError("projector and partition component counts differ")
        self.m = m
        self.projectors = projectors
        self.partition = partition
        self.budget = budget

    def _node_path(self, grid: Grid):
        """Index permutations for the exact long double path, or None.

        Available when the base map is linear, permutes the grid nodes and all
        projectors are constant: orbits are then exact and every term can be
        carried in extended precision.
        """
        if not isinstance(self.m, LinearToral):
            return None
        if not all(isinstance(p, ConstantProjector) for p in self.projectors.components):
            return None
        perm = self.m.grid_permutation(grid)
        if perm is None:
            return None
        inv = np.empty_like(perm)
        inv[perm] = np.arange(grid.size)
        return perm, inv

    def nodes_extended(self, eta: DiscreteVectorField):
        """``J(eta)`` at every node in long double (exact-orbit path only)."""
        path = self._node_path(eta.grid)
        if path is None:
            raise ConfigError("no exact node path for this map")
        perm, inv = path
        n = self.budget.n_trunc
        a = self.m.matrix.astype(np.longdouble)
        a_inv = self.m.matrix_inv.astype(np.longdouble)
        ident = np.eye(self.m.dim, dtype=np.longdouble)
        values = eta.values.astype(np.longdouble)
        weights = self.partition.grid_values(eta.grid).astype(np.longdouble)
        total = np.zeros_like(values)
        for i, proj in enumerate(self.projectors.components):
            local = weights[i][:, None] * values
            ps = proj.extended
            pu = ident - ps
            if not proj.zero_stable:
                src = local @ ps.T
                step = (ps @ a).T
                acc = src
                for _ in range(n):
                    acc = src + acc[inv] @ step
                total += acc
            if not proj.zero_unstable and n > 0:
                src = local @ pu.T
                step = (pu @ a_inv).T
                acc = src[perm] @ step
                for _ in range(n - 1):
                    acc = (src[perm] + acc[perm]) @ step
                total -= acc
        return total

    def _parts(self, eta):
        for i, proj in enumerate(self.projectors.components):
            if not proj.zero_stable:
                yield proj, component_source(eta, proj, self.partition, i, True), True
            if not proj.zero_unstable:
                yield proj, component_source(eta, proj, self.partition, i, False), False

    def at(self, eta: DiscreteVectorField, x):
        """Evaluate ``J(eta)`` at arbitrary points."""
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape)
        n = self.budget.n_trunc
        for proj, src, stable in self._parts(eta):
            if stable:
                total += stable_series(self.m, src, proj, x, n, eta.grid)
            else:
                total += unstable_series(self.m, src, proj, x, n, eta.grid)
        return total

    def apply(self, eta: DiscreteVectorField) -> DiscreteVectorField:
        if self._node_path(eta.grid) is not None:
            return eta.like(self.nodes_extended(eta).astype(float))
        return eta.like(self.at(eta, eta.grid.points))

    __call__ = apply

    def term_norms(self, eta: DiscreteVectorField, ns):
        """Sup norms of the individual series terms of every nonzero component."""
        out = []
        pts = eta.grid.points
        for proj, src, stable in self._parts(eta):
            norms = [float(np.max(eta.frame.norm(single_term(self.m, src, proj, pts, n, stable, eta.grid))))
                     for n in ns]
            out.append(norms)
        return out

    def check_decay(self, eta: DiscreteVectorField, n_early: int = 5, n_late: int = 10):
        """Raise DecayError unless every component term shrinks from n_early to n_late."""
        for norms in self.term_norms(eta, (n_early, n_late)):
            early, late = norms
            if late > 0.0 and not late < early:
                raise DecayError(
                    f"series term did not decay: |term {n_early}| = {early:.3g}, "
                    f"|term {n_late}| = {late:.3g}; splitting or cover misconfigured"
                )


def apply_J(m: ModelMap, eta: DiscreteVectorField, projectors: ComponentProjectors,
            partition: PartitionOfUnity, budget: SeriesBudget, check: bool = True) -> DiscreteVectorField:
    op = RightInverse(m, projectors, partition, budget)
    if check:
        op.check_decay(eta)
    return op.apply(eta)


@dataclass(frozen=True)
class RightInverseReport:
    residual: float
    eta_norm: float
    tail_bound: float
    ratio: float
    n_trunc: int


def one_minus_push(m: ModelMap, op: RightInverse, eta: DiscreteVectorField):
    """``(1 - f_#)(J eta)`` at the grid nodes, with ``f_#`` applied to J pointwise."""
    grid = eta.grid
    j_nodes = op.at(eta, grid.points)
    pre = orbit_positions(m, grid.points, -1, grid)[1]
    j_pre = op.at(eta, pre)
    return j_nodes - _apply(m.jacobian(pre), j_pre)


def verify_right_inverse(m: ModelMap, eta: DiscreteVectorField, projectors: ComponentProjectors,
                         partition: PartitionOfUnity, budget: SeriesBudget) -> RightInverseReport:
    """C^0 residual of ``(1 - f_#) J eta - eta`` and its ratio to ``tail_bound * |eta|``."""
    op = RightInverse(m, projectors, partition, budget)
    path = op._node_path(eta.grid)
    if path is not None:
        j_nodes = op.nodes_extended(eta)
        pushed = j_nodes[path[1]] @ m.matrix.astype(np.longdouble).T
        defect = j_nodes - pushed - eta.values.astype(np.longdouble)
        coords = defect @ eta.frame.inverse.astype(np.longdouble).T
        residual = float(np.max(np.sqrt(np.sum(coords * coords, axis=-1)), initial=0.0))
    else:
        defect = one_minus_push(m, op, eta) - eta.values
        residual = float(np.max(eta.frame.norm(defect), initial=0.0))
    eta_norm = eta.sup_norm()
    scale = budget.tail_bound * eta_norm
    ratio = residual / scale if scale > 0 else 0.0
    return RightInverseReport(residual, eta_norm, budget.tail_bound, ratio, budget.n_trunc)


# ---------------------------------------------------------------------------
# decay and Hoelder growth measurements


@dataclass(frozen=True)
class DecayMeasurement:
    norms: tuple
    rate: float

    def csv_rows(self, holder=None, bound=None):
        for n, c0 in enumerate(self.norms):
            yield (n, c0, "" if holder is None else holder[n], "" if bound is None else bound[n])


def fitted_rate(norms, n_start: int | None = None) -> float:
    norms = np.asarray(norms, dtype=float)
    n = np.arange(len(norms))
    if n_start is None:
        n_start = min(5, len(norms) // 2)
    sel = (n >= n_start) & (norms > 0.0)
    if sel.sum() < 2:
        return 0.0
    return float(math.exp(np.polyfit(n[sel], np.log(norms[sel]), 1)[0]))


def _push_sequence(m, zeta: DiscreteVectorField, projector: Projector, n_max: int, stable: bool):
    src = lambda y: _apply(projector.stable(y) if stable else projector.unstable(y), interpolate(zeta, y))
    pts = zeta.grid.points
    return [single_term(m, src, projector, pts, n, stable, zeta.grid) for n in range(n_max + 1)]


def measure_decay(m: ModelMap, zeta: DiscreteVectorField, n_max: int, projector: Projector | None = None,
                  stable: bool = True) -> DecayMeasurement:
    """Sup norms of ``f_#^n zeta`` (or ``f_#^-n`` when ``stable`` is False), n <= n_max."""
    if projector is None:
        projector = ConstantProjector(np.eye(m.dim) if stable else np.zeros((m.dim, m.dim)))
    terms = _push_sequence(m, zeta, projector, n_max, stable)
    norms = tuple(float(np.max(zeta.frame.norm(t), initial=0.0)) for t in terms)
    return DecayMeasurement(norms, fitted_rate(norms))


@dataclass(frozen=True)
class GrowthMeasurement:
    n: tuple
    c0: tuple
    holder: tuple
    bound: tuple
    constant_c: float
    constant_c_prime: float

    CSV_COLUMNS = ("n", "c0", "holder", "bound")

    def csv_rows(self):
        return zip(self.n, self.c0, self.holder, self.bound)


def holder_constant_of_matrices(mats, frame: MetricFrame, pairs: PairSample, alpha: float) -> float:
    diff = frame.operator_norm(mats[pairs.first] - mats[pairs.second])
    return float(np.max(diff / pairs.d**alpha, initial=0.0))


def measure_holder_growth(m: ModelMap, zeta: DiscreteVectorField, n_max: int, alpha: float,
                          budget: SeriesBudget, projector: Projector | None = None,
                          constants: HyperbolicityConstants | None = None, window: int = 4,
                          pair_budget: int = 4096, inflation: float = 1.1) -> GrowthMeasurement:
    """Sampled ``L_alpha(f_#^n zeta)`` against ``K (rho l^a)^n L_a(zeta) + C'((rho l^a)^n - rho^n)|zeta|``."""
    constants = constants or hyperbolicity_constants(m)
    if projector is None:
        projector = ConstantProjector(np.eye(m.dim))
    grid = zeta.grid
    pairs = pair_sample(m, grid, window, pair_budget)
    terms = _push_sequence(m, zeta, projector, n_max, True)
    c0 = [float(np.max(zeta.frame.norm(t), initial=0.0)) for t in terms]
    holder = [difference_quotients(t, zeta.frame, pairs, alpha)[0] for t in terms]
    pts = grid.points
    l_alpha = constants.l**alpha
    c_const = (budget.tf_norm * holder_constant_of_matrices(projector.stable(pts), m.frame, pairs, alpha)
               + holder_constant_of_matrices(m.jacobian(pts), m.frame, pairs, alpha))
    rho = budget.rho
    k = budget.k_decay
    c_prime = c_const * k * k * l_alpha / (rho * (l_alpha - 1.0)) if l_alpha > 1.0 else 0.0
    bound = []
    for n in range(n_max + 1):
        b = k * (rho * l_alpha) ** n * holder[0] + c_prime * ((rho * l_alpha) ** n - rho**n) * c0[0]
        bound.append(inflation * b)
    return GrowthMeasurement(tuple(range(n_max + 1)), tuple(c0), tuple(holder), tuple(bound), c_const, c_prime)


def estimate_j_norm(op: RightInverse, grid: Grid, frame: MetricFrame, seed: int = 0, probes: int = 20,
                    alpha: float | None = None, window: int | None = None, pairs=None):
    """Largest ``|J eta| / |eta|`` over seeded random unit fields (C^0 and optionally alpha,f)."""
    from hyperstab.fields import random_trig_field

    rng = np.random.default_rng(seed)
    c0_ratio, af_ratio = 0.0, None
    for _ in range(probes):
        eta = random_trig_field(grid, frame, rng)
        j_eta = op.apply(eta)
        c0_ratio = max(c0_ratio, j_eta.sup_norm() / eta.sup_norm())
        if alpha is not None:
            num = field_norms(j_eta, alpha, op.m, window, pairs=pairs).combined
            den = field_norms(eta, alpha, op.m, window, pairs=pairs).combined
            af_ratio = max(af_ratio or 0.0, num / den)
    return c0_ratio, af_ratio


def is_linear(m: ModelMap) -> bool:
    return isinstance(m, LinearToral)
