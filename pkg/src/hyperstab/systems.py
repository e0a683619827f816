"""Model diffeomorphisms of S^1 and T^2 with exact Jacobians and inverses.

Four families are supported:

* :class:`LinearToral` -- ``x -> A x mod 1`` for an integer hyperbolic matrix;
* :class:`PerturbedToral` -- ``x -> A x + eps * P(x) mod 1`` with a finite
  trigonometric series ``P``;
* :class:`MorseSmaleCircle` -- ``x -> x + a sin(2 pi x) mod 1``;
* :class:`Conjugated` -- ``phi o f o phi^-1`` for a near-identity
  trigonometric diffeomorphism ``phi``, used as a ground-truth conjugacy.

Nonlinear inverses are computed by Newton iteration in the universal cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hyperstab.errors import ConfigError, ConvergenceError
from hyperstab.geometry import Grid, ManifoldKind, MetricFrame, dist, reduce_mod1, wrap

TWO_PI = 2.0 * math.pi
NEWTON_STEPS = 50
NEWTON_TOL = 1e-15


@dataclass(frozen=True, eq=False)
class TrigSeries:
    """Vector-valued finite series ``sum_t amp_t sin(2 pi k_t . x + phase_t) e_{comp_t}``."""

    dim: int
    components: np.ndarray
    amplitudes: np.ndarray
    wavevectors: np.ndarray
    phases: np.ndarray

    @classmethod
    def from_terms(cls, dim: int, terms) -> "TrigSeries":
        terms = list(terms)
        comps = np.array([int(t["component"]) for t in terms], dtype=np.int64)
        amps = np.array([float(t["amplitude"]) for t in terms], dtype=float)
        ks = np.array([list(t["wavevector"]) for t in terms], dtype=float).reshape(len(terms), dim)
        phases = np.array([float(t.get("phase", 0.0)) for t in terms], dtype=float)
        if np.any((comps < 0) | (comps >= dim)):
            raise ConfigError("trig term component out of range")
        if np.any(ks != np.rint(ks)):
            raise ConfigError("trig wavevectors must be integer for periodicity")
        return cls(dim, comps, amps, ks, phases)

    @classmethod
    def zero(cls, dim: int) -> "TrigSeries":
        return cls.from_terms(dim, [])

    def scaled(self, factor: float) -> "TrigSeries":
        return TrigSeries(self.dim, self.components, self.amplitudes * factor, self.wavevectors, self.phases)

    def terms(self):
        return [
            {
                "component": int(c),
                "amplitude": float(a),
                "wavevector": [int(k) for k in kv],
                "phase": float(p),
            }
            for c, a, kv, p in zip(self.components, self.amplitudes, self.wavevectors, self.phases)
        ]

    def _angles(self, x):
        return TWO_PI * np.einsum("...j,tj->...t", x, self.wavevectors) + self.phases

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        if len(self.amplitudes) == 0:
            return out
        s = np.sin(self._angles(x)) * self.amplitudes
        for c in range(self.dim):
            out[..., c] = s[..., self.components == c].sum(axis=-1)
        return out

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (self.dim,))
        if len(self.amplitudes) == 0:
            return out
        cs = np.cos(self._angles(x)) * (TWO_PI * self.amplitudes)
        for c in range(self.dim):
            sel = self.components == c
            out[..., c, :] = np.einsum("...t,tj->...j", cs[..., sel], self.wavevectors[sel])
        return out


def default_perturbation() -> TrigSeries:
    """Smooth perturbation of unit size used by the shipped toral configs."""
    return TrigSeries.from_terms(
        2,
        [
            {"component": 0, "amplitude": 1.0, "wavevector": [1, 0], "phase": 0.0},
            {"component": 0, "amplitude": 0.5, "wavevector": [1, 1], "phase": math.pi / 2},
            {"component": 1, "amplitude": 1.0, "wavevector": [0, 1], "phase": 0.0},
            {"component": 1, "amplitude": 0.5, "wavevector": [1, 0], "phase": math.pi / 2},
        ],
    )


def _newton_solve(forward, jacobian, y, seed, what: str):
    """Solve ``forward(z) = y (mod 1)`` for z near ``seed`` by Newton in the lift."""
    z = np.array(seed, dtype=float)
    for _ in range(NEWTON_STEPS):
        r = wrap(forward(z) - y)
        if np.max(np.abs(r), initial=0.0) <= NEWTON_TOL:
            return reduce_mod1(z)
        jac = jacobian(z)
        if jac.shape[-1] == 1:
            step = r / jac[..., 0, :]
        else:
            step = np.linalg.solve(jac, r[..., None])[..., 0]
        z = z - step
    r = wrap(forward(z) - y)
    if np.max(np.abs(r), initial=0.0) <= 1e-13:
        return reduce_mod1(z)
    raise ConvergenceError(
        f"{what}: Newton did not converge in {NEWTON_STEPS} steps "
        f"(residual {np.max(np.abs(r)):.3g}); configuration is not a diffeomorphism"
    )


class ModelMap:
    """Common interface: ``evaluate``, ``inverse``, ``jacobian`` on point arrays."""

    kind: ManifoldKind
    frame: MetricFrame
    family: str = ""

    @property
    def dim(self) -> int:
        return self.kind.dim

    def evaluate(self, x):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def jacobian(self, x):
        raise NotImplementedError

    def inverse_jacobian(self, y):
        """Derivative of ``f^-1`` at ``y``."""
        return np.linalg.inv(self.jacobian(self.inverse(y)))

    def iterate(self, x, n: int):
        """``f^n(x)`` for integer n (negative for inverse iterates)."""
        step = self.evaluate if n >= 0 else self.inverse
        for _ in range(abs(n)):
            x = step(x)
        return x

    def grid_permutation(self, grid: Grid):
        """Flat index map ``k -> index of f(node k)`` when f permutes the nodes."""
        return None

    @property
    def linear_part(self):
        return None

    def check_diffeomorphism(self, resolution: int = 64, min_det: float = 0.0) -> float:
        grid = Grid(resolution, self.kind)
        dets = np.linalg.det(self.jacobian(grid.points))
        worst = float(np.min(np.abs(dets)))
        signs = np.sign(dets)
        if worst <= min_det or not np.all(signs == signs[0]):
            raise ConfigError(f"{self.family}: Jacobian degenerates (min |det| = {worst:.3g})")
        back = self.evaluate(self.inverse(grid.points))
        err = float(np.max(dist(back, grid.points)))
        if err > 1e-10:
            raise ConfigError(f"{self.family}: inverse residual {err:.3g} exceeds 1e-10")
        return worst

    def to_dict(self) -> dict:
        raise NotImplementedError


def _eigenframe(matrix) -> MetricFrame:
    vals, vecs = np.linalg.eig(np.asarray(matrix, dtype=float))
    if np.iscomplexobj(vals) and np.any(np.abs(vals.imag) > 0):
        raise ConfigError("matrix has complex eigenvalues; not hyperbolic")
    vals = vals.real
    vecs = vecs.real
    order = np.argsort(-np.abs(vals))  # unstable first
    vecs = vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    # deterministic orientation: first nonzero entry positive
    for j in range(vecs.shape[1]):
        lead = vecs[np.argmax(np.abs(vecs[:, j]) > 1e-12), j]
        if lead < 0:
            vecs[:, j] = -vecs[:, j]
    return MetricFrame(vecs)


def toral_frame(matrix, choice: str = "eigen") -> MetricFrame:
    if choice == "eigen":
        return _eigenframe(matrix)
    if choice == "identity":
        return MetricFrame.identity(2)
    raise ConfigError(f"unknown frame choice {choice!r}")


def _check_toral_matrix(matrix) -> np.ndarray:
    a = np.array(matrix, dtype=float)
    if a.shape != (2, 2) or np.any(a != np.rint(a)):
        raise ConfigError("toral matrix must be a 2x2 integer matrix")
    if abs(abs(round(np.linalg.det(a))) - 1) != 0:
        raise ConfigError("toral matrix must have |det| = 1")
    vals = np.abs(np.linalg.eigvals(a))
    if np.any(np.abs(vals - 1.0) < 1e-9) or np.any(np.abs(np.imag(np.linalg.eigvals(a))) > 0):
        raise ConfigError("toral matrix is not hyperbolic")
    return a


class LinearToral(ModelMap):
    family = "linear_toral"
    kind = ManifoldKind.TORUS2

    def __init__(self, matrix=((2, 1), (1, 1)), frame: MetricFrame | str = "eigen"):
        self.matrix = _check_toral_matrix(matrix)
        self.matrix_inv = np.rint(np.linalg.inv(self.matrix))
        self.frame = toral_frame(self.matrix, frame) if isinstance(frame, str) else frame
        self.frame_choice = frame if isinstance(frame, str) else "custom"

    @property
    def linear_part(self):
        return self.matrix

    def evaluate(self, x):
        return reduce_mod1(np.einsum("ij,...j->...i", self.matrix, x))

    def inverse(self, y):
        return reduce_mod1(np.einsum("ij,...j->...i", self.matrix_inv, y))

    def jacobian(self, x):
        x = np.asarray(x)
        return np.broadcast_to(self.matrix, x.shape[:-1] + (2, 2)).copy()

    def inverse_jacobian(self, y):
        y = np.asarray(y)
        return np.broadcast_to(self.matrix_inv, y.shape[:-1] + (2, 2)).copy()

    def grid_permutation(self, grid: Grid):
        mult = np.einsum("ij,kj->ki", self.matrix.astype(np.int64), grid.indices)
        return grid.flat_index(mult)

    def to_dict(self):
        return {"kind": self.family, "matrix": self.matrix.astype(int).tolist(), "frame": self.frame_choice}


class PerturbedToral(ModelMap):
    family = "perturbed_toral"
    kind = ManifoldKind.TORUS2

    def __init__(self, matrix=((2, 1), (1, 1)), perturbation: TrigSeries | None = None,
                 amplitude: float = 0.01, frame: MetricFrame | str = "eigen", checked: bool = True):
        self.matrix = _check_toral_matrix(matrix)
        self.matrix_inv = np.linalg.inv(self.matrix)
        self.checked = bool(checked)
        self.perturbation = perturbation if perturbation is not None else default_perturbation()
        self.amplitude = float(amplitude)
        self._series = self.perturbation.scaled(self.amplitude)
        self.frame = toral_frame(self.matrix, frame) if isinstance(frame, str) else frame
        self.frame_choice = frame if isinstance(frame, str) else "custom"
        # unchecked maps may fold; they exist to exercise the solver's divergence handling
        if self.checked:
            self.check_diffeomorphism()

    @property
    def linear_part(self):
        return self.matrix

    def _lift(self, x):
        return np.einsum("ij,...j->...i", self.matrix, x) + self._series.value(x)

    def evaluate(self, x):
        return reduce_mod1(self._lift(np.asarray(x, dtype=float)))

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return self.matrix + self._series.jacobian(x)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.amplitude == 0.0:
            return reduce_mod1(np.einsum("ij,...j->...i", self.matrix_inv, y))
        seed = np.einsum("ij,...j->...i", self.matrix_inv, y)
        return _newton_solve(self._lift, self.jacobian, y, seed, self.family)

    def grid_permutation(self, grid: Grid):
        if self.amplitude == 0.0:
            mult = np.einsum("ij,kj->ki", self.matrix.astype(np.int64), grid.indices)
            return grid.flat_index(mult)
        return None

    def to_dict(self):
        return {
            "kind": self.family,
            "matrix": self.matrix.astype(int).tolist(),
            "amplitude": self.amplitude,
            "perturbation": self.perturbation.terms(),
            "frame": self.frame_choice,
            "check_diffeomorphism": self.checked,
        }


class MorseSmaleCircle(ModelMap):
    family = "morse_smale_circle"
    kind = ManifoldKind.CIRCLE

    def __init__(self, amplitude: float = 0.05):
        a = float(amplitude)
        if not 0.0 < TWO_PI * a < 1.0:
            raise ConfigError("Morse-Smale amplitude must satisfy 0 < 2 pi a < 1")
        self.amplitude = a
        self.frame = MetricFrame.identity(1)

    def _lift(self, x):
        return x + self.amplitude * np.sin(TWO_PI * x)

    def evaluate(self, x):
        return reduce_mod1(self._lift(np.asarray(x, dtype=float)))

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return (1.0 + TWO_PI * self.amplitude * np.cos(TWO_PI * x))[..., None]

    def derivative(self, x):
        return 1.0 + TWO_PI * self.amplitude * np.cos(TWO_PI * np.asarray(x, dtype=float))

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        seed = y - self.amplitude * np.sin(TWO_PI * y)
        return _newton_solve(self._lift, self.jacobian, y, seed, self.family)

    def to_dict(self):
        return {"kind": self.family, "amplitude": self.amplitude}


class NearIdentityDiffeo:
    """``phi(x) = x + S(x) mod 1`` for a trigonometric series S."""

    def __init__(self, series: TrigSeries):
        self.series = series
        self.dim = series.dim

    def _lift(self, x):
        return x + self.series.value(x)

    def evaluate(self, x):
        return reduce_mod1(self._lift(np.asarray(x, dtype=float)))

    def jacobian(self, x):
        return np.eye(self.dim) + self.series.jacobian(np.asarray(x, dtype=float))

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if len(self.series.amplitudes) == 0:
            return reduce_mod1(y)
        seed = y - self.series.value(y)
        return _newton_solve(self._lift, self.jacobian, y, seed, "phi")

    def displacement(self, x):
        """Shortest lift of ``phi(x) - x``."""
        return wrap(self.series.value(np.asarray(x, dtype=float)))

    def min_det(self, resolution: int = 128) -> float:
        kind = ManifoldKind.CIRCLE if self.dim == 1 else ManifoldKind.TORUS2
        pts = Grid(resolution, kind).points
        return float(np.min(np.linalg.det(self.jacobian(pts))))


class Conjugated(ModelMap):
    family = "conjugated"

    def __init__(self, base: ModelMap, phi: NearIdentityDiffeo):
        if phi.dim != base.dim:
            raise ConfigError("phi dimension does not match base map")
        if phi.min_det() <= 0.0:
            raise ConfigError("phi is not a diffeomorphism (det D phi <= 0 somewhere)")
        self.base = base
        self.phi = phi
        self.kind = base.kind
        self.frame = base.frame
        self.check_diffeomorphism()

    @property
    def linear_part(self):
        return self.base.linear_part

    def evaluate(self, y):
        return self.phi.evaluate(self.base.evaluate(self.phi.inverse(y)))

    def inverse(self, y):
        return self.phi.evaluate(self.base.inverse(self.phi.inverse(y)))

    def jacobian(self, y):
        z = self.phi.inverse(y)
        fz = self.base.evaluate(z)
        return self.phi.jacobian(fz) @ self.base.jacobian(z) @ np.linalg.inv(self.phi.jacobian(z))

    def to_dict(self):
        return {"kind": self.family, "base": self.base.to_dict(), "phi": self.phi.series.terms()}


def make_conjugated(base: ModelMap, phi) -> Conjugated:
    """Model ``g = phi o base o phi^-1``; ``phi`` may be a TrigSeries or NearIdentityDiffeo."""
    if isinstance(phi, TrigSeries):
        phi = NearIdentityDiffeo(phi)
    return Conjugated(base, phi)


def oracle_phi(amplitude: float = 0.01) -> NearIdentityDiffeo:
    """``phi = id + amplitude * (sin 2 pi x2, sin 2 pi x1)``."""
    return NearIdentityDiffeo(
        TrigSeries.from_terms(
            2,
            [
                {"component": 0, "amplitude": amplitude, "wavevector": [0, 1]},
                {"component": 1, "amplitude": amplitude, "wavevector": [1, 0]},
            ],
        )
    )


@dataclass(frozen=True)
class HyperbolicityConstants:
    lam: float
    l: float
    alpha: float
    lam_prime: float

    def __post_init__(self):
        if not 0.0 < self.lam < self.lam_prime < 1.0:
            raise ConfigError(f"need 0 < lambda < lambda' < 1, got {self.lam}, {self.lam_prime}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.lam * self.l**self.alpha >= 1.0:
            raise ConfigError(
                f"lambda * l^alpha = {self.lam * self.l ** self.alpha:.6g} >= 1 (alpha = {self.alpha})"
            )

    def admissible(self, alpha: float) -> bool:
        return self.lam * self.l**alpha < 1.0

    def to_dict(self):
        return {"lambda": self.lam, "l": self.l, "alpha": self.alpha, "lambda_prime": self.lam_prime}


LAMBDA_MARGIN = 1.02
ALPHA_TARGET = 0.95


def largest_alpha(lam: float, l: float, bound: float = ALPHA_TARGET, cap: float = ALPHA_TARGET) -> float:
    """Largest alpha (capped) with ``lam * l**alpha <= bound``."""
    if lam >= bound:
        raise ConfigError(f"no alpha in (0, 1) satisfies lambda l^alpha < 1 (lambda = {lam:.6g})")
    if l <= 1.0:
        return cap
    return min(cap, math.log(bound / lam) / math.log(l))


def _linear_rates(matrix) -> float:
    vals = np.sort(np.abs(np.linalg.eigvals(np.asarray(matrix, dtype=float))))
    return float(max(vals[0], 1.0 / vals[-1]))


def lipschitz_bound(m: ModelMap, resolution: int = 128) -> float:
    """Grid sup of frame operator norms of ``Df`` and ``Df^-1``."""
    if isinstance(m, LinearToral):
        return float(max(m.frame.operator_norm(m.matrix), m.frame.operator_norm(m.matrix_inv)))
    pts = Grid(resolution, m.kind).points
    jac = m.jacobian(pts)
    fwd = m.frame.operator_norm(jac)
    bwd = m.frame.operator_norm(np.linalg.inv(jac))
    return float(max(fwd.max(), bwd.max()))


def hyperbolicity_constants(m: ModelMap, alpha: float | None = None) -> HyperbolicityConstants:
    """Contraction rate, Lipschitz bound and default Hoelder exponent."""
    if isinstance(m, LinearToral):
        lam = _linear_rates(m.matrix)
    elif m.linear_part is not None:
        lam = LAMBDA_MARGIN * _linear_rates(m.linear_part)
    elif isinstance(m, MorseSmaleCircle):
        rates = []
        for comp in basic_sets(m).components:
            p = np.asarray(comp.points)
            deriv = np.abs(m.derivative(p))
            rates.extend(1.0 / deriv if comp.unstable_rank else deriv)
        lam = float(max(rates))
    else:
        raise ConfigError(f"no hyperbolicity data for {m.family}")
    l = lipschitz_bound(m)
    if alpha is None:
        alpha = largest_alpha(lam, l)
    lam_prime = LAMBDA_MARGIN * lam
    if lam_prime >= 1.0:
        lam_prime = 0.5 * (1.0 + lam)
    return HyperbolicityConstants(lam=lam, l=l, alpha=float(alpha), lam_prime=lam_prime)


@dataclass(frozen=True)
class BasicSet:
    points: tuple | None  # None means the whole manifold
    unstable_rank: int
    stable_rank: int
    radius: float

    @property
    def whole(self) -> bool:
        return self.points is None


@dataclass(frozen=True)
class BasicSetData:
    components: tuple

    @property
    def k(self) -> int:
        return len(self.components)


def circle_fixed_points(m: MorseSmaleCircle, samples: int = 1024):
    """Fixed points by sign scan of ``f(x) - x`` plus Newton refinement."""
    x = np.arange(samples) / samples
    g = wrap(m.evaluate(x) - x)
    roots = []
    for i in range(samples):
        a, b = g[i], g[(i + 1) % samples]
        if a == 0.0:
            roots.append(x[i])
        elif a * b < 0.0:
            roots.append(x[i] + 0.5 / samples)
    refined = []
    for r in roots:
        z = float(r)
        for _ in range(NEWTON_STEPS):
            res = float(wrap(m.evaluate(z) - z))
            if abs(res) <= NEWTON_TOL:
                break
            z -= res / (float(m.derivative(z)) - 1.0)
        refined.append(float(reduce_mod1(z)))
    return sorted(set(round(r, 14) for r in refined))


def basic_sets(m: ModelMap, radius: float = 0.15) -> BasicSetData:
    """Spectral decomposition, ordered so repellers precede attractors."""
    if m.kind is ManifoldKind.TORUS2:
        return BasicSetData((BasicSet(None, 1, 1, radius),))
    if isinstance(m, MorseSmaleCircle):
        comps = []
        for p in circle_fixed_points(m):
            unstable = abs(float(m.derivative(p))) > 1.0
            comps.append(BasicSet((p,), int(unstable), int(not unstable), radius))
        comps.sort(key=lambda c: (-c.unstable_rank, c.points))
        return BasicSetData(tuple(comps))
    raise ConfigError(f"no basic-set data for {m.family}")


def linear_periodic_points(matrix, period: int):
    """All points with ``A^p x = x mod 1``, by lattice enumeration."""
    a = np.linalg.matrix_power(np.rint(np.asarray(matrix)).astype(np.int64), period)
    shifted = a - np.eye(2, dtype=np.int64)
    n = int(round(abs(np.linalg.det(shifted))))
    inv = np.linalg.inv(shifted.astype(float))
    found = set()
    span = int(np.abs(shifted).sum()) + 1
    for i in range(-span, span + 1):
        for j in range(-span, span + 1):
            p = reduce_mod1(inv @ np.array([i, j], dtype=float))
            found.add(tuple(np.round(p * n).astype(int) % n))
    return np.array(sorted(found), dtype=float) / n


def find_periodic_point(m: ModelMap, period: int, guess, tol: float = 1e-14):
    """Newton on ``f^p(x) - x`` started from ``guess``; independent oracle."""
    z = np.array(guess, dtype=float)
    eye = np.eye(m.dim)
    for _ in range(NEWTON_STEPS):
        y = z
        jac = eye
        for _ in range(period):
            jac = m.jacobian(y) @ jac
            y = m.evaluate(y)
        r = wrap(y - z)
        if np.max(np.abs(r)) <= tol:
            break
        z = reduce_mod1(z - np.linalg.solve(jac - eye, r))
    return reduce_mod1(z)
