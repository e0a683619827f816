"""Command line front end: ``hyperstab <command> --config cfg.json --out dir``.

Commands: splitting, conjugacy, inverse-check, norms, sweep. Each run writes
a ``manifest.json`` with the fully resolved configuration next to its CSV
and PGM outputs. CSV files carry no timings, so reruns with the same config
and seed are byte-identical.

Exit codes: 0 ok, 2 invalid configuration, 3 solver divergence,
4 series non-decay, 5 unreadable input.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from hyperstab import __version__
from hyperstab.errors import ConfigError, ConvergenceError, DivergenceError, HyperstabError, InputError
from hyperstab.fields import random_trig_field
from hyperstab.geometry import DiscreteVectorField, Grid, ManifoldKind
from hyperstab.io import write_csv, write_json
from hyperstab.norms import NormReport, default_window, estimate_exponent, field_norms
from hyperstab.systems import (
    LinearToral,
    ModelMap,
    MorseSmaleCircle,
    PerturbedToral,
    TrigSeries,
    hyperbolicity_constants,
    make_conjugated,
    oracle_phi,
)

DEFAULTS = {
    "resolution": 128,
    "alpha": None,
    "W": None,
    "graph_constants": "auto",
    "series": {"N_trunc": 40},
    "solver": {},
    "seed": 0,
    "fields": 10,
    "pair_budget": 4096,
    "decay_n_max": 10,
    "alphas": [0.25, 0.5, 0.75],
}

SWEEP_PARAMETERS = ("eps_p", "resolution", "alpha", "N_trunc")


# ---------------------------------------------------------------------------
# configuration


def build_model(spec: dict, base: ModelMap | None = None) -> ModelMap:
    """Instantiate a model map from its JSON description."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("model spec must be an object with a 'kind'")
    kind = spec["kind"]
    matrix = spec.get("matrix", [[2, 1], [1, 1]])
    frame = spec.get("frame", "eigen")
    if kind == "linear_toral":
        return LinearToral(matrix, frame)
    if kind == "perturbed_toral":
        terms = spec.get("perturbation")
        series = TrigSeries.from_terms(2, terms) if terms is not None else None
        amplitude = float(spec.get("amplitude", 0.01))
        checked = bool(spec.get("check_diffeomorphism", True))
        return PerturbedToral(matrix, series, amplitude, frame, checked)
    if kind == "morse_smale_circle":
        return MorseSmaleCircle(float(spec.get("amplitude", 0.05)))
    if kind == "conjugated":
        inner = base if base is not None else build_model(spec.get("base", {"kind": "linear_toral"}))
        return make_conjugated(inner, oracle_phi(float(spec.get("phi_amplitude", 0.01))))
    raise ConfigError(f"unknown model kind {kind!r}")


@dataclass
class ExperimentConfig:
    raw: dict
    model: ModelMap
    target: ModelMap | None
    resolution: int
    alpha: float
    window: int
    seed: int
    constants: object
    extra: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return Grid(self.resolution, self.model.kind)

    def value(self, key):
        return self.raw.get(key, DEFAULTS.get(key))


def resolve_config(raw: dict, seed: int | None = None) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = copy.deepcopy(raw)
    for key, value in DEFAULTS.items():
        raw.setdefault(key, copy.deepcopy(value))
    if seed is not None:
        raw["seed"] = int(seed)
    if "model" not in raw:
        raise ConfigError("config needs a 'model'")
    model = build_model(raw["model"])
    target = build_model(raw["target"], base=model) if raw.get("target") is not None else None
    if target is not None and target.kind is not model.kind:
        raise ConfigError("target and model live on different manifolds")
    resolution = int(raw["resolution"])
    constants = hyperbolicity_constants(model, raw["alpha"])
    alpha = constants.alpha
    window = raw["W"] if raw["W"] is not None else default_window(model, 1.0 / resolution, constants.lam)
    if int(window) < 1:
        raise ConfigError("W must be a positive integer")
    seed_value = int(raw["seed"])
    if not 0 <= seed_value < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return ExperimentConfig(raw, model, target, resolution, alpha, int(window), seed_value, constants)


def load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InputError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from exc


def manifest(cfg: ExperimentConfig, command: str, resolved: dict) -> dict:
    out = {
        "command": command,
        "version": __version__,
        "model": cfg.model.to_dict(),
        "resolution": cfg.resolution,
        "alpha": cfg.alpha,
        "W": cfg.window,
        "seed": cfg.seed,
        "hyperbolicity": cfg.constants.to_dict(),
        "config": cfg.raw,
    }
    if cfg.target is not None:
        out["target"] = cfg.target.to_dict()
    out.update(resolved)
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_manifest(out: Path, payload: dict):
    write_json(out / "manifest.json", _jsonable(payload))


# ---------------------------------------------------------------------------
# shared setup


def _setup(cfg: ExperimentConfig, base: ModelMap | None = None):
    from hyperstab.rightinverse import (
        ComponentProjectors,
        ConstantProjector,
        default_setup,
        series_budget,
        splitting_projectors,
    )

    m = base or cfg.model
    series = cfg.value("series") or {}
    if series.get("splitting", "f") == "g":
        if cfg.target is None:
            raise ConfigError("series.splitting = 'g' needs a target model")
        from hyperstab.splitting import ReferenceSplitting, SplittingSection, solve_invariant_section

        grid = cfg.grid
        res = solve_invariant_section(cfg.target, ReferenceSplitting.for_map(cfg.target),
                                      SplittingSection.zeros(grid), tol=1e-12)
        _, partition = default_setup(m)
        projectors = splitting_projectors(res)
    elif series.get("splitting", "f") == "coordinate":
        # naive split along the coordinate axes; not invariant, kept as a diagnostic
        if m.dim != 2:
            raise ConfigError("series.splitting = 'coordinate' applies to toral maps")
        _, partition = default_setup(m)
        projectors = ComponentProjectors([ConstantProjector([[0.0, 0.0], [0.0, 1.0]])])
    elif series.get("splitting", "f") != "f":
        raise ConfigError("series.splitting must be 'f', 'g' or 'coordinate'")
    else:
        projectors, partition = default_setup(m)
    kwargs = {}
    if series.get("N_trunc") is not None:
        kwargs["n_trunc"] = int(series["N_trunc"])
    elif series.get("tol") is not None:
        kwargs["tol"] = float(series["tol"])
    else:
        kwargs["n_trunc"] = 40
    budget = series_budget(m, projectors, partition, constants=cfg.constants, **kwargs)
    return projectors, partition, budget


# ---------------------------------------------------------------------------
# commands


def cmd_splitting(cfg: ExperimentConfig, out: Path) -> dict:
    from hyperstab.splitting import (
        GraphTransformConstants,
        ReferenceSplitting,
        SplittingSection,
        auto_constants,
        fiber_ratios,
        gamma_modulus,
        modulus_constant,
        solve_invariant_section,
        write_section_csv,
        write_section_pgm,
    )

    m = cfg.model
    ref = ReferenceSplitting.for_map(m)
    gc = cfg.value("graph_constants")
    if gc == "auto":
        consts = auto_constants(m, cfg.constants)
    elif isinstance(gc, dict):
        consts = GraphTransformConstants(
            float(gc["lambda1"]), float(gc["lambda2"]), float(gc["lambda3"]), float(gc.get("r", 1.0)),
            float(gc["eps_graph"]), lam=cfg.constants.lam, l_alpha=cfg.constants.l**cfg.alpha,
        )
    else:
        raise ConfigError("graph_constants must be 'auto' or an object")
    solver = cfg.value("solver") or {}
    tol = float(solver.get("tol", 1e-10))
    max_iter = int(solver.get("max_iter", 200))
    grid = cfg.grid
    result = solve_invariant_section(m, ref, SplittingSection.zeros(grid, consts.r), tol, max_iter, consts)
    pair_budget = int(cfg.value("pair_budget"))
    k_hat = modulus_constant(result.section(), m, cfg.alpha, cfg.window, pair_budget)
    c_const = gamma_modulus(m, ref, grid, cfg.alpha, cfg.window, consts.r, pair_budget)
    consts = consts.with_modulus(c_const)
    fibers = fiber_ratios(m, ref, grid, 1000, cfg.seed, consts.r)
    summary = {
        "resolution": cfg.resolution,
        "iterations": result.iterations,
        "ratio": result.ratio,
        "residual": result.residual,
        "K_hat": k_hat,
        "K_bound": consts.K,
        "C": c_const,
        "lambda3_sq": consts.contraction,
        "fiber_ratio_max": float(np.max(fibers)),
        "min_angle": float(np.min(result.angle())),
        "tau_sup": float(np.max(np.abs(result.tau))),
    }
    write_csv(out / "summary.csv", list(summary), [list(summary.values())])
    write_csv(out / "ratios.csv", ("step", "ratio"), enumerate(result.ratios, start=1))
    write_section_csv(out / "tau.csv", result.section())
    write_section_csv(out / "sigma.csv", result.section(stable=True))
    write_section_pgm(out / "tau.pgm", result.section())
    write_section_pgm(out / "sigma.pgm", result.section(stable=True))
    write_manifest(out, manifest(cfg, "splitting", {"graph_constants": consts.to_dict(),
                                                    "solver": {"tol": tol, "max_iter": max_iter}}))
    return summary


def cmd_conjugacy(cfg: ExperimentConfig, out: Path) -> dict:
    from hyperstab.conjugacy import (
        SolverConfig,
        conjugacy_residual,
        fixed_point_matching,
        holder_report,
        solve_conjugacy,
        write_result_dir,
    )
    from hyperstab.geometry import dist
    from hyperstab.systems import Conjugated

    f = cfg.model
    g = cfg.target if cfg.target is not None else f
    projectors, partition, budget = _setup(cfg)
    s = cfg.value("solver") or {}
    solver = SolverConfig(
        budget, cfg.alpha, cfg.window,
        tol=float(s.get("tol", 1e-10)), max_iter=int(s.get("max_iter", 100)),
        r_ball=float(s.get("r_ball", 0.2)), eps_ball=float(s.get("eps_ball", 0.5)),
        pair_budget=int(cfg.value("pair_budget")), seed=cfg.seed,
    )
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, manifest(cfg, "conjugacy", {"series": budget.to_dict(), "solver": solver.to_dict()}))
    try:
        result = solve_conjugacy(f, g, projectors, partition, solver, cfg.grid)
    except ConvergenceError as exc:
        from hyperstab.conjugacy import TraceRow

        write_csv(out / "trace.csv", TraceRow.CSV_COLUMNS, exc.trace or [])
        raise
    grid = cfg.grid
    extra = {"eps_p": _eps_of(g)}
    if isinstance(g, Conjugated):
        phi_pts = g.phi.evaluate(grid.points)
        extra["phi_error"] = float(np.max(dist(result.h(grid.points), phi_pts, f.frame)))
    if isinstance(f, LinearToral):
        extra["fixed_point_error"] = fixed_point_matching(result, f, g, 1)[0]
    alphas = sorted({float(a) for a in cfg.value("alphas")} | {cfg.alpha})
    rows, exponent = holder_report(result, f, alphas)
    extra["alpha_hat"] = exponent.alpha_hat if exponent.defined else math.nan
    write_csv(out / "holder.csv", NormReport.CSV_COLUMNS + ("admissible",),
              [r.report.csv_row() + (r.admissible,) for r in rows])
    write_result_dir(out, result, extra)
    summary = result.summary()
    summary.update(extra)
    summary["residual_check"] = conjugacy_residual(g, f, result.eta)
    write_csv(out / "summary.csv", list(summary), [list(summary.values())])
    return summary


def _eps_of(m: ModelMap) -> float:
    amp = getattr(m, "amplitude", None)
    return float(amp) if amp is not None and not isinstance(m, MorseSmaleCircle) else 0.0


def cmd_inverse_check(cfg: ExperimentConfig, out: Path) -> dict:
    from hyperstab.rightinverse import (
        RightInverse,
        decompose,
        fitted_rate,
        measure_holder_growth,
        verify_right_inverse,
    )

    m = cfg.model
    projectors, partition, budget = _setup(cfg)
    grid = cfg.grid
    rng = np.random.default_rng(cfg.seed)
    op = RightInverse(m, projectors, partition, budget)
    rows = []
    count = int(cfg.value("fields"))
    zero = bool(cfg.raw.get("zero_field", False))
    first = None
    for k in range(count):
        eta = DiscreteVectorField.zeros(grid, m.frame) if zero else random_trig_field(grid, m.frame, rng)
        if first is None:
            first = eta
        if not zero:
            op.check_decay(eta)
        rep = verify_right_inverse(m, eta, projectors, partition, budget)
        rows.append((k, rep.eta_norm, rep.residual, rep.tail_bound, rep.ratio))
    write_csv(out / "residuals.csv", ("field", "eta_norm", "residual", "tail_bound", "ratio"), rows)
    n_max = int(cfg.value("decay_n_max"))
    parts = decompose(first, projectors, partition)
    index = next((i for i, p in enumerate(projectors.components) if not p.zero_stable), 0)
    zeta = parts[index][0]
    growth = measure_holder_growth(m, zeta, n_max, cfg.alpha, budget, projectors.components[index],
                                   cfg.constants, window=cfg.window, pair_budget=int(cfg.value("pair_budget")))
    write_csv(out / "decay.csv", growth.CSV_COLUMNS, growth.csv_rows())
    summary = {
        "fields": count,
        "N_trunc": budget.n_trunc,
        "rho": budget.rho,
        "K_decay": budget.k_decay,
        "tail_bound": budget.tail_bound,
        "max_residual": max(r[2] for r in rows) if rows else 0.0,
        "max_ratio": max(r[4] for r in rows) if rows else 0.0,
        "decay_rate": fitted_rate(growth.c0),
    }
    write_csv(out / "summary.csv", list(summary), [list(summary.values())])
    write_manifest(out, manifest(cfg, "inverse-check", {"series": budget.to_dict()}))
    return summary


def read_field(path, kind: ManifoldKind) -> np.ndarray:
    """Load node values from ``.npy`` or CSV (one row per node, optional header)."""
    path = Path(path)
    try:
        if path.suffix == ".npy":
            values = np.load(path, allow_pickle=False)
        else:
            text = path.read_text()
            lines = [ln for ln in text.splitlines() if ln.strip()]
            if lines and not _is_numeric_row(lines[0]):
                lines = lines[1:]
            values = np.array([[float(t) for t in ln.split(",")] for ln in lines], dtype=float)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read field file {path}: {exc}") from exc
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2 or values.shape[1] != kind.dim or len(values) == 0:
        raise InputError(f"field file {path} must have {kind.dim} value column(s), got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise InputError(f"field file {path} has non-finite entries")
    return values


def _is_numeric_row(line: str) -> bool:
    try:
        [float(t) for t in line.split(",")]
    except ValueError:
        return False
    return True


def field_grid(values: np.ndarray, kind: ManifoldKind) -> Grid:
    n = len(values)
    res = n if kind.dim == 1 else int(round(math.sqrt(n)))
    if res**kind.dim != n:
        raise InputError(f"{n} rows do not form a square grid")
    try:
        return Grid(res, kind)
    except ConfigError as exc:
        raise InputError(str(exc)) from exc


def cmd_norms(cfg: ExperimentConfig, out: Path, field_file=None) -> dict:
    m = cfg.model
    path = field_file or cfg.raw.get("field_file")
    if path is None:
        raise ConfigError("norms needs a field file (--field or 'field_file')")
    values = read_field(path, m.kind)
    grid = field_grid(values, m.kind)
    window = cfg.raw["W"] if cfg.raw.get("W") is not None else default_window(m, grid.spacing, cfg.constants.lam)
    eta = DiscreteVectorField(grid, values, m.frame)
    report = field_norms(eta, cfg.alpha, m, int(window), int(cfg.value("pair_budget")))
    exponent = estimate_exponent(eta, m)
    columns = NormReport.CSV_COLUMNS + ("alpha_hat",)
    row = report.csv_row() + (exponent.alpha_hat if exponent.defined else math.nan,)
    write_csv(out / "norms.csv", columns, [row])
    write_manifest(out, manifest(cfg, "norms", {"field_file": str(path), "field_resolution": grid.resolution}))
    return dict(zip(columns, row))


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepSpec:
    command: str
    parameter: str
    values: list
    base: dict

    def __post_init__(self):
        if self.command not in ("splitting", "conjugacy", "inverse-check", "norms"):
            raise ConfigError(f"sweep command {self.command!r} is not supported")
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMETERS}")
        if not self.values:
            raise ConfigError("sweep needs a nonempty value list")

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepSpec":
        try:
            return cls(raw["command"], raw["parameter"], list(raw["values"]), dict(raw["base"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"sweep spec needs command, parameter, values and base: {exc}") from exc

    def config_for(self, value) -> dict:
        cfg = copy.deepcopy(self.base)
        if self.parameter == "eps_p":
            key = "target" if self.command == "conjugacy" else "model"
            spec = cfg.setdefault(key, {"kind": "perturbed_toral"})
            spec["amplitude" if spec.get("kind") != "conjugated" else "phi_amplitude"] = float(value)
        elif self.parameter == "resolution":
            cfg["resolution"] = int(value)
        elif self.parameter == "alpha":
            cfg["alpha"] = float(value)
        elif self.parameter == "N_trunc":
            cfg.setdefault("series", {})
            cfg["series"] = {**cfg["series"], "N_trunc": int(value)}
            cfg["series"].pop("tol", None)
        return cfg


COMMANDS = {
    "splitting": cmd_splitting,
    "conjugacy": cmd_conjugacy,
    "inverse-check": cmd_inverse_check,
    "norms": cmd_norms,
}


def alpha_admissible(raw: dict, alpha: float) -> bool:
    """Whether ``lambda l^alpha < 1`` holds for the model of a config."""
    constants = hyperbolicity_constants(build_model(raw["model"]))
    return bool(0.0 < alpha < 1.0 and constants.lam * constants.l**alpha < 1.0)


def cmd_sweep(spec: SweepSpec, out: Path, seed: int | None = None, field_file=None) -> list:
    rows = []
    keys: list = []
    for i, value in enumerate(spec.values):
        sub = out / f"{i:03d}"
        raw = spec.config_for(value)
        row = {"parameter": spec.parameter, "value": value, "status": "ok", "exit_code": 0, "message": ""}
        try:
            admissible = alpha_admissible(raw, float(value)) if spec.parameter == "alpha" else None
            cfg = _resolve_for_sweep(raw, seed, spec.parameter, value)
            sub.mkdir(parents=True, exist_ok=True)
            if spec.command == "norms":
                result = cmd_norms(cfg, sub, field_file)
            else:
                result = COMMANDS[spec.command](cfg, sub)
            row.update(result)
            if admissible is not None:
                row["admissible"] = int(admissible)
                for col in ("holder", "eta_holder"):
                    if col in row:
                        row[f"{col}_raw"] = row[col]
                        if not admissible:
                            row[col] = math.nan
        except HyperstabError as exc:
            row.update(status="failed", exit_code=exc.exit_code, message=str(exc).replace("\n", " "))
        rows.append(row)
        for k in row:
            if k not in keys:
                keys.append(k)
    table = [[r.get(k, "") for k in keys] for r in rows]
    write_csv(out / "sweep.csv", keys, table)
    write_manifest(out, {"command": "sweep", "version": __version__, "sweep": {
        "command": spec.command, "parameter": spec.parameter, "values": spec.values, "base": spec.base}})
    return rows


def _resolve_for_sweep(raw: dict, seed, parameter: str, value) -> ExperimentConfig:
    if parameter != "alpha":
        return resolve_config(raw, seed)
    # an inadmissible alpha is still measured, so bypass the admissibility check of the constants
    alpha = float(value)
    cfg_raw = dict(raw)
    cfg_raw["alpha"] = None
    cfg = resolve_config(cfg_raw, seed)
    if not 0.0 < alpha < 1.0:
        raise ConfigError("alpha must lie in (0, 1)")
    cfg.alpha = alpha
    cfg.raw["alpha"] = alpha
    return cfg


# ---------------------------------------------------------------------------
# entry point


def thread_count(arg) -> int | None:
    if arg is not None:
        return int(arg)
    env = os.environ.get("HYPERSTAB_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"HYPERSTAB_THREADS must be an integer, got {env!r}") from exc
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperstab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("splitting", "invariant splitting of a perturbed toral map"),
        ("conjugacy", "solve g h = h f near the identity"),
        ("inverse-check", "residual of the series right inverse on random fields"),
        ("norms", "sampled norms of a vector field read from a file"),
        ("sweep", "run one command over a list of parameter values"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config (sweep spec for 'sweep')")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides config)")
        p.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP threads (env HYPERSTAB_THREADS)")
        if name in ("norms", "sweep"):
            p.add_argument("--field", default=None, help="field file (.csv or .npy)")
    return parser


def run(args) -> dict | list:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    raw = load_config(args.config)
    if args.command == "sweep":
        return cmd_sweep(SweepSpec.from_dict(raw), out, args.seed, getattr(args, "field", None))
    cfg = resolve_config(raw, args.seed)
    if args.command == "norms":
        return cmd_norms(cfg, out, args.field)
    return COMMANDS[args.command](cfg, out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = thread_count(args.threads)
        start = time.perf_counter()
        if threads is not None:
            with threadpool_limits(limits=threads):
                result = run(args)
        else:
            result = run(args)
        elapsed = time.perf_counter() - start
    except HyperstabError as exc:
        print(f"hyperstab {args.command}: error: {exc}", file=sys.stderr)
        trace = getattr(exc, "trace", None)
        if trace:
            print("ratio trace: " + " ".join(_ratio_text(row) for row in trace), file=sys.stderr)
        elif isinstance(exc, DivergenceError):
            print("ratio trace: none (rejected before the first iteration)", file=sys.stderr)
        return exc.exit_code
    if isinstance(result, dict):
        shown = ", ".join(f"{k}={_short(v)}" for k, v in result.items())
        print(f"{args.command}: {shown}")
    else:
        failed = sum(1 for r in result if r["status"] != "ok")
        print(f"sweep: {len(result)} values, {failed} failed")
    print(f"elapsed {elapsed:.2f} s -> {args.out}")
    return 0


def _ratio_text(row) -> str:
    if isinstance(row, (list, tuple)) and len(row) > 2:
        return _short(row[2])
    return _short(row)


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
