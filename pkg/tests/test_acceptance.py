"""Acceptance criteria 1-8, run end to end through the command line.

Each criterion prints one PASS/FAIL line; the lines are also collected in a
section at the end of the pytest report.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from hyperstab.cli import main
from hyperstab.geometry import Grid, ManifoldKind
from hyperstab.io import read_csv
from hyperstab.splitting import ReferenceSplitting, SplittingSection, graph_transform
from hyperstab.systems import LinearToral

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

# criterion -> (command, config file, resolution override)
RUNS = {
    "1": ("inverse-check", "cat_inverse.json", None),
    "2": ("splitting", "perturbed_splitting.json", None),
    "3": ("conjugacy", "oracle_conjugacy.json", None),
    "4": ("conjugacy", "perturbed_conjugacy.json", None),
    "5": ("conjugacy", "perturbed_conjugacy.json", 128),
    "6": ("inverse-check", "circle_inverse.json", None),
}


def execute(root: Path, key: str):
    command, name, resolution = RUNS[key]
    payload = json.loads((CONFIGS / name).read_text())
    if resolution is not None:
        payload["resolution"] = resolution
    root.mkdir(parents=True, exist_ok=True)
    config = root / f"run{key}.json"
    config.write_text(json.dumps(payload))
    out = root / f"run{key}"
    start = time.perf_counter()
    code = main([command, "--config", str(config), "--out", str(out)])
    elapsed = time.perf_counter() - start
    summary = {}
    if (out / "summary.csv").exists():
        header, rows = read_csv(out / "summary.csv")
        summary = {k: float(v) for k, v in zip(header, rows[0])}
    return {"code": code, "elapsed": elapsed, "out": out, "summary": summary}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    return {key: execute(root / "first", key) for key in RUNS}


def manifest(run):
    return json.loads((run["out"] / "manifest.json").read_text())


def test_criterion_1_right_inverse(runs, criterion):
    run = runs["1"]
    s = run["summary"]
    series = manifest(run)["series"]
    tail = series["K_decay"] * series["rho"] ** 41 / (1 - series["rho"])
    ok = (run["code"] == 0 and s["N_trunc"] == 40 and s["fields"] == 10
          and math.isclose(s["tail_bound"], tail, rel_tol=1e-12)
          and s["max_ratio"] <= 3.0 and run["elapsed"] <= 30.0)
    criterion(1, ok, f"max residual/(tail*|eta|) = {s.get('max_ratio', math.nan):.3g} <= 3, "
                     f"tail = {s.get('tail_bound', math.nan):.3g}, {run['elapsed']:.1f} s <= 30 s")
    assert ok


def test_criterion_2_graph_transform_contraction(runs, criterion):
    run = runs["2"]
    s = run["summary"]
    gc = manifest(run)["graph_constants"]
    margin = gc["lambda3"] ** 2 * gc["l_alpha"]
    ok = (run["code"] == 0 and margin <= 0.98 + 1e-12
          and s["fiber_ratio_max"] <= s["lambda3_sq"] + 0.02 and run["elapsed"] <= 20.0)
    criterion(2, ok, f"fiber ratio {s.get('fiber_ratio_max', math.nan):.4f} <= lambda3^2 + 0.02 = "
                     f"{s.get('lambda3_sq', math.nan) + 0.02:.4f}, lambda3^2 l^a = {margin:.3f}, "
                     f"{run['elapsed']:.1f} s <= 20 s")
    assert ok


def test_criterion_3_oracle_recovery(runs, criterion):
    run = runs["3"]
    s = run["summary"]
    trace_header, trace = read_csv(run["out"] / "trace.csv")
    ratios = [float(r[2]) for r in trace if r[2] != "nan"]
    ok = (run["code"] == 0 and s["phi_error"] <= 1e-4 and s["residual"] <= 1e-8
          and max(ratios, default=0.0) <= 0.6 and run["elapsed"] <= 60.0)
    criterion(3, ok, f"sup d(h, phi) = {s.get('phi_error', math.nan):.3g} <= 1e-4, residual "
                     f"{s.get('residual', math.nan):.3g} <= 1e-8, max ratio {max(ratios, default=0.0):.3f} "
                     f"<= 0.6, {run['elapsed']:.1f} s <= 60 s")
    assert ok


def test_criterion_4_nonlinear_perturbation(runs, criterion):
    run = runs["4"]
    s = run["summary"]
    ok = (run["code"] == 0 and s["residual"] <= 1e-7 and s["fixed_point_error"] <= 1e-6
          and s["certificate"] == 1 and run["elapsed"] <= 60.0)
    criterion(4, ok, f"residual {s.get('residual', math.nan):.3g} <= 1e-7, Fix error "
                     f"{s.get('fixed_point_error', math.nan):.3g} <= 1e-6, certificate "
                     f"{int(s.get('certificate', 0))}, {run['elapsed']:.1f} s <= 60 s")
    assert ok


def test_criterion_5_holder_confinement(runs, criterion):
    fine, coarse = runs["4"]["summary"], runs["5"]["summary"]
    eps_ball = manifest(runs["4"])["solver"]["eps_ball"]
    alpha = manifest(runs["4"])["alpha"]
    change = abs(fine["eta_holder"] - coarse["eta_holder"]) / coarse["eta_holder"]
    ok = (runs["5"]["code"] == 0 and alpha == 0.5 and fine["ball_confinement"] <= eps_ball
          and math.isfinite(fine["eta_holder"]) and change <= 0.15)
    criterion(5, ok, f"confinement {fine.get('ball_confinement', math.nan):.3g} <= {eps_ball}, "
                     f"L_0.5 = {coarse.get('eta_holder', math.nan):.4g} (128) vs "
                     f"{fine.get('eta_holder', math.nan):.4g} (256), change {change:.1%} <= 15%")
    assert ok


def test_criterion_6_decay_law(runs, criterion):
    run = runs["6"]
    s = run["summary"]
    ok = (run["code"] == 0 and s["decay_rate"] <= 1.05 * s["rho"] and s["max_residual"] <= 1e-6
          and s["N_trunc"] == 60 and run["elapsed"] <= 10.0)
    criterion(6, ok, f"decay rate {s.get('decay_rate', math.nan):.3f} <= 1.05 rho = "
                     f"{1.05 * s.get('rho', math.nan):.3f}, residual {s.get('max_residual', math.nan):.3g} "
                     f"<= 1e-6, {run['elapsed']:.1f} s <= 10 s")
    assert ok


def test_criterion_7_trivial_cases(tmp_path, criterion):
    config = tmp_path / "identity.json"
    config.write_text(json.dumps({"model": {"kind": "linear_toral"}, "resolution": 64, "alpha": 0.5,
                                  "series": {"tol": 1e-13}}))
    code = main(["conjugacy", "--config", str(config), "--out", str(tmp_path / "identity")])
    header, rows = read_csv(tmp_path / "identity" / "summary.csv")
    s = dict(zip(header, rows[0]))
    cat = LinearToral()
    grid = Grid(256, ManifoldKind.TORUS2)
    image = graph_transform(cat, ReferenceSplitting.for_map(cat), SplittingSection.zeros(grid))
    defect = float(np.max(np.abs(image.values)))
    ok = code == 0 and int(s["iterations"]) == 0 and float(s["eta_c0"]) == 0.0 and defect <= 1e-14
    criterion(7, ok, f"g = f: iterations {s['iterations']}, |eta| = {s['eta_c0']}; "
                     f"|F#(0)| = {defect:.3g} <= 1e-14")
    assert ok


def test_criterion_8_determinism(runs, tmp_path, criterion):
    differing = []
    for key in RUNS:
        again = execute(tmp_path, key)
        first = runs[key]["out"] / "summary.csv"
        second = again["out"] / "summary.csv"
        if first.read_bytes() != second.read_bytes():
            differing.append(key)
    ok = not differing
    criterion(8, ok, "summary CSVs of runs 1-6 byte-identical on rerun"
              + ("" if ok else f"; differing: {', '.join(differing)}"))
    assert ok
