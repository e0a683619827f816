import json
import math
from pathlib import Path

import numpy as np
import pytest

from hyperstab.cli import SweepSpec, main, read_field, resolve_config, thread_count
from hyperstab.errors import ConfigError, InputError
from hyperstab.geometry import ManifoldKind
from hyperstab.io import read_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run(tmp_path, command, payload, out="out", extra=()):
    config = payload if isinstance(payload, str) else write_config(tmp_path, payload, f"{out}.json")
    code = main([command, "--config", config, "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


def summary(path):
    header, rows = read_csv(path / "summary.csv")
    return dict(zip(header, rows[0]))


# configuration


def test_resolve_config_defaults():
    cfg = resolve_config({"model": {"kind": "linear_toral"}})
    assert cfg.resolution == 128 and cfg.window >= 1 and 0 < cfg.alpha < 1
    with pytest.raises(ConfigError):
        resolve_config({"resolution": 64})
    with pytest.raises(ConfigError):
        resolve_config({"model": {"kind": "nope"}})
    with pytest.raises(ConfigError):
        resolve_config({"model": {"kind": "linear_toral"}}, seed=-1)


def test_thread_count(monkeypatch):
    monkeypatch.delenv("HYPERSTAB_THREADS", raising=False)
    assert thread_count(None) is None
    assert thread_count(3) == 3
    monkeypatch.setenv("HYPERSTAB_THREADS", "2")
    assert thread_count(None) == 2
    monkeypatch.setenv("HYPERSTAB_THREADS", "many")
    with pytest.raises(ConfigError):
        thread_count(None)


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec("conjugacy", "eps_p", [], {})
    with pytest.raises(ConfigError):
        SweepSpec("conjugacy", "gamma", [1], {})
    with pytest.raises(ConfigError):
        SweepSpec.from_dict({"command": "norms"})


def test_read_field_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("v1\n0.1\nabc\n")
    with pytest.raises(InputError):
        read_field(bad, ManifoldKind.CIRCLE)
    with pytest.raises(InputError):
        read_field(tmp_path / "missing.csv", ManifoldKind.CIRCLE)
    npy = tmp_path / "f.npy"
    np.save(npy, np.zeros((16, 2)))
    assert read_field(npy, ManifoldKind.TORUS2).shape == (16, 2)


# splitting


def test_splitting_cat_map(tmp_path, capsys):
    code, out = run(tmp_path, "splitting", {"model": {"kind": "linear_toral"}, "resolution": 32})
    assert code == 0
    s = summary(out)
    assert int(s["iterations"]) == 1
    assert float(s["tau_sup"]) <= 1e-15
    assert "splitting:" in capsys.readouterr().out


def test_splitting_perturbed_artifacts(tmp_path):
    code, out = run(tmp_path, "splitting", {"model": {"kind": "perturbed_toral", "amplitude": 0.01},
                                            "resolution": 32, "solver": {"tol": 1e-10}})
    assert code == 0
    assert float(summary(out)["residual"]) <= 1e-10
    for name in ("tau.csv", "sigma.csv", "tau.pgm", "sigma.pgm", "tau.scale.txt", "ratios.csv", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["graph_constants"]) >= {"lambda1", "lambda2", "lambda3", "eps_graph", "K", "C"}
    assert manifest["config"]["graph_constants"] == "auto"


def test_splitting_invalid_constants(tmp_path, capsys):
    gc = {"lambda1": 0.45, "lambda2": 0.6, "lambda3": 0.9, "eps_graph": 0.01}
    code, _ = run(tmp_path, "splitting", {"model": {"kind": "perturbed_toral"}, "alpha": 0.5,
                                          "resolution": 32, "graph_constants": gc})
    assert code == 2
    assert "lambda3^2 l^alpha < 1" in capsys.readouterr().err


# conjugacy


def test_conjugacy_identity(tmp_path):
    code, out = run(tmp_path, "conjugacy", {"model": {"kind": "linear_toral"}, "resolution": 32, "alpha": 0.5,
                                            "series": {"tol": 1e-13}})
    assert code == 0
    s = summary(out)
    assert float(s["eta_c0"]) == 0.0 and int(s["iterations"]) == 0
    for name in ("result.csv", "holder.csv", "eta_u.pgm", "eta_v.pgm", "trace.csv", "certificate.txt", "manifest.json"):
        assert (out / name).exists()


def test_conjugacy_oracle(tmp_path):
    payload = json.loads((CONFIGS / "oracle_conjugacy.json").read_text())
    payload["resolution"] = 64
    code, out = run(tmp_path, "conjugacy", payload)
    assert code == 0
    assert float(summary(out)["phi_error"]) <= 1e-4
    header, rows = read_csv(out / "holder.csv")
    assert header[0] == "alpha" and header[-1] == "admissible"
    assert [float(r[0]) for r in rows] == [0.25, 0.5, 0.75]
    assert all(r[-1] == "1" and float(r[3]) > 0 for r in rows)


def test_conjugacy_divergence_exit_code(tmp_path, capsys):
    code, out = run(tmp_path, "conjugacy", str(CONFIGS / "divergent_conjugacy.json"))
    assert code == 3
    err = capsys.readouterr().err
    assert "contraction lost" in err and "ratio trace:" in err
    header, rows = read_csv(out / "trace.csv")
    assert header[2] == "ratio" and len(rows) >= 4


def test_conjugacy_gate_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "conjugacy", {"model": {"kind": "linear_toral"}, "resolution": 32, "alpha": 0.5,
                                          "target": {"kind": "perturbed_toral", "amplitude": 0.05},
                                          "series": {"tol": 1e-13}})
    assert code == 3
    assert "ratio trace: none" in capsys.readouterr().err


# inverse-check


def test_inverse_check_zero_field(tmp_path):
    code, out = run(tmp_path, "inverse-check", {"model": {"kind": "linear_toral"}, "resolution": 32,
                                                "fields": 2, "zero_field": True})
    assert code == 0
    assert float(summary(out)["max_residual"]) == 0.0


def test_inverse_check_random_fields_and_budgets(tmp_path):
    residuals = []
    for n in (10, 14):
        code, out = run(tmp_path, "inverse-check", {"model": {"kind": "linear_toral"}, "resolution": 32,
                                                    "fields": 3, "series": {"N_trunc": n}, "decay_n_max": 6},
                        out=f"n{n}")
        assert code == 0
        header, rows = read_csv(out / "residuals.csv")
        assert header == ["field", "eta_norm", "residual", "tail_bound", "ratio"]
        assert len(rows) == 3
        assert all(float(r[4]) <= 3.0 for r in rows)
        residuals.append(float(summary(out)["max_residual"]))
        header, rows = read_csv(out / "decay.csv")
        assert header == ["n", "c0", "holder", "bound"] and len(rows) == 7
    assert residuals[1] < residuals[0]


def test_inverse_check_decay_failure(tmp_path, capsys):
    code, _ = run(tmp_path, "inverse-check", {"model": {"kind": "linear_toral"}, "resolution": 32, "fields": 1,
                                              "series": {"N_trunc": 20, "splitting": "coordinate"}})
    assert code == 4
    assert "did not decay" in capsys.readouterr().err


# norms


def test_norms_constant_field(tmp_path):
    field = tmp_path / "const.csv"
    field.write_text("v1,v2\n" + "0.3,0.4\n" * 256)
    code, out = run(tmp_path, "norms", {"model": {"kind": "linear_toral"}}, extra=("--field", str(field)))
    assert code == 0
    header, rows = read_csv(out / "norms.csv")
    row = dict(zip(header, rows[0]))
    assert float(row["c0"]) == pytest.approx(0.5, abs=1e-15)
    assert float(row["holder"]) == 0.0 and float(row["df_lip"]) == 0.0
    assert row["alpha_hat"] == "nan"


def test_norms_sample_field(tmp_path):
    code, out = run(tmp_path, "norms", {"model": {"kind": "morse_smale_circle"}, "alpha": 0.5},
                    extra=("--field", str(CONFIGS / "circle_field.csv")))
    assert code == 0
    header, rows = read_csv(out / "norms.csv")
    row = dict(zip(header, rows[0]))
    assert float(row["c0"]) > 0 and float(row["holder"]) > 0
    assert int(row["pairs"]) > 4096


def test_norms_bad_file(tmp_path, capsys):
    field = tmp_path / "bad.csv"
    field.write_text("1,2,3\n")
    code, _ = run(tmp_path, "norms", {"model": {"kind": "linear_toral"}}, extra=("--field", str(field)))
    assert code == 5
    assert "error" in capsys.readouterr().err


def test_missing_and_malformed_config(tmp_path):
    assert main(["splitting", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path / "o")]) == 5
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["splitting", "--config", str(bad), "--out", str(tmp_path / "o")]) == 5


# sweeps


def test_eps_sweep(tmp_path):
    spec = json.loads((CONFIGS / "sweep_eps.json").read_text())
    spec["base"]["resolution"] = 32
    code, out = run(tmp_path, "sweep", spec)
    assert code == 0
    header, rows = read_csv(out / "sweep.csv")
    table = [dict(zip(header, r)) for r in rows]
    assert len(table) == 3
    assert [float(r["value"]) for r in table] == [0.0, 0.005, 0.01]
    assert all(r["status"] == "ok" for r in table)
    assert float(table[0]["eta_c0"]) == 0.0
    assert 0 < float(table[1]["eta_c0"]) < float(table[2]["eta_c0"])


def test_alpha_sweep_flags_admissibility(tmp_path):
    spec = json.loads((CONFIGS / "sweep_alpha.json").read_text())
    code, out = run(tmp_path, "sweep", spec, extra=("--field", str(CONFIGS / "circle_field.csv")))
    assert code == 0
    header, rows = read_csv(out / "sweep.csv")
    table = [dict(zip(header, r)) for r in rows]
    for r in table:
        finite = math.isfinite(float(r["holder"]))
        assert finite == (r["admissible"] == "1")
        assert math.isfinite(float(r["holder_raw"]))
    assert [r["admissible"] for r in table] == ["1", "1", "1", "0", "0"]


def test_sweep_records_failures(tmp_path):
    spec = {"command": "conjugacy", "parameter": "eps_p", "values": [0.005, 0.05],
            "base": {"model": {"kind": "linear_toral"}, "target": {"kind": "perturbed_toral"},
                     "resolution": 32, "alpha": 0.5, "series": {"tol": 1e-13}}}
    code, out = run(tmp_path, "sweep", spec)
    assert code == 0
    header, rows = read_csv(out / "sweep.csv")
    table = [dict(zip(header, r)) for r in rows]
    assert [r["status"] for r in table] == ["ok", "failed"]
    assert table[1]["exit_code"] == "3"


def test_reruns_are_byte_identical(tmp_path):
    payload = {"model": {"kind": "perturbed_toral", "amplitude": 0.01}, "resolution": 32}
    run(tmp_path, "splitting", payload, out="a")
    run(tmp_path, "splitting", payload, out="b")
    for name in ("summary.csv", "tau.csv", "ratios.csv", "tau.pgm", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_and_threads_flags(tmp_path):
    payload = {"model": {"kind": "linear_toral"}, "resolution": 16, "fields": 2, "decay_n_max": 4}
    code, out = run(tmp_path, "inverse-check", payload, extra=("--seed", "7", "--threads", "1"))
    assert code == 0
    assert json.loads((out / "manifest.json").read_text())["seed"] == 7
