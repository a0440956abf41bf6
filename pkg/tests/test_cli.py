import json
import subprocess
import sys

import numpy as np
import pytest

from skam.cli import main
from skam.context import ParameterError
from skam.experiments import ExperimentConfig, normal_form_document, run_experiment
from skam.serialization import read_csv


def write_config(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_defaults_load_for_every_experiment():
    for name in ("fkt", "nfcheck", "scaling", "volumes", "blockmap"):
        cfg = ExperimentConfig.from_dict({}, name)
        assert cfg.experiment == name and cfg.hbars


def test_config_errors():
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_dict({"bogus": 1}, "fkt")
    with pytest.raises(ParameterError, match="delta < kappa/3"):
        ExperimentConfig.from_dict({"delta": 0.7}, "fkt")
    with pytest.raises(ParameterError, match="delta > 2 d gamma"):
        ExperimentConfig.from_dict({"gamma": 0.1, "delta": 0.3}, "volumes")
    with pytest.raises(ValueError, match="not 'fkt'"):
        ExperimentConfig.from_dict({"experiment": "volumes"}, "fkt")


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, {"delta": 0.96, "gamma": 0.05, "kappa": 3.0})
    assert main(["fkt", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "delta < 1 - gamma" in capsys.readouterr().err


def test_zero_perturbation_nfcheck_is_exact(tmp_path):
    doc = {"perturbation": {"modes": []}, "hbars": [0.125, 0.0625], "N": 1, "K_basis": 24}
    res = run_experiment(ExperimentConfig.from_dict(doc, "nfcheck"), tmp_path)
    assert res.passed
    rows = read_csv(tmp_path / "nfcheck.csv")
    assert all(float(r["remainder_norm"]) == 0.0 for r in rows)
    assert all(float(r["norm"]) <= 1e-13 for r in read_csv(tmp_path / "telescoping.csv"))


def test_constant_potential_fkt_is_exact(tmp_path):
    doc = {"perturbation": {"modes": [{"k": [0], "coeff": 1.0}]}, "hbars": [2.0 ** -3, 2.0 ** -4, 2.0 ** -5]}
    res = run_experiment(ExperimentConfig.from_dict(doc, "fkt"), tmp_path)
    assert res.passed
    for r in read_csv(tmp_path / "fkt.csv"):
        assert float(r["next_correction"]) <= 1e-12
        assert float(r["first_correction"]) == pytest.approx(float(r["hbar"]) ** 2)


def test_failing_check_gives_exit_code_one(tmp_path):
    cfg = write_config(tmp_path, {"samples": 20000, "hbars": [2.0 ** -6, 2.0 ** -8], "expected_exponent": 3.0})
    assert main(["volumes", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["passed"] is False


def test_blockmap_cli(tmp_path):
    cfg = write_config(tmp_path, {"grid": 41})
    assert main(["blockmap", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "blockmap.csv")
    assert len(rows) == 41 * 41 and all(int(r["blocks"]) >= 1 for r in rows)


def test_outputs_are_byte_identical_across_runs_and_workers(tmp_path):
    cfg = write_config(tmp_path, {"samples": 30000, "hbars": [2.0 ** -5, 2.0 ** -7, 2.0 ** -9]})
    outs = []
    for i, w in enumerate(("1", "2", "1")):
        o = tmp_path / f"o{i}"
        assert main(["volumes", "--config", cfg, "--out", str(o), "--seed", "7", "--workers", w]) in (0, 1)
        outs.append((o / "volumes.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]
    other = tmp_path / "o3"
    main(["volumes", "--config", cfg, "--out", str(other), "--seed", "8"])
    assert (other / "volumes.csv").read_bytes() != outs[0]


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, {"grid": 11})
    r = subprocess.run([sys.executable, "-m", "skam", "blockmap", "--config", cfg, "--out", str(tmp_path / "o")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "[PASS]" in r.stdout


def test_normal_form_document_round_trips():
    cfg = ExperimentConfig.from_dict({"N": 1, "M": 3}, "nfcheck")
    doc = json.loads(json.dumps(normal_form_document(cfg, 0.125)))
    assert {"K0", "P0", "A0", "K1"} <= set(doc["symbols"])
    assert np.isfinite(doc["diagnostics"][0]["remainder_norm"])


@pytest.mark.parametrize("name", ["fkt", "scaling", "nfcheck", "volumes", "blockmap"])
def test_shipped_configs_parse(name):
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "configs" / f"{name}.json"
    cfg = ExperimentConfig.load(path, name)
    assert cfg.experiment == name
