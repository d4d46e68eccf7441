import csv
import json
from pathlib import Path

import numpy as np
import pytest

from cwlab.cli import COMMANDS, main

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

SMALL = {
    "validate": {"seed": 0, "model": {"kind": "dirichlet", "beta": 0.5, "xi": 0.3, "N": 8}},
    "simulate": {
        "seed": 1,
        "model": {"kind": "mixed", "beta": 0.5, "xi": 0.21, "N": 8},
        "delay": {"alpha1": 0.4, "alpha2": 0.2, "tau": 0.5},
        "dt": 0.03125,
        "T": 2.0,
    },
    "decay": {
        "seed": 1,
        "model": {"kind": "mixed", "beta": 0.5, "xi": 0.3333333333333333, "N": 8},
        "delay": {"alpha1": 0.4, "alpha2": 0.2, "tau": 0.5},
        "dt": 0.03125,
        "T": 8.0,
        "window": [1.0, 8.0],
    },
    "transfer": {
        "model": {"kind": "mixed", "beta": 0.4, "xi": 0.25, "N": 6},
        "grid": {"re_min": 0.5, "re_max": 1.0, "n_re": 2, "im_min": -5.0, "im_max": 5.0, "n_im": 3},
        "vertical_line": {"gamma": 0.5, "omega_max": 20.0, "n_samples": 201},
    },
    "observability": {
        "seed": 5,
        "model": {"kind": "mixed", "beta": 0.5, "xi": 0.3, "N": 6},
        "batches": 2,
        "draws": 5,
    },
    "criterion": {"xi": 0.3333333333},
    "conjugacy": {"seed": 3, "random_quadruple": {"n1": 3, "n2": 2, "m": 1}},
}


def run_cli(tmp_path, command, config, out="out"):
    cfg = tmp_path / f"{command}.json"
    cfg.write_text(json.dumps(config))
    code = main([command, "--config", str(cfg), "--out", str(tmp_path / out)])
    return code, tmp_path / out


@pytest.mark.parametrize("command", COMMANDS)
def test_commands_deterministic(tmp_path, command):
    code1, out1 = run_cli(tmp_path, command, SMALL[command], "a")
    code2, out2 = run_cli(tmp_path, command, SMALL[command], "b")
    assert code1 == code2 == 0
    files = sorted(p.name for p in out1.iterdir())
    assert files == sorted(p.name for p in out2.iterdir())
    assert files
    for name in files:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


@pytest.mark.parametrize("command", COMMANDS)
def test_outputs_embed_config(tmp_path, command):
    code, out = run_cli(tmp_path, command, SMALL[command])
    assert code == 0
    for path in out.iterdir():
        if path.suffix == ".json":
            doc = json.loads(path.read_text())
            cfg = doc if path.name.endswith(".config.json") else doc["config"]
            assert "seed" in cfg
        else:
            assert (out / (path.stem + ".config.json")).exists()


def test_shipped_configs_parse(tmp_path):
    for command in ("validate", "criterion", "conjugacy"):
        code = main([command, "--config", str(CONFIG_DIR / f"{command}.json"), "--out", str(tmp_path)])
        assert code == 0


def test_criterion_output(tmp_path):
    code, out = run_cli(tmp_path, "criterion", {"xi": 0.3333333333})
    doc = json.loads((out / "criterion.json").read_text())
    assert code == 0
    assert (doc["p"], doc["q"], doc["paper_rule"]) == (1, 3, True)
    assert doc["modal_infimum"] == pytest.approx(0.5)


def test_conservative_simulation_csv(tmp_path):
    cfg = dict(SMALL["simulate"], delay={"alpha1": 0.0, "alpha2": 0.0, "tau": 0.5}, T=10.0)
    code, out = run_cli(tmp_path, "simulate", cfg)
    assert code == 0
    rows = list(csv.reader((out / "simulate.csv").open()))
    assert rows[0] == ["t", "Ed", "Etilde"]
    Ed = np.array([float(r[1]) for r in rows[1:]])
    assert np.max(np.abs(Ed / Ed[0] - 1)) <= 1e-8


def test_conjugacy_residual(tmp_path):
    code, out = run_cli(tmp_path, "conjugacy", SMALL["conjugacy"])
    doc = json.loads((out / "conjugacy.json").read_text())
    assert code == 0
    assert doc["conjugation_residual"] <= 1e-10
    assert all(r["max_discrepancy"] <= 1e-8 for r in doc["transfer"])


def test_decay_report(tmp_path):
    code, out = run_cli(tmp_path, "decay", SMALL["decay"])
    doc = json.loads((out / "decay.json").read_text())
    assert code == 0
    assert doc["max_relative_step_increase"] <= 1e-8
    assert doc["config"]["delay"]["mu"] == pytest.approx(0.2)


def test_invalid_parameters_exit_2(tmp_path):
    bad = dict(SMALL["simulate"], delay={"alpha1": 0.2, "alpha2": 0.4, "tau": 0.5})
    assert run_cli(tmp_path, "simulate", bad)[0] == 2
    assert run_cli(tmp_path, "criterion", {"xi": 1.5})[0] == 2
    assert run_cli(tmp_path, "criterion", {"xi": 0.5, "colour": "red"})[0] == 2
    assert run_cli(tmp_path, "validate", {"model": {"kind": "mixed", "beta": 0.5, "xi": 0.3}})[0] == 2
    step = dict(SMALL["simulate"], dt=0.3)
    assert run_cli(tmp_path, "simulate", step)[0] == 2
    quad = {"quadruple": {"n1": 1, "n2": 1, "m": 1, "A1": [[-1.0]], "A2": [[1.0]], "B": [[1.0]], "C": [[0.0]]}}
    assert run_cli(tmp_path, "validate", quad)[0] == 2


def test_io_errors_exit_1(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["criterion", "--config", str(missing)]) == 1
    broken = tmp_path / "broken.json"
    broken.write_text('{"xi": ')
    assert main(["criterion", "--config", str(broken), "--out", str(tmp_path)]) == 1
    assert "cwlab:" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path, capsys):
    # a point a hair off the imaginary axis at a resonance of the string
    cfg = {"model": {"kind": "dirichlet", "beta": 0.0, "xi": 0.3, "N": 4}, "lambdas": [[1e-13, np.pi]]}
    assert run_cli(tmp_path, "transfer", cfg)[0] == 3
    assert "matching" in capsys.readouterr().err
