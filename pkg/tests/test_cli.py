import json

import numpy as np
import pytest
import yaml

from holonomy_lab import ExperimentConfig, load_config, run_experiment, save_config
from holonomy_lab.cli import main
from holonomy_lab.config import build_generator
from holonomy_lab.errors import ConfigInvalid

ROT_FIELD = {
    "cocycle": {
        "family": "rotation_field",
        "coeffs": {"alpha": [[1, 0, 0.05, 0.02], [0, 1, 0.0, 0.03]]},
    },
    "sampling": {"n_samples": 6, "leaf_param": 0.05},
    "seed": 7,
}

CONJUGATED = {
    "cocycle": {
        "family": "conjugated",
        "coeffs": {
            "inner": {
                "family": "rotation_field",
                "coeffs": {"alpha": [[1, 0, 0.04, 0.0], [0, 1, 0.0, 0.03]]},
            },
            "phi": {
                "coeffs": {
                    "rotation": [[1, 0, 0.05, 0.02]],
                    "waves": [[1, [[0, 0, 0.15, 0.0]], [[0, 1, 0.0, 0.4]]]],
                }
            },
        },
    },
    "grid": {"base_resolution": 4},
    "sampling": {"n_samples": 6, "leaf_param": 0.05},
    "seed": 5,
}


def write_cfg(tmp_path, payload, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(payload))
    return str(path)


def test_config_roundtrip_byte_identical(tmp_path):
    cfg = ExperimentConfig.from_dict(ROT_FIELD)
    p1 = tmp_path / "a.yaml"
    save_config(cfg, p1)
    cfg2 = load_config(p1)
    p2 = tmp_path / "b.yaml"
    save_config(cfg2, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert cfg2.to_dict() == cfg.to_dict()


def test_config_invalid_fields():
    with pytest.raises(ConfigInvalid) as exc:
        ExperimentConfig.from_dict({"fiber": {"grid_size": 100}})
    assert exc.value.field == "fiber.grid_size"
    with pytest.raises(ConfigInvalid) as exc:
        ExperimentConfig.from_dict({"base": {"r_loc": 0.9}})
    assert exc.value.field == "base.r_loc"
    with pytest.raises(ConfigInvalid) as exc:
        ExperimentConfig.from_dict({"cocycle": {"family": "nope"}})
    assert exc.value.field == "cocycle.family"


def test_build_generator_families():
    for payload, family in ((ROT_FIELD, "rotation_field"),
                            (CONJUGATED, "conjugated")):
        cfg = ExperimentConfig.from_dict(payload)
        gen = build_generator(cfg)
        assert gen.family == family


def test_cli_exit_2_on_bad_config(tmp_path, capsys):
    path = write_cfg(tmp_path, {"fiber": {"grid_size": 100}})
    code = main(["holonomy", "--config", path, "--out", str(tmp_path / "out")])
    assert code == 2
    assert "fiber.grid_size" in capsys.readouterr().err


def test_cli_holonomy_passes_and_is_deterministic(tmp_path, capsys):
    path = write_cfg(tmp_path, ROT_FIELD)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["holonomy", "--config", path, "--out", str(out1)]) == 0
    assert main(["holonomy", "--config", path, "--out", str(out2)]) == 0
    assert (out1 / "holonomy.csv").read_bytes() == (out2 / "holonomy.csv").read_bytes()
    m1 = json.loads((out1 / "manifest.json").read_text())
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert [f["sha256"] for f in m1["files"]] == [f["sha256"] for f in m2["files"]]
    report = capsys.readouterr().out
    assert "gate tail_bound: pass" in report


def test_cli_seed_override_changes_samples(tmp_path):
    path = write_cfg(tmp_path, ROT_FIELD)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["holonomy", "--config", path, "--out", str(out1)]) == 0
    assert main(["holonomy", "--config", path, "--out", str(out2),
                 "--seed", "99"]) == 0
    b1 = (out1 / "holonomy.csv").read_bytes()
    b2 = (out2 / "holonomy.csv").read_bytes()
    assert b1 != b2
    m2 = json.loads((out2 / "manifest.json").read_text())
    assert m2["seed"] == 99


def test_cli_holonomy_constant_cocycle_identity_column(tmp_path):
    payload = {"cocycle": {"family": "constant",
                           "coeffs": {"rotation": 0.3}},
               "sampling": {"n_samples": 4}, "seed": 1}
    path = write_cfg(tmp_path, payload)
    out = tmp_path / "out"
    assert main(["holonomy", "--config", path, "--out", str(out)]) == 0
    lines = (out / "holonomy.csv").read_text().strip().splitlines()
    header = lines[0].split(",")
    col = header.index("dC0_to_Id")
    for line in lines[1:]:
        assert float(line.split(",")[col]) < 1e-9


def test_cli_cycles_obstructed_exit_1(tmp_path, capsys):
    path = write_cfg(tmp_path, ROT_FIELD)
    out = tmp_path / "out"
    code = main(["cycles", "--config", path, "--out", str(out)])
    assert code == 1
    report = capsys.readouterr().out
    assert "Obstructed" in report


def test_cli_synth_and_manifest_complete(tmp_path):
    path = write_cfg(tmp_path, CONJUGATED)
    out = tmp_path / "out"
    assert main(["synth", "--config", path, "--out", str(out)]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["command"] == "synth"
    assert m["gates"]["cocycle_equation"] is True
    assert m["config"]["cocycle"]["family"] == "conjugated"
    assert "total" in m["timings"]
    for f in m["files"]:
        assert len(f["sha256"]) == 64
        assert (out / f["path"]).exists()
    assert "ground_truth_phi" in m["summary"]


def test_run_experiment_unknown_command(tmp_path):
    cfg = ExperimentConfig.from_dict(ROT_FIELD)
    with pytest.raises(ValueError):
        run_experiment(cfg, "bogus", tmp_path)


def test_cli_conjugacy_obstructed_pair_exit_1(tmp_path, capsys):
    # conjugacy search on a cocycle with genuine obstructions must report
    # Obstructed and fail the path-independence gate, not crash
    payload = dict(ROT_FIELD)
    payload["grid"] = {"base_resolution": 4}
    path = write_cfg(tmp_path, payload)
    out = tmp_path / "out"
    code = main(["conjugacy", "--config", path, "--out", str(out)])
    assert code == 1
    m = json.loads((out / "manifest.json").read_text())
    assert m["summary"].get("obstructed") is True
    assert m["gates"]["path_independence"] is False
