"""Command-line interface: exit codes, outputs, and a full tiny pipeline."""

import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from scenetemp import NumericError, load_manifest
from scenetemp.cli import PROGRESS_HEADER, run


def tree_digest(root):
    digest = hashlib.sha256()
    for path in sorted(Path(root).rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> train-seq -> train-single artifacts shared by CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    world = root / "world"
    code = run(["synth", "--out", str(world), "--num-cameras", "1",
                "--days", "12", "--slots", "10,11,12", "--image-size", "16",
                "--seed", "3"])
    assert code == 0

    seq_out = root / "seq"
    code = run(["train-seq", "--manifest", str(world / "manifest.csv"),
                "--out", str(seq_out), "--hours", "10-12", "--n", "2",
                "--epochs", "1", "--input-size", "16", "--lstm-hidden", "8",
                "--seed", "0"])
    assert code == 0

    single_out = root / "single"
    code = run(["train-single", "--manifest", str(world / "manifest.csv"),
                "--out", str(single_out), "--epochs", "1",
                "--input-size", "16", "--batch-size", "8", "--seed", "0"])
    assert code == 0
    return {"root": root, "world": world, "seq": seq_out,
            "single": single_out}


def test_no_arguments_is_usage_error(capsys):
    assert run([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_command_and_flag(capsys):
    assert run(["frobnicate"]) == 1
    assert run(["synth", "--no-such-flag", "x"]) == 1
    assert "error" in capsys.readouterr().err.lower()


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "synth" in capsys.readouterr().out


def test_module_entrypoint():
    proc = subprocess.run([sys.executable, "-m", "scenetemp.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "synth" in proc.stdout


def test_synth_is_deterministic(tmp_path):
    args = ["synth", "--num-cameras", "1", "--days", "3",
            "--slots", "11", "--image-size", "16", "--seed", "5"]
    assert run(args + ["--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--out", str(tmp_path / "b")]) == 0
    assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")


def test_train_seq_outputs(pipeline):
    progress = (pipeline["seq"] / "progress.csv").read_text().splitlines()
    assert progress[0] == PROGRESS_HEADER
    assert len(progress) == 2  # header + 1 epoch
    assert (pipeline["seq"] / "checkpoint.atmp").is_file()


def test_eval_seq_with_baselines(pipeline, capsys):
    out = pipeline["root"] / "eval_seq"
    code = run(["eval-seq",
                "--checkpoint", str(pipeline["seq"] / "checkpoint.atmp"),
                "--manifest", str(pipeline["world"] / "manifest.csv"),
                "--out", str(out), "--hours", "10-12", "--test-slot", "11",
                "--baselines"])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "average_rmse_c" in stdout
    assert "persistence_rmse_c" in stdout
    assert "climatology_rmse_c" in stdout
    report = json.loads((out / "eval_seq.json").read_text())
    assert np.isfinite(report["average_rmse"])
    assert (out / "eval_seq_per_camera.csv").is_file()
    assert (out / "eval_seq_samples.csv").is_file()
    assert (out / "baseline_persistence.json").is_file()
    assert (out / "baseline_climatology.json").is_file()


def test_eval_single_with_fold(pipeline, capsys):
    out = pipeline["root"] / "eval_single"
    code = run(["eval-single",
                "--checkpoint", str(pipeline["single"] / "checkpoint.atmp"),
                "--manifest", str(pipeline["world"] / "manifest.csv"),
                "--out", str(out), "--k", "4", "--fold", "0"])
    assert code == 0
    assert "average_rmse_c" in capsys.readouterr().out
    report = json.loads((out / "eval_single.json").read_text())
    assert np.isfinite(report["average_rmse"])


def test_predict_sequence_prints_one_temperature(pipeline, capsys):
    records = load_manifest(pipeline["world"] / "manifest.csv")
    slot11 = [r for r in records if r.timestamp.hour == 11][:2]
    code = run(["predict",
                "--checkpoint", str(pipeline["seq"] / "checkpoint.atmp"),
                slot11[0].image_path, slot11[1].image_path])
    assert code == 0
    line = capsys.readouterr().out.strip()
    assert len(line.splitlines()) == 1
    float(line)  # parses as a plain number
    assert "." in line and len(line.split(".")[1]) == 1


def test_predict_single_image(pipeline, capsys):
    records = load_manifest(pipeline["world"] / "manifest.csv")
    code = run(["predict",
                "--checkpoint", str(pipeline["single"] / "checkpoint.atmp"),
                records[0].image_path])
    assert code == 0
    float(capsys.readouterr().out.strip())


def test_predict_wrong_image_count_is_usage_error(pipeline, capsys):
    records = load_manifest(pipeline["world"] / "manifest.csv")
    code = run(["predict",
                "--checkpoint", str(pipeline["seq"] / "checkpoint.atmp"),
                records[0].image_path])  # sequence model wants 2 frames
    assert code == 1
    assert "error" in capsys.readouterr().err.lower()


def test_missing_inputs_are_data_errors(pipeline, tmp_path, capsys):
    assert run(["eval-single", "--checkpoint", str(tmp_path / "none.atmp"),
                "--manifest", str(pipeline["world"] / "manifest.csv"),
                "--out", str(tmp_path / "o")]) == 2
    assert run(["train-single", "--manifest", str(tmp_path / "none.csv"),
                "--out", str(tmp_path / "o2")]) == 2
    capsys.readouterr()


def test_numeric_error_maps_to_exit_three(pipeline, monkeypatch, capsys):
    import scenetemp.cli as cli

    def explode(args):
        raise NumericError("non-finite loss nan at epoch 1, batch 0")

    monkeypatch.setattr(cli, "_cmd_synth", explode)
    code = run(["synth", "--out", str(pipeline["root"] / "x")])
    assert code == 3
    assert "non-finite" in capsys.readouterr().err


def test_curve_command(pipeline):
    out = pipeline["root"] / "curve"
    code = run(["curve",
                "--checkpoint", str(pipeline["seq"] / "checkpoint.atmp"),
                "--manifest", str(pipeline["world"] / "manifest.csv"),
                "--camera", "cam00", "--out", str(out),
                "--test-slot", "11"])
    assert code == 0
    lines = (out / "curve.csv").read_text().splitlines()
    assert lines[0] == "date,truth_c,prediction_c"
    assert len(lines) > 1


def test_saliency_command(pipeline):
    out = pipeline["root"] / "sal"
    code = run(["saliency",
                "--manifest", str(pipeline["world"] / "manifest.csv"),
                "--camera", "cam00", "--out", str(out), "--hour", "11",
                "--block-size", "4", "--max-days", "8"])
    assert code == 0
    assert (out / "saliency_cam00.png").is_file()


def test_sweep_n_command(pipeline, capsys):
    out = pipeline["root"] / "sweepn"
    code = run(["sweep-n",
                "--manifest", str(pipeline["world"] / "manifest.csv"),
                "--out", str(out), "--hours", "10-12", "--test-slot", "11",
                "--n-values", "2,3", "--epochs", "1", "--input-size", "16",
                "--lstm-hidden", "8", "--max-train-sequences", "10"])
    assert code == 0
    lines = (out / "sweep_n.csv").read_text().splitlines()
    assert lines[0].startswith("n,")
    assert len(lines) == 3
    capsys.readouterr()


def test_regions_command(pipeline, capsys):
    out = pipeline["root"] / "regions"
    code = run(["regions",
                "--manifest", str(pipeline["world"] / "manifest.csv"),
                "--masks", str(pipeline["world"]),
                "--out", str(out), "--task", "single",
                "--regions", "sky,ground", "--hours", "10-12",
                "--test-slot", "11", "--epochs", "1", "--input-size", "16",
                "--batch-size", "8"])
    assert code == 0
    lines = (out / "regions.csv").read_text().splitlines()
    assert lines[0].startswith("region,")
    assert len(lines) == 3
    capsys.readouterr()
