import json
from pathlib import Path

import numpy as np
import yaml
from click.testing import CliRunner

from dgvae.cli import main

FIXTURES = Path(__file__).parent / "fixtures" / "overlays"


def test_synth_gen_writes_dataset_and_manifest(tmp_path):
    runner = CliRunner()
    cfg = tmp_path / "synth.yaml"
    cfg.write_text(
        yaml.safe_dump(dict(num_domains=3, num_classes=2, samples_per_cell=30, q_z=1))
    )
    out = tmp_path / "bench"
    result = runner.invoke(main, ["synth-gen", "--config", str(cfg), "--out", str(out), "--seed", "3"])
    assert result.exit_code == 0, result.output
    assert (out / "dataset.npz").exists()
    manifest = (out / "manifest.txt").read_text()
    assert "seed: 3" in manifest
    assert "180" in result.output


def test_train_eval_and_disentangle_round_trip(tmp_path):
    runner = CliRunner()
    bench = tmp_path / "bench"
    gen_cfg = tmp_path / "synth.yaml"
    gen_cfg.write_text(
        yaml.safe_dump(dict(num_domains=3, num_classes=2, samples_per_cell=150, q_z=1))
    )
    result = runner.invoke(main, ["synth-gen", "--config", str(gen_cfg), "--out", str(bench)])
    assert result.exit_code == 0, result.output

    run_dir = tmp_path / "run"
    train_cfg = tmp_path / "train.yaml"
    train_cfg.write_text(
        yaml.safe_dump(
            {
                "seed": 1,
                "batch_size": 32,
                "val_every": 20,
                "out_dir": str(run_dir),
                "optimizer": {"lr": 1e-3, "steps": 60},
                "model": {
                    "backbone": {"kind": "mlp", "widths": [32, 32], "input_shape": [5]},
                    "num_domains": 3,
                    "num_classes": 2,
                    "q_z": 1,
                    "attribute_dim": 2,
                },
                "data": {"kind": "synthetic", "path": str(bench), "train_domains": [0, 1, 2]},
            }
        )
    )
    result = runner.invoke(main, ["train", "--config", str(train_cfg)])
    assert result.exit_code == 0, result.output
    checkpoint = run_dir / "checkpoint_last.pt"
    assert checkpoint.exists()
    assert (run_dir / "steps.jsonl").exists()
    assert (run_dir / "training_curves.png").exists()

    eval_dir = tmp_path / "eval_out"
    result = runner.invoke(
        main,
        [
            "eval",
            "--checkpoint",
            str(checkpoint),
            "--dataset",
            str(bench),
            "--out",
            str(eval_dir),
            "--domain",
            "2",
        ],
    )
    assert result.exit_code == 0, result.output
    assert (eval_dir / "eval.csv").exists()
    assert (eval_dir / "roc.png").exists()
    assert "AUC" in result.output

    dis_dir = tmp_path / "dis_out"
    result = runner.invoke(
        main,
        [
            "disentangle-report",
            "--checkpoint",
            str(checkpoint),
            "--dataset",
            str(bench),
            "--out",
            str(dis_dir),
            "--split",
            "all",
        ],
    )
    assert result.exit_code == 0, result.output
    assert (dis_dir / "recovery.csv").exists()
    assert (dis_dir / "rank_conditions.csv").exists()
    assert (dis_dir / "leakage.png").exists()
    assert "block s" in result.output


def test_parse_overlay_prints_and_encodes(tmp_path):
    runner = CliRunner()
    path = FIXTURES / "cancer_02_case0002.OVERLAY"
    result = runner.invoke(main, ["parse-overlay", str(path), "--encode"])
    assert result.exit_code == 0, result.output
    lines = [json.loads(line) for line in result.output.strip().splitlines() if line.startswith("{")]
    assert len(lines) == 2
    assert lines[0]["pathology"] == "malignant"
    assert len(lines[0]["attribute_vector"]) == 12

    out_csv = tmp_path / "annotations.csv"
    result = runner.invoke(main, ["parse-overlay", str(path), "--out", str(out_csv)])
    assert result.exit_code == 0
    header = out_csv.read_text().splitlines()[0]
    assert header.startswith("case_id,abnormality,lesion_type")
