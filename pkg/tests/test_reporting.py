import csv

import numpy as np
import torch

from conftest import synthetic_domain_data, tiny_train_config
from dgvae.model import DisentangledDomainVae, ModelConfig
from dgvae.nets.encoders import BackboneSpec
from dgvae.reporting import (
    export_reconstructions,
    leakage_heatmap_figure,
    roc_figure,
    training_curves_figure,
    write_delimited,
)
from dgvae.synth.recovery import score_recovery
from dgvae.training import train


def test_write_delimited_fixed_column_order(tmp_path):
    rows = [{"a": 1, "b": "x"}, {"a": 2, "b": "y"}]
    path = write_delimited(tmp_path / "t.csv", rows, ("a", "b"))
    with path.open() as fh:
        reader = csv.reader(fh)
        assert next(reader) == ["a", "b"]
        assert next(reader) == ["1", "x"]


def test_training_curves_figure(tiny_synth, tmp_path):
    dataset, splits = tiny_synth
    domains = synthetic_domain_data(dataset, range(3), splits["train"])
    result = train(tiny_train_config(tmp_path, steps=10), domains)
    path = training_curves_figure(result.logs, tmp_path / "curves.png")
    assert path.exists() and path.stat().st_size > 0


def test_leakage_heatmap_figure(tmp_path):
    rng = np.random.default_rng(0)
    true = {b: rng.standard_normal((600, 2)) for b in ("s", "a", "z")}
    report = score_recovery(true, true)
    path = leakage_heatmap_figure(report, tmp_path / "leakage.png")
    assert path.exists() and path.stat().st_size > 0


def test_roc_figure(tmp_path):
    rng = np.random.default_rng(1)
    scores = rng.uniform(size=100)
    labels = rng.integers(0, 2, size=100)
    path = roc_figure(scores, labels, tmp_path / "roc.png")
    assert path.exists() and path.stat().st_size > 0


def test_export_reconstructions_writes_pngs_and_manifest(tmp_path):
    torch.manual_seed(0)
    config = ModelConfig(
        backbone=BackboneSpec(kind="conv", widths=(4, 8), input_shape=(1, 16, 16)),
        num_domains=2,
        num_classes=2,
        attribute_dim=2,
    )
    model = DisentangledDomainVae(config)
    # populate irrelevant-branch running stats so eval mode is defined
    model.train()
    model.irrelevant(torch.rand(4, 1, 16, 16), 0)
    model.eval()
    x = torch.rand(2, 1, 16, 16)
    out = export_reconstructions(model, x, tmp_path / "recon", domain=0)
    manifest = (out / "manifest.csv").read_text().splitlines()
    assert manifest[0] == "sample,subset,file"
    # 3 subsets + input per sample
    assert len(manifest) == 1 + 2 * 4
    pngs = list(out.glob("*.png"))
    assert len(pngs) == 2 * 4
    # partial reconstructions differ from the full one
    import PIL.Image as Image

    full = np.asarray(Image.open(out / "sample000_asz.png"))
    partial = np.asarray(Image.open(out / "sample000_z.png"))
    assert full.shape == (16, 16)
    assert not np.array_equal(full, partial)
