"""Probe: classifier linearity and capacity effects on s-block alignment."""
import sys, time
import numpy as np
import torch

from dgvae.config import OptimizerConfig, TrainConfig
from dgvae.evaluation import encode_blocks
from dgvae.model import ModelConfig
from dgvae.nets.encoders import BackboneSpec
from scripts.probe_aniso import make_spec
from dgvae.synth import generate_from_spec, split_indices
from dgvae.synth.recovery import score_recovery
from dgvae.training import DomainData, train


def run(tag, steps, lr, widths, batch, cls_hidden, seed=0, scales=(0.5, 3.0), noise=0.05):
    spec = make_spec(11, scales=scales)
    spec.mixing.noise_x = noise
    ds = generate_from_spec(spec, np.full((6, 5), 2000), seed=11)
    splits = split_indices(ds, seed=0)
    domains = []
    for d in range(6):
        sel = splits["train"][np.isin(ds.d[splits["train"]], [d])]
        domains.append(DomainData(
            x=torch.as_tensor(ds.x[sel], dtype=torch.float32),
            y=torch.as_tensor(ds.y[sel]),
            attrs=torch.as_tensor(ds.attrs[sel], dtype=torch.float32)))
    tc = TrainConfig(
        model=ModelConfig(backbone=BackboneSpec(kind="mlp", widths=widths, input_shape=(6,)),
                          num_domains=6, num_classes=5, attribute_dim=2,
                          classifier_hidden=cls_hidden),
        optimizer=OptimizerConfig(lr=lr, steps=steps),
        batch_size=batch, beta=1.0, seed=seed, out_dir=f"/tmp/p2_{tag}_{seed}", val_every=0)
    t0 = time.time()
    res = train(tc, domains)
    dt = time.time() - t0
    idx = splits["test"]
    x = torch.as_tensor(ds.x[idx], dtype=torch.float32)
    rec = encode_blocks(res.model, x, d=ds.d[idx], domain_map={d: d for d in range(6)})
    true = {b: getattr(ds.latents, b)[idx] for b in "saz"}
    stats = score_recovery(true, rec, use_statistics=True)
    plain = score_recovery(true, rec, use_statistics=False)
    print(f"{tag}: steps={steps} widths={widths} cls={cls_hidden} batch={batch} time={dt:.0f}s")
    print("  stats:", {b: round(stats.scores[b], 3) for b in "saz"},
          "offdiag:", {b: round(stats.max_offdiag(b), 3) for b in "saz"})
    print("  plain:", {b: round(plain.scores[b], 3) for b in "saz"}, flush=True)


if __name__ == "__main__":
    run("lincls", 6000, 1e-3, (256, 256), 128, ())
    run("mlpcls", 6000, 1e-3, (256, 256), 128, (64,))
