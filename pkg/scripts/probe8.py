"""Final grid for the identifiability acceptance config."""
import time
import numpy as np
import torch

from dgvae.config import OptimizerConfig, TrainConfig
from dgvae.evaluation import encode_blocks
from dgvae.model import ModelConfig
from dgvae.nets.encoders import BackboneSpec
from dgvae.synth import SynthConfig, generate_dataset, split_indices
from dgvae.synth.recovery import score_recovery
from dgvae.training import DomainData, train


def run(tag, data_seed=11, train_seed=0, steps=6000, cls_kind="gaussian",
        var_profile=(0.5, 3.0), var_range=(0.7, 1.4), noise=0.02, batch=96,
        elbo_samples=1, lr=1e-3, widths=(128, 128)):
    cfg = SynthConfig(num_classes=5, samples_per_cell=2000, num_domains=6,
                      var_range=var_range, var_profile=var_profile,
                      noise_x=noise, noise_a=noise)
    ds = generate_dataset(cfg, seed=data_seed)
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
                          classifier_kind=cls_kind),
        optimizer=OptimizerConfig(lr=lr, steps=steps),
        batch_size=batch, beta=1.0, seed=train_seed, elbo_samples=elbo_samples,
        out_dir=f"/tmp/p8_{tag}_{train_seed}", val_every=0)
    t0 = time.time()
    res = train(tc, domains)
    dt = time.time() - t0
    idx = splits["test"]
    x = torch.as_tensor(ds.x[idx], dtype=torch.float32)
    rec = encode_blocks(res.model, x, d=ds.d[idx], domain_map={d: d for d in range(6)})
    true = {b: getattr(ds.latents, b)[idx] for b in "saz"}
    stats = score_recovery(true, rec, use_statistics=True)
    ok = all(stats.scores[b] >= 0.8 for b in "saz") and all(
        stats.max_offdiag(b) <= stats.scores[b] - 0.2 for b in "saz")
    print(f"{tag} data={data_seed} train={train_seed} time={dt:.0f}s "
          f"stats={{s:{stats.scores['s']:.3f}, a:{stats.scores['a']:.3f}, z:{stats.scores['z']:.3f}}} "
          f"offmax={max(stats.max_offdiag(b) for b in 'saz'):.3f} pass={ok}", flush=True)
    return ok


if __name__ == "__main__":
    run("G1-qda-lownoise")
    run("G2-mlp-lownoise", cls_kind="mlp", var_range=(0.8, 1.25))
    run("G3-qda-es2", noise=0.05, elbo_samples=2)

def grid2():
    run("G4-wide", widths=(256, 256), steps=10000)
    run("G5-deep", widths=(192, 192, 192), steps=10000)
