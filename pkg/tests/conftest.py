import numpy as np
import pytest
import torch

from dgvae.config import OptimizerConfig, TrainConfig
from dgvae.model import ModelConfig
from dgvae.nets.encoders import BackboneSpec
from dgvae.synth import SynthConfig, generate_dataset, split_indices
from dgvae.training import DomainData


def synthetic_domain_data(dataset, domains, indices):
    out = []
    for d in domains:
        sel = indices[np.isin(dataset.d[indices], [d])]
        out.append(
            DomainData(
                x=torch.as_tensor(dataset.x[sel], dtype=torch.float32),
                y=torch.as_tensor(dataset.y[sel]),
                attrs=torch.as_tensor(dataset.attrs[sel], dtype=torch.float32),
            )
        )
    return out


def eval_tensors(dataset, domains, indices):
    sel = indices[np.isin(dataset.d[indices], list(domains))]
    return (
        torch.as_tensor(dataset.x[sel], dtype=torch.float32),
        torch.as_tensor(dataset.y[sel]),
    )


@pytest.fixture(scope="session")
def tiny_synth():
    """Small 3-domain binary dataset shared across harness tests."""
    config = SynthConfig(num_domains=3, num_classes=2, samples_per_cell=120, q_z=1)
    dataset = generate_dataset(config, seed=21)
    splits = split_indices(dataset, seed=0)
    return dataset, splits


def tiny_train_config(tmp_dir, steps=60, **overrides):
    model = overrides.pop(
        "model",
        ModelConfig(
            backbone=BackboneSpec(kind="mlp", widths=(32, 32), input_shape=(5,)),
            num_domains=3,
            num_classes=2,
            q_z=1,
            attribute_dim=2,
        ),
    )
    defaults = dict(
        model=model,
        optimizer=OptimizerConfig(lr=1e-3, steps=steps),
        batch_size=32,
        beta=1.0,
        seed=5,
        out_dir=str(tmp_dir),
        val_every=0,
    )
    defaults.update(overrides)
    return TrainConfig(**defaults)
