"""Versioned checkpoint container: parameters, config snapshot, vocabulary."""

from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .errors import ConfigurationError
from .ingest.attributes import ATTRIBUTE_NODES, VOCAB_VERSION
from .model import DisentangledDomainVae
from .nets.dal import DomainAdaptiveNorm

FORMAT_VERSION = 1


def _dal_parameter_names(model):
    names = []
    for name, module in model.named_modules():
        if isinstance(module, DomainAdaptiveNorm):
            names.append(name)
    return names


def save_checkpoint(path, model, train_config=None, step=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "state_dict": model.state_dict(),
        "model_config": asdict(model.config),
        "train_config": asdict(train_config) if train_config is not None else None,
        "manifest": {
            "step": step,
            "num_domains": model.config.num_domains,
            "dal_ratio": model.config.dal_ratio,
            "dal_parameters": _dal_parameter_names(model),
            "attribute_vocabulary": list(ATTRIBUTE_NODES),
            "vocab_version": VOCAB_VERSION,
        },
    }
    if model.config.attribute_head == "gcn":
        payload["manifest"]["correlation"] = model.attribute_head.correlation.numpy().tolist()
    torch.save(payload, path)
    return path


def load_checkpoint(path):
    """Rebuild the model from a checkpoint; returns (model, payload)."""
    from .config import model_config_from_dict

    payload = torch.load(Path(path), map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported checkpoint format {version!r}")
    config = model_config_from_dict(payload["model_config"])
    correlation = payload["manifest"].get("correlation")
    if correlation is not None:
        correlation = np.asarray(correlation)
    model = DisentangledDomainVae(config, correlation=correlation)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload
