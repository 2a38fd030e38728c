"""Training configuration and its YAML form.

Every design default is a named key here so runs are reproducible from the
config file alone.
"""

from dataclasses import asdict, dataclass, field

import yaml

from .errors import ConfigurationError
from .model import ModelConfig
from .nets.encoders import BackboneSpec


@dataclass
class OptimizerConfig:
    name: str = "adam"
    lr: float = 1e-4
    steps: int = 2000

    def __post_init__(self):
        if self.name != "adam":
            raise ConfigurationError(f"unsupported optimizer {self.name!r}")
        if self.lr <= 0 or self.steps < 1:
            raise ConfigurationError("optimizer needs lr > 0 and steps >= 1")


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    batch_size: int = 32
    beta: float = 1.0
    seed: int = 0
    elbo_samples: int = 1
    per_element_rec: bool = False
    horizontal_flip: bool = False
    loss_weights: dict = field(default_factory=lambda: {"kl": 1.0, "rec": 1.0, "gcn": 1.0, "cls": 1.0})
    val_every: int = 200
    checkpoint_every: int = 0  # 0: only best/last
    data: dict = field(default_factory=dict)
    out_dir: str = "runs/latest"

    def __post_init__(self):
        if self.beta < 0:
            raise ConfigurationError("beta must be >= 0")
        if not self.model.single_branch and self.model.num_domains < 2:
            raise ConfigurationError("multi-domain training needs >= 2 domains (or single_branch)")
        if self.elbo_samples < 1:
            raise ConfigurationError("elbo_samples must be >= 1")


def _tupled(values):
    return tuple(values) if isinstance(values, (list, tuple)) else values


def model_config_from_dict(raw):
    raw = dict(raw or {})
    backbone = raw.pop("backbone", {})
    if not isinstance(backbone, BackboneSpec):
        backbone = dict(backbone)
        backbone["widths"] = _tupled(backbone.get("widths", BackboneSpec.widths))
        backbone["input_shape"] = _tupled(backbone.get("input_shape", BackboneSpec.input_shape))
        backbone = BackboneSpec(**backbone)
    for key in ("classifier_hidden", "attr_hidden"):
        if key in raw:
            raw[key] = _tupled(raw[key])
    return ModelConfig(backbone=backbone, **raw)


def train_config_from_dict(raw):
    raw = dict(raw or {})
    model = raw.pop("model", {})
    if not isinstance(model, ModelConfig):
        model = model_config_from_dict(model)
    optimizer = raw.pop("optimizer", {})
    if not isinstance(optimizer, OptimizerConfig):
        optimizer = OptimizerConfig(**optimizer)
    return TrainConfig(model=model, optimizer=optimizer, **raw)


def train_config_to_dict(config):
    return asdict(config)


def load_train_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh) or {}
    return train_config_from_dict(raw)


def save_train_config(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(train_config_to_dict(config), fh, sort_keys=False)
