"""Domain-generalization toolkit: disentangling multi-domain VAE with an
attribute graph head, a synthetic identifiability benchmark, and a
mammogram-style ingestion pipeline."""

__version__ = "0.1.0"

from .config import OptimizerConfig, TrainConfig, load_train_config, train_config_from_dict
from .model import DisentangledDomainVae, ModelConfig
from .nets.encoders import BackboneSpec

__all__ = [
    "BackboneSpec",
    "DisentangledDomainVae",
    "ModelConfig",
    "OptimizerConfig",
    "TrainConfig",
    "load_train_config",
    "train_config_from_dict",
    "__version__",
]
