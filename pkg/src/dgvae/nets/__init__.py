"""Neural building blocks: encoders, adaptive normalization, heads, attribute GCN."""

from .dal import DAL_RATIOS, DomainAdaptiveNorm, dal_forward_calls, dal_site_count, dal_site_indices
from .encoders import (
    BackboneSpec,
    GaussianPosterior,
    IrrelevantEncoder,
    RelevantEncoder,
    SingleBranchEncoder,
    build_trunk,
    reparameterize,
)
from .gcn import AttributeGcn, build_correlation_matrix, gcn_forward, predict_attributes
from .heads import (
    AttributeRegressor,
    ClassifierHead,
    Decoder,
    DomainPrior,
    partial_reconstruction,
    prior_sa,
)

__all__ = [
    "AttributeGcn",
    "AttributeRegressor",
    "BackboneSpec",
    "ClassifierHead",
    "DAL_RATIOS",
    "Decoder",
    "DomainAdaptiveNorm",
    "DomainPrior",
    "GaussianPosterior",
    "IrrelevantEncoder",
    "RelevantEncoder",
    "SingleBranchEncoder",
    "build_correlation_matrix",
    "build_trunk",
    "dal_forward_calls",
    "dal_site_count",
    "dal_site_indices",
    "gcn_forward",
    "partial_reconstruction",
    "predict_attributes",
    "prior_sa",
    "reparameterize",
]
