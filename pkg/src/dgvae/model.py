"""Full model assembly: two-branch encoders, priors, decoder, and target heads."""

from dataclasses import dataclass, field

import torch
from torch import nn

from .errors import ConfigurationError, ValidationError
from .nets.encoders import (
    BackboneSpec,
    IrrelevantEncoder,
    RelevantEncoder,
    SingleBranchEncoder,
    reparameterize,
)
from .nets.gcn import AttributeGcn
from .nets.heads import AttributeRegressor, ClassifierHead, Decoder, DomainPrior, prior_sa

DOMAIN_MECHANISMS = ("dal", "me", "gl")


@dataclass
class ModelConfig:
    backbone: BackboneSpec = field(default_factory=BackboneSpec)
    q_s: int = 2
    q_a: int = 2
    q_z: int = 2
    num_domains: int = 2
    num_classes: int = 2
    dal_ratio: str = "all"
    domain_mechanism: str = "dal"
    single_branch: bool = False
    attribute_head: str = "regressor"  # "gcn" for binary attribute vectors
    attribute_dim: int = 2
    gcn_hidden: int = 32
    classifier_hidden: tuple = (64,)
    classifier_kind: str = "mlp"
    attr_hidden: tuple = (64,)
    prior_hidden: int = 32
    domain_embedding: str = "onehot"
    decoder_output: str = None
    attr_loss_slots: int = None  # None: all nodes contribute to the attribute loss

    def __post_init__(self):
        if self.domain_mechanism not in DOMAIN_MECHANISMS:
            raise ConfigurationError(f"unknown domain mechanism {self.domain_mechanism!r}")
        if self.domain_mechanism != "dal":
            raise NotImplementedError(
                f"domain mechanism {self.domain_mechanism!r} is reserved but not implemented"
            )
        if self.attribute_head not in ("gcn", "regressor"):
            raise ConfigurationError(f"unknown attribute head {self.attribute_head!r}")
        if not self.single_branch and self.num_domains < 2:
            raise ConfigurationError("two-branch training needs at least 2 domains")


class DisentangledDomainVae(nn.Module):
    """Variational model with disease-related (s, a) and domain (z) branches.

    The classifier and attribute head read only the relevant branch; the
    decoder reads all three blocks.  Evaluation on an unseen domain uses
    the relevant branch alone.
    """

    def __init__(self, config, correlation=None):
        super().__init__()
        self.config = config
        if config.single_branch:
            self.encoder = SingleBranchEncoder(config.backbone, config.q_s, config.q_a, config.q_z)
            self.relevant = None
            self.irrelevant = None
        else:
            self.encoder = None
            self.relevant = RelevantEncoder(config.backbone, config.q_s, config.q_a)
            self.irrelevant = IrrelevantEncoder(
                config.backbone, config.q_z, config.num_domains, config.dal_ratio
            )
        self.decoder = Decoder(
            config.backbone, config.q_s, config.q_a, config.q_z, config.decoder_output
        )
        self.domain_prior = DomainPrior(
            max(config.num_domains, 1),
            config.q_z,
            hidden=config.prior_hidden,
            embedding=config.domain_embedding,
        )
        self.classifier = ClassifierHead(
            config.q_s,
            config.q_a,
            hidden=config.classifier_hidden,
            num_classes=config.num_classes,
            kind=config.classifier_kind,
        )
        if config.attribute_head == "gcn":
            if correlation is None:
                raise ConfigurationError("gcn attribute head needs a correlation matrix")
            self.attribute_head = AttributeGcn(
                correlation, out_dim=config.q_a, hidden=config.gcn_hidden
            )
        else:
            self.attribute_head = AttributeRegressor(
                config.q_a, config.attribute_dim, hidden=config.attr_hidden
            )

    def posteriors(self, x, domain=None):
        """(q_s, q_a, q_z) posteriors; q_z is None when no domain branch applies."""
        if self.config.single_branch:
            return self.encoder(x)
        post_s, post_a = self.relevant(x)
        post_z = self.irrelevant(x, domain) if domain is not None else None
        return post_s, post_a, post_z

    def forward(self, x, domain, generator=None):
        """Training-path forward: sample latents, reconstruct, predict targets."""
        post_s, post_a, post_z = self.posteriors(x, domain)
        if post_z is None:
            raise ValidationError("training forward needs a domain index")
        s = reparameterize(post_s, generator=generator)
        a = reparameterize(post_a, generator=generator)
        z = reparameterize(post_z, generator=generator)
        return {
            "post_s": post_s,
            "post_a": post_a,
            "post_z": post_z,
            "s": s,
            "a": a,
            "z": z,
            "x_hat": self.decoder(z, s, a),
            "cls_logits": self.classifier.logits(s, a),
            "attr_pred": self.attribute_head(a),
        }

    def relevant_means(self, x):
        """Posterior means of (s, a); the unseen-domain evaluation path."""
        if self.config.single_branch:
            post_s, post_a, _ = self.encoder(x)
        else:
            post_s, post_a = self.relevant(x)
        return post_s.mean, post_a.mean

    def predict_proba(self, x):
        """Positive-class probability from posterior means (binary head)."""
        s, a = self.relevant_means(x)
        return self.classifier.probability(s, a)

    def predict_attributes(self, x):
        s, a = self.relevant_means(x)
        return self.attribute_head(a)

    def prior_sa(self, dtype=torch.float32, device=None):
        return prior_sa(self.config.q_s + self.config.q_a, dtype=dtype, device=device)
