"""Prior models, image decoder, label classifier, and attribute regressor.

The decoder consumes all three latent blocks; the classifier sees only
(s, a) and the attribute heads only a.  That asymmetry is what separates
disease-related from domain-dependent information.
"""

import torch
from torch import nn

from ..errors import ConfigurationError, ValidationError
from .encoders import GaussianPosterior


def prior_sa(dim, dtype=torch.float32, device=None):
    """Isotropic standard-normal prior over the disease-related blocks."""
    zeros = torch.zeros(1, dim, dtype=dtype, device=device)
    return GaussianPosterior(mean=zeros, logvar=zeros.clone())


class DomainPrior(nn.Module):
    """p(z|d): a two-layer perceptron over the encoded domain index.

    The final layer starts at zero so every domain begins at N(0, I).
    """

    def __init__(self, num_domains, q_z, hidden=32, embedding="onehot", embedding_dim=None):
        super().__init__()
        if embedding not in ("onehot", "embedding"):
            raise ConfigurationError(f"unknown domain encoding {embedding!r}")
        self.num_domains = num_domains
        self.q_z = q_z
        self.encoding = embedding
        if embedding == "embedding":
            dim = embedding_dim or num_domains
            self.embed = nn.Embedding(num_domains, dim)
            in_dim = dim
        else:
            self.embed = None
            in_dim = num_domains
        self.net = nn.Sequential(nn.Linear(in_dim, hidden), nn.ReLU(), nn.Linear(hidden, 2 * q_z))
        nn.init.zeros_(self.net[-1].weight)
        nn.init.zeros_(self.net[-1].bias)

    def forward(self, domain):
        if not 0 <= int(domain) < self.num_domains:
            raise ValidationError(f"domain index {domain} outside [0, {self.num_domains})")
        idx = torch.tensor([int(domain)], device=self.net[-1].weight.device)
        if self.embed is not None:
            code = self.embed(idx)
        else:
            code = torch.nn.functional.one_hot(idx, self.num_domains).to(self.net[-1].weight.dtype)
        return GaussianPosterior.from_raw(self.net(code))


def _mlp(dims, final_activation=None):
    layers = []
    for i in range(len(dims) - 1):
        layers.append(nn.Linear(dims[i], dims[i + 1]))
        if i < len(dims) - 2:
            layers.append(nn.ReLU())
    if final_activation is not None:
        layers.append(final_activation)
    return nn.Sequential(*layers)


class MlpDecoder(nn.Module):
    """Vector decoder mirroring the MLP trunk widths."""

    def __init__(self, latent_dim, widths, out_dim, output_activation="identity"):
        super().__init__()
        act = nn.Sigmoid() if output_activation == "sigmoid" else None
        self.net = _mlp([latent_dim, *reversed(widths), out_dim], final_activation=act)
        self.out_dim = out_dim

    def forward(self, v):
        return self.net(v)


class ConvDecoder(nn.Module):
    """Transpose-convolution decoder reversing the conv trunk schedule."""

    def __init__(self, latent_dim, widths, out_shape, output_activation="sigmoid"):
        super().__init__()
        channels, height, width = out_shape
        factor = 2 ** len(widths)
        if height % factor or width % factor:
            raise ConfigurationError(
                f"image size {height}x{width} must be divisible by {factor} for {len(widths)} stages"
            )
        self.h0, self.w0 = height // factor, width // factor
        self.widths = tuple(widths)
        self.out_shape = tuple(out_shape)
        deepest = widths[-1]
        self.project = nn.Linear(latent_dim, deepest * self.h0 * self.w0)
        blocks = []
        rev = list(reversed(widths))
        for i in range(len(rev) - 1):
            blocks += [
                nn.ConvTranspose2d(rev[i], rev[i + 1], kernel_size=4, stride=2, padding=1),
                nn.BatchNorm2d(rev[i + 1]),
                nn.ReLU(),
            ]
        blocks.append(nn.ConvTranspose2d(rev[-1], channels, kernel_size=4, stride=2, padding=1))
        if output_activation == "sigmoid":
            blocks.append(nn.Sigmoid())
        self.net = nn.Sequential(*blocks)

    def forward(self, v):
        h = self.project(v).reshape(v.shape[0], self.widths[-1], self.h0, self.w0)
        return self.net(h)


class Decoder(nn.Module):
    """x_hat from the concatenated (z, s, a) sample."""

    def __init__(self, backbone, q_s, q_a, q_z, output_activation=None):
        super().__init__()
        self.latent_dim = q_s + q_a + q_z
        self.dims = (q_s, q_a, q_z)
        if backbone.kind == "mlp":
            act = output_activation or "identity"
            self.net = MlpDecoder(self.latent_dim, backbone.widths, backbone.input_shape[0], act)
        elif backbone.kind == "conv":
            act = output_activation or "sigmoid"
            self.net = ConvDecoder(self.latent_dim, backbone.widths, backbone.input_shape, act)
        elif backbone.kind == "resnet34":
            act = output_activation or "sigmoid"
            self.net = ConvDecoder(
                self.latent_dim, (64, 64, 128, 256, 512), backbone.input_shape, act
            )
        else:
            raise ConfigurationError(f"no decoder for backbone {backbone.kind!r}")

    def forward(self, z, s, a):
        q_s, q_a, q_z = self.dims
        if s.shape[-1] != q_s or a.shape[-1] != q_a or z.shape[-1] != q_z:
            raise ValidationError(
                f"latent dims {(s.shape[-1], a.shape[-1], z.shape[-1])} != configured {(q_s, q_a, q_z)}"
            )
        return self.net(torch.cat([z, s, a], dim=-1))


class ClassifierHead(nn.Module):
    """Label prediction from (s, a) only; z never enters this head.

    kind "mlp" is a plain feed-forward classifier.  kind "gaussian" scores
    classes through learned class-conditional diagonal Gaussians and Bayes
    rule (the p(y|s,a) = p(s,a|y)p(y)/p(s,a) parameterization), which ties
    the class structure to the latent coordinate axes.
    """

    def __init__(self, q_s, q_a, hidden=(64,), num_classes=2, kind="mlp"):
        super().__init__()
        if kind not in ("mlp", "gaussian"):
            raise ConfigurationError(f"unknown classifier kind {kind!r}")
        self.num_classes = num_classes
        self.kind = kind
        dim = q_s + q_a
        if kind == "mlp":
            out = 1 if num_classes == 2 else num_classes
            self.net = _mlp([dim, *hidden, out])
        else:
            self.class_means = nn.Parameter(0.5 * torch.randn(num_classes, dim))
            self.class_logvars = nn.Parameter(torch.zeros(num_classes, dim))
            self.class_logits = nn.Parameter(torch.zeros(num_classes))

    def _log_joint(self, u):
        diff = u.unsqueeze(1) - self.class_means
        var = torch.exp(self.class_logvars)
        log_density = -0.5 * (diff**2 / var + self.class_logvars).sum(dim=-1)
        return log_density + torch.log_softmax(self.class_logits, dim=0)

    def logits(self, s, a):
        if s.shape[0] != a.shape[0]:
            raise ValidationError("s and a batches differ")
        u = torch.cat([s, a], dim=-1)
        if self.kind == "mlp":
            return self.net(u)
        log_joint = self._log_joint(u)
        if self.num_classes == 2:
            return (log_joint[:, 1] - log_joint[:, 0]).unsqueeze(-1)
        return log_joint

    def probability(self, s, a):
        """Binary probability of the positive class, in (0, 1)."""
        logit = self.logits(s, a)
        if self.num_classes != 2:
            raise ValidationError("probability() is the binary head; use logits() for K > 2")
        return torch.sigmoid(logit.squeeze(-1))

    def forward(self, s, a):
        return self.logits(s, a)


class AttributeRegressor(nn.Module):
    """Continuous attribute reconstruction from a (synthetic-bench mode)."""

    def __init__(self, q_a, attr_dim, hidden=(64,)):
        super().__init__()
        self.net = _mlp([q_a, *hidden, attr_dim])

    def forward(self, a):
        return self.net(a)


VALID_BLOCKS = frozenset({"s", "a", "z"})


def partial_reconstruction(decoder, s, a, z, subset, mode="zero", prior_mean_z=None):
    """Decode with the excluded latent blocks suppressed.

    mode "zero" zeroes excluded blocks; mode "prior-mean" substitutes the
    prior mean instead (identical for s and a whose prior is centered, and
    requires prior_mean_z for z).
    """
    subset = frozenset(subset)
    if not subset:
        raise ValidationError("subset of latent blocks must be non-empty")
    if not subset <= VALID_BLOCKS:
        raise ValidationError(f"unknown blocks {sorted(subset - VALID_BLOCKS)}")
    if mode not in ("zero", "prior-mean"):
        raise ValidationError(f"unknown substitution mode {mode!r}")

    def keep(name, value):
        if name in subset:
            return value
        if name == "z" and mode == "prior-mean":
            if prior_mean_z is None:
                raise ValidationError("prior-mean mode needs prior_mean_z")
            return prior_mean_z.expand_as(value)
        return torch.zeros_like(value)

    with torch.no_grad():
        return decoder(keep("z", z), keep("s", s), keep("a", a))
