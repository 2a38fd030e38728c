"""Two-branch inference model.

The relevant encoder q(s,a|x) is shared by all domains and never sees a
domain index.  The irrelevant encoder q(z|x,d) shares one trunk whose
deepest normalization sites are domain adaptive; the domain index selects
the (scale, shift, running stats) bank and nothing else.
"""

from dataclasses import dataclass

import torch
from torch import nn

from ..errors import ConfigurationError, ValidationError
from .dal import DomainAdaptiveNorm, dal_site_indices

LOGVAR_MIN = -10.0
LOGVAR_MAX = 10.0


@dataclass
class GaussianPosterior:
    """Diagonal-Gaussian parameters; log-variance clamped to a stable range."""

    mean: torch.Tensor
    logvar: torch.Tensor

    def __post_init__(self):
        if self.mean.shape != self.logvar.shape:
            raise ValidationError("mean and log-variance shapes differ")
        self.logvar = torch.clamp(self.logvar, LOGVAR_MIN, LOGVAR_MAX)

    @classmethod
    def from_raw(cls, raw):
        half = raw.shape[-1] // 2
        return cls(mean=raw[..., :half], logvar=raw[..., half:])

    @property
    def dim(self):
        return self.mean.shape[-1]


def reparameterize(posterior, noise=None, generator=None):
    """Differentiable sample: mean + exp(logvar / 2) * noise."""
    if noise is None:
        noise = torch.randn(
            posterior.mean.shape,
            generator=generator,
            dtype=posterior.mean.dtype,
            device=posterior.mean.device,
        )
    if noise.shape != posterior.mean.shape:
        raise ValidationError("noise shape must match the posterior")
    return posterior.mean + torch.exp(0.5 * posterior.logvar) * noise


@dataclass(frozen=True)
class BackboneSpec:
    """Feature-trunk descriptor: stage widths plus the expected input shape."""

    kind: str = "mlp"  # mlp | conv | resnet34
    widths: tuple = (64, 64)
    input_shape: tuple = (6,)

    def __post_init__(self):
        if self.kind not in ("mlp", "conv", "resnet34"):
            raise ConfigurationError(f"unknown backbone kind {self.kind!r}")
        if self.kind == "mlp" and len(self.input_shape) != 1:
            raise ConfigurationError("mlp backbone expects a flat input shape")
        if self.kind == "conv" and len(self.input_shape) != 3:
            raise ConfigurationError("conv backbone expects a (C, H, W) input shape")


class _Stage(nn.Module):
    """One trunk stage: op -> normalization -> ReLU; threads the domain index."""

    def __init__(self, op, norm):
        super().__init__()
        self.op = op
        self.norm = norm
        self.act = nn.ReLU()

    def forward(self, x, domain=None):
        x = self.op(x)
        if isinstance(self.norm, DomainAdaptiveNorm):
            x = self.norm(x, domain)
        else:
            x = self.norm(x)
        return self.act(x)


class FeatureTrunk(nn.Module):
    """Stacked stages ending in a flat feature vector."""

    def __init__(self, spec, adaptive_sites=(), num_domains=None):
        super().__init__()
        self.spec = spec
        self.adaptive_sites = tuple(adaptive_sites)
        if self.adaptive_sites and not num_domains:
            raise ConfigurationError("adaptive sites need the training-domain count")

        def norm_for(site, channels, norm_cls):
            if site in self.adaptive_sites:
                return DomainAdaptiveNorm(channels, num_domains)
            return norm_cls(channels)

        stages = []
        if spec.kind == "mlp":
            prev = spec.input_shape[0]
            for i, width in enumerate(spec.widths):
                stages.append(_Stage(nn.Linear(prev, width), norm_for(i, width, nn.BatchNorm1d)))
                prev = width
            self.feature_dim = prev
        elif spec.kind == "conv":
            prev = spec.input_shape[0]
            for i, width in enumerate(spec.widths):
                conv = nn.Conv2d(prev, width, kernel_size=3, stride=2, padding=1)
                stages.append(_Stage(conv, norm_for(i, width, nn.BatchNorm2d)))
                prev = width
            self.feature_dim = prev
        else:
            raise ConfigurationError(f"FeatureTrunk does not build {spec.kind!r}")
        self.stages = nn.ModuleList(stages)
        self.n_sites = len(self.stages)

    def forward(self, x, domain=None):
        self._check_input(x)
        for stage in self.stages:
            x = stage(x, domain)
        if self.spec.kind == "conv":
            x = x.mean(dim=(2, 3))
        return x

    def _check_input(self, x):
        expected = tuple(self.spec.input_shape)
        if tuple(x.shape[1:]) != expected:
            raise ValidationError(f"input shape {tuple(x.shape[1:])} != configured {expected}")
        if x.shape[0] < 1:
            raise ValidationError("batch must contain at least one sample")


class _TorchvisionTrunk(nn.Module):
    """ResNet-34 feature extractor; adaptive sites replace its norm layers in place."""

    def __init__(self, spec, adaptive_sites=(), num_domains=None):
        super().__init__()
        from torchvision.models import resnet34

        net = resnet34(weights=None)
        if spec.input_shape[0] != 3:
            net.conv1 = nn.Conv2d(spec.input_shape[0], 64, kernel_size=7, stride=2, padding=3, bias=False)
        net.fc = nn.Identity()
        self.spec = spec
        bn_names = [n for n, m in net.named_modules() if isinstance(m, nn.BatchNorm2d)]
        self.n_sites = len(bn_names)
        self.adaptive_sites = tuple(adaptive_sites)
        for site in self.adaptive_sites:
            name = bn_names[site]
            parent = net
            parts = name.split(".")
            for p in parts[:-1]:
                parent = getattr(parent, p)
            old = getattr(parent, parts[-1])
            setattr(parent, parts[-1], DomainAdaptiveNorm(old.num_features, num_domains))
        self.net = net
        self.feature_dim = 512

    def forward(self, x, domain=None):
        if tuple(x.shape[1:]) != tuple(self.spec.input_shape):
            raise ValidationError(
                f"input shape {tuple(x.shape[1:])} != configured {tuple(self.spec.input_shape)}"
            )
        for m in self.net.modules():
            if isinstance(m, DomainAdaptiveNorm):
                m.active_domain = domain
        try:
            return self.net(x)
        finally:
            for m in self.net.modules():
                if isinstance(m, DomainAdaptiveNorm):
                    m.active_domain = None


def _backbone_sites(spec):
    if spec.kind == "resnet34":
        # resnet34 carries one norm per conv: 1 stem + 2 per basic block (16 blocks)
        # plus 3 downsample shortcuts
        return 36
    return len(spec.widths)


def build_trunk(spec, adaptive_ratio=None, num_domains=None):
    """Instantiate a trunk, optionally with its deepest norm sites adaptive."""
    n_sites = _backbone_sites(spec)
    sites = dal_site_indices(n_sites, adaptive_ratio) if adaptive_ratio else ()
    if spec.kind == "resnet34":
        return _TorchvisionTrunk(spec, adaptive_sites=sites, num_domains=num_domains)
    return FeatureTrunk(spec, adaptive_sites=sites, num_domains=num_domains)


class RelevantEncoder(nn.Module):
    """Domain-shared encoder for the disease-related posteriors q(s|x), q(a|x)."""

    def __init__(self, backbone, q_s, q_a):
        super().__init__()
        self.trunk = build_trunk(backbone)
        self.q_s = q_s
        self.q_a = q_a
        self.s_head = nn.Linear(self.trunk.feature_dim, 2 * q_s)
        self.a_head = nn.Linear(self.trunk.feature_dim, 2 * q_a)

    def forward(self, x):
        feat = self.trunk(x)
        return GaussianPosterior.from_raw(self.s_head(feat)), GaussianPosterior.from_raw(
            self.a_head(feat)
        )


class IrrelevantEncoder(nn.Module):
    """Domain-specific encoder for q(z|x,d); d selects the adaptive banks only."""

    def __init__(self, backbone, q_z, num_domains, dal_ratio="all"):
        super().__init__()
        if num_domains < 1:
            raise ConfigurationError("need at least one training domain")
        self.num_domains = num_domains
        self.dal_ratio = dal_ratio
        self.trunk = build_trunk(backbone, adaptive_ratio=dal_ratio, num_domains=num_domains)
        self.q_z = q_z
        self.z_head = nn.Linear(self.trunk.feature_dim, 2 * q_z)

    def forward(self, x, domain):
        if domain is None or not 0 <= int(domain) < self.num_domains:
            raise ValidationError(
                f"domain index {domain} outside the {self.num_domains} training domains; "
                "unseen domains have no irrelevant encoder"
            )
        feat = self.trunk(x, int(domain))
        return GaussianPosterior.from_raw(self.z_head(feat))


class SingleBranchEncoder(nn.Module):
    """Single-domain variant: one trunk emitting all three posteriors."""

    def __init__(self, backbone, q_s, q_a, q_z):
        super().__init__()
        self.trunk = build_trunk(backbone)
        self.s_head = nn.Linear(self.trunk.feature_dim, 2 * q_s)
        self.a_head = nn.Linear(self.trunk.feature_dim, 2 * q_a)
        self.z_head = nn.Linear(self.trunk.feature_dim, 2 * q_z)

    def forward(self, x):
        feat = self.trunk(x)
        return (
            GaussianPosterior.from_raw(self.s_head(feat)),
            GaussianPosterior.from_raw(self.a_head(feat)),
            GaussianPosterior.from_raw(self.z_head(feat)),
        )
