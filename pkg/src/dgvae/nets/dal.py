"""Domain adaptive normalization: one scale/shift bank per training domain.

A site normalizes features with mini-batch statistics (training) or with
the running statistics of the requested domain (evaluation), then applies
that domain's learned scale and shift.  Works on (N, C) and (N, C, H, W)
features.
"""

import math

import torch
from torch import nn

from ..errors import ValidationError

DAL_RATIOS = ("one-layer", "1/3", "1/2", "2/3", "all")


def dal_site_count(n_sites, ratio):
    if ratio == "one-layer":
        return min(1, n_sites)
    fractions = {"1/3": 1.0 / 3.0, "1/2": 0.5, "2/3": 2.0 / 3.0, "all": 1.0}
    if ratio not in fractions:
        raise ValidationError(f"unknown adaptive-layer ratio {ratio!r}; choose from {DAL_RATIOS}")
    return min(n_sites, math.ceil(fractions[ratio] * n_sites))


def dal_site_indices(n_sites, ratio):
    """Deepest-first subset of normalization sites replaced by adaptive ones."""
    count = dal_site_count(n_sites, ratio)
    return tuple(range(n_sites - count, n_sites))


class DomainAdaptiveNorm(nn.Module):
    def __init__(self, num_features, num_domains, eps=1e-5, momentum=0.1):
        super().__init__()
        if num_domains < 1:
            raise ValidationError("need at least one domain")
        self.num_features = num_features
        self.num_domains = num_domains
        self.eps = eps
        self.momentum = momentum
        self.gamma = nn.Parameter(torch.ones(num_domains, num_features))
        self.beta = nn.Parameter(torch.zeros(num_domains, num_features))
        self.register_buffer("running_mean", torch.zeros(num_domains, num_features))
        self.register_buffer("running_var", torch.ones(num_domains, num_features))
        # set by the owning encoder when the backbone forward cannot thread
        # a domain argument (e.g. torchvision trunks)
        self.active_domain = None
        self.forward_calls = 0

    def _check_domain(self, domain):
        if domain is None:
            domain = self.active_domain
        if domain is None:
            raise ValidationError("domain index required for adaptive normalization")
        domain = int(domain)
        if not 0 <= domain < self.num_domains:
            raise ValidationError(f"domain index {domain} outside [0, {self.num_domains})")
        return domain

    def forward(self, f, domain=None):
        domain = self._check_domain(domain)
        self.forward_calls += 1
        if f.dim() == 2:
            dims, shape = (0,), (1, -1)
        elif f.dim() == 4:
            dims, shape = (0, 2, 3), (1, -1, 1, 1)
        else:
            raise ValidationError(f"expected 2d or 4d features, got {f.dim()}d")
        if f.shape[1] != self.num_features:
            raise ValidationError(f"channel count {f.shape[1]} != {self.num_features}")

        if self.training:
            if f.shape[0] < 2:
                raise ValidationError("training-mode normalization needs batch >= 2")
            mean = f.mean(dim=dims)
            var = f.var(dim=dims, unbiased=False)
            with torch.no_grad():
                count = f.numel() // f.shape[1]
                unbiased = var * count / max(count - 1, 1)
                self.running_mean[domain] = (
                    (1 - self.momentum) * self.running_mean[domain] + self.momentum * mean
                )
                self.running_var[domain] = (
                    (1 - self.momentum) * self.running_var[domain] + self.momentum * unbiased
                )
        else:
            mean = self.running_mean[domain]
            var = self.running_var[domain]

        f_hat = (f - mean.reshape(shape)) / torch.sqrt(var.reshape(shape) + self.eps)
        return self.gamma[domain].reshape(shape) * f_hat + self.beta[domain].reshape(shape)

    def extra_repr(self):
        return f"num_features={self.num_features}, num_domains={self.num_domains}, eps={self.eps}"


def dal_forward_calls(module):
    """Total adaptive-normalization invocations below a module (OOD instrumentation)."""
    return sum(m.forward_calls for m in module.modules() if isinstance(m, DomainAdaptiveNorm))
