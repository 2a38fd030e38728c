"""Loss terms: KL, reconstruction, attribute/label likelihoods, variance penalty.

All reductions are means over the batch; reconstruction and attribute terms
sum over their per-sample coordinates first.  Probabilities are clamped to
[PROB_EPS, 1 - PROB_EPS] before logs.
"""

from dataclasses import dataclass

import torch

from .errors import ValidationError

PROB_EPS = 1e-7


def kl_diag_gaussian(q_mean, q_logvar, p_mean, p_logvar, reduction="mean"):
    """Closed-form KL(q || p) between diagonal Gaussians, per sample then reduced."""
    if q_mean.shape != q_logvar.shape or p_mean.shape[-1] != q_mean.shape[-1]:
        raise ValidationError("posterior and prior dims do not match")
    var_q = torch.exp(q_logvar)
    var_p = torch.exp(p_logvar)
    per_dim = 0.5 * (p_logvar - q_logvar + (var_q + (q_mean - p_mean) ** 2) / var_p - 1.0)
    per_sample = per_dim.sum(dim=-1)
    if reduction == "none":
        return per_sample
    return per_sample.mean()


def reconstruction_loss(x, x_hat, per_element_mean=False):
    """Squared error summed over per-sample elements, mean over the batch.

    per_element_mean switches to a mean over elements, for comparability
    across input sizes.
    """
    if x.shape != x_hat.shape:
        raise ValidationError(f"shape mismatch: {tuple(x.shape)} vs {tuple(x_hat.shape)}")
    diff = (x - x_hat) ** 2
    flat = diff.reshape(diff.shape[0], -1)
    per_sample = flat.mean(dim=1) if per_element_mean else flat.sum(dim=1)
    return per_sample.mean()


def _bernoulli_nll(targets, probs):
    probs = torch.clamp(probs, PROB_EPS, 1.0 - PROB_EPS)
    return -(targets * torch.log(probs) + (1.0 - targets) * torch.log(1.0 - probs))


def attribute_nll(targets, probs):
    """Bernoulli negative log-likelihood summed over slots, mean over the batch."""
    if targets.shape != probs.shape:
        raise ValidationError(f"shape mismatch: {tuple(targets.shape)} vs {tuple(probs.shape)}")
    return _bernoulli_nll(targets.to(probs.dtype), probs).sum(dim=-1).mean()


def label_nll(y, y_hat):
    """Binary label negative log-likelihood, mean over the batch."""
    y = y.reshape(-1).to(y_hat.dtype)
    y_hat = y_hat.reshape(-1)
    if y.shape != y_hat.shape:
        raise ValidationError("label and prediction counts differ")
    return _bernoulli_nll(y, y_hat).mean()


def multiclass_nll(y, logits):
    """Cross entropy for the K-class variant of the label head."""
    return torch.nn.functional.cross_entropy(logits, y.reshape(-1).long())


def attribute_regression_loss(attrs, pred):
    """Squared-error surrogate for continuous attribute targets."""
    return reconstruction_loss(attrs, pred)


def variance_penalty(values):
    """Population variance of per-domain scalars (divide by m)."""
    if torch.is_tensor(values):
        flat = values.reshape(-1)
    else:
        flat = torch.stack(list(values))
    if flat.numel() < 2:
        raise ValidationError("variance penalty needs at least 2 domains")
    return ((flat - flat.mean()) ** 2).mean()


@dataclass
class DomainLossBreakdown:
    """Per-domain terms of the composite objective."""

    domain: int
    kl: torch.Tensor
    rec: torch.Tensor
    gcn: torch.Tensor
    cls: torch.Tensor
    n: int

    def total(self, weights=None):
        w = weights or {}
        return (
            w.get("kl", 1.0) * self.kl
            + w.get("rec", 1.0) * self.rec
            + w.get("gcn", 1.0) * self.gcn
            + w.get("cls", 1.0) * self.cls
        )

    def as_record(self):
        return {
            "domain": self.domain,
            "kl": float(self.kl.detach()),
            "rec": float(self.rec.detach()),
            "gcn": float(self.gcn.detach()),
            "cls": float(self.cls.detach()),
            "n": self.n,
        }


def total_objective(breakdowns, beta=1.0, weights=None):
    """Sum of per-domain losses plus beta times the variance penalty.

    The penalty is the cross-domain variance of the attribute and label
    terms only.  Returns (total, variance term); with a single domain the
    variance term is zero.
    """
    if beta < 0:
        raise ValidationError("beta must be >= 0")
    ordered = sorted(breakdowns, key=lambda b: b.domain)
    total = sum(b.total(weights) for b in ordered)
    if len(ordered) >= 2:
        var_term = variance_penalty([b.gcn for b in ordered]) + variance_penalty(
            [b.cls for b in ordered]
        )
    else:
        var_term = torch.zeros((), dtype=ordered[0].kl.dtype)
    return total + beta * var_term, var_term
