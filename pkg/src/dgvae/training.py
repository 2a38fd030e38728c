"""Multi-domain training loop.

Every optimizer step consumes exactly one minibatch from every training
domain, builds the per-domain loss breakdown, adds the cross-domain
variance penalty, and applies one update.  All randomness derives from the
config seed, so runs are reproducible step for step.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .checkpoint import save_checkpoint
from .errors import TrainingDiverged, ValidationError
from .evaluation import evaluate_auc
from .model import DisentangledDomainVae
from .nets.encoders import reparameterize
from .objectives import (
    DomainLossBreakdown,
    attribute_nll,
    kl_diag_gaussian,
    label_nll,
    multiclass_nll,
    reconstruction_loss,
    total_objective,
)
from .rng import stream


@dataclass
class DomainData:
    """Tensors for one training domain."""

    x: torch.Tensor
    y: torch.Tensor
    attrs: torch.Tensor  # continuous targets or binary slot vectors

    def __post_init__(self):
        if not (self.x.shape[0] == self.y.shape[0] == self.attrs.shape[0]):
            raise ValidationError("domain tensors have mismatched sample counts")
        if self.x.shape[0] < 1:
            raise ValidationError("every training domain needs samples")

    @property
    def n(self):
        return self.x.shape[0]


class _EpochSampler:
    """Seeded shuffled minibatch indices that reshuffle each epoch."""

    def __init__(self, n, batch_size, seed, tag):
        self.n = n
        self.batch_size = min(batch_size, n)
        self.rng = stream(seed, "batches", tag)
        self.order = self.rng.permutation(n)
        self.pos = 0

    def next(self):
        if self.pos + self.batch_size > self.n:
            self.order = self.rng.permutation(self.n)
            self.pos = 0
        idx = self.order[self.pos : self.pos + self.batch_size]
        self.pos += self.batch_size
        return torch.as_tensor(np.ascontiguousarray(idx), dtype=torch.long)


@dataclass
class TrainResult:
    model: DisentangledDomainVae
    logs: list
    best_checkpoint: str = None
    last_checkpoint: str = None
    best_val_auc: float = None
    steps: int = 0


def domain_losses(model, config, batch, domain, generator):
    """One domain's loss breakdown for a minibatch."""
    x, y, attrs = batch
    post_s, post_a, post_z = model.posteriors(x, domain)
    prior = model.prior_sa(dtype=x.dtype, device=x.device)
    kl = kl_diag_gaussian(
        torch.cat([post_s.mean, post_a.mean], dim=-1),
        torch.cat([post_s.logvar, post_a.logvar], dim=-1),
        prior.mean,
        prior.logvar,
    )
    prior_z = model.domain_prior(domain)
    kl = kl + kl_diag_gaussian(post_z.mean, post_z.logvar, prior_z.mean, prior_z.logvar)

    rec = x.new_zeros(())
    attr = x.new_zeros(())
    cls = x.new_zeros(())
    for _ in range(config.elbo_samples):
        s = reparameterize(post_s, generator=generator)
        a = reparameterize(post_a, generator=generator)
        z = reparameterize(post_z, generator=generator)
        rec = rec + reconstruction_loss(x, model.decoder(z, s, a), config.per_element_rec)
        attr_pred = model.attribute_head(a)
        if model.config.attribute_head == "gcn":
            slots = model.config.attr_loss_slots
            if slots:
                attr = attr + attribute_nll(attrs[:, :slots], attr_pred[:, :slots])
            else:
                attr = attr + attribute_nll(attrs, attr_pred)
        else:
            attr = attr + reconstruction_loss(attrs, attr_pred)
        logits = model.classifier.logits(s, a)
        if model.config.num_classes == 2:
            cls = cls + label_nll(y, torch.sigmoid(logits.squeeze(-1)))
        else:
            cls = cls + multiclass_nll(y, logits)
    k = config.elbo_samples
    return DomainLossBreakdown(
        domain=domain, kl=kl, rec=rec / k, gcn=attr / k, cls=cls / k, n=x.shape[0]
    )


def _maybe_flip(x, generator):
    if x.dim() != 4:
        return x
    flip = torch.rand(x.shape[0], generator=generator) < 0.5
    if flip.any():
        x = x.clone()
        x[flip] = torch.flip(x[flip], dims=(-1,))
    return x


def train(config, domains, val_data=None, correlation=None):
    """Run the configured number of steps over the per-domain datasets.

    domains: list of DomainData, one per training domain (index = domain id).
    val_data: optional (x, y) tensors for AUC-based model selection.
    Returns a TrainResult; aborts with TrainingDiverged on non-finite loss.
    """
    if not config.model.single_branch and len(domains) != config.model.num_domains:
        raise ValidationError(
            f"got {len(domains)} domain datasets for {config.model.num_domains} domains"
        )
    if val_data is not None and config.val_every and config.model.num_classes != 2:
        raise ValidationError("AUC-based model selection needs the binary classifier head")
    torch.manual_seed(config.seed)
    model = DisentangledDomainVae(config.model, correlation=correlation)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.optimizer.lr)
    generator = torch.Generator().manual_seed(config.seed + 1)
    samplers = [
        _EpochSampler(d.n, config.batch_size, config.seed, f"domain-{i}")
        for i, d in enumerate(domains)
    ]

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs = []
    best_auc = None
    best_path = None
    last_good = None

    def checkpoint(tag, step):
        path = out_dir / f"checkpoint_{tag}.pt"
        save_checkpoint(path, model, train_config=config, step=step)
        return str(path)

    for step in range(config.optimizer.steps):
        model.train()
        breakdowns = []
        for d, (data, sampler) in enumerate(zip(domains, samplers)):
            idx = sampler.next()
            x = _maybe_flip(data.x[idx], generator) if config.horizontal_flip else data.x[idx]
            breakdowns.append(
                domain_losses(model, config, (x, data.y[idx], data.attrs[idx]), d, generator)
            )
        total, var_term = total_objective(breakdowns, beta=config.beta, weights=config.loss_weights)
        if not torch.isfinite(total):
            raise TrainingDiverged(
                f"non-finite loss at step {step}", checkpoint_path=last_good
            )
        optimizer.zero_grad()
        total.backward()
        optimizer.step()

        for b in breakdowns:
            record = b.as_record()
            record.update(step=step, var=float(var_term.detach()), total=float(total.detach()))
            logs.append(record)

        if config.val_every and val_data is not None and (step + 1) % config.val_every == 0:
            auc = validation_auc(model, val_data)
            if best_auc is None or auc > best_auc:
                best_auc = auc
                best_path = checkpoint("best", step)
        if config.checkpoint_every and (step + 1) % config.checkpoint_every == 0:
            last_good = checkpoint(f"step{step + 1}", step)

    last_path = checkpoint("last", config.optimizer.steps - 1)
    if best_path is None:
        best_path = last_path
        if val_data is not None:
            best_auc = validation_auc(model, val_data)
    write_logs(logs, out_dir / "steps.jsonl")
    return TrainResult(
        model=model,
        logs=logs,
        best_checkpoint=best_path,
        last_checkpoint=last_path,
        best_val_auc=best_auc,
        steps=config.optimizer.steps,
    )


def validation_auc(model, val_data, batch_size=512):
    x, y = val_data
    model.eval()
    scores = []
    with torch.no_grad():
        for start in range(0, x.shape[0], batch_size):
            scores.append(model.predict_proba(x[start : start + batch_size]))
    model.train()
    return evaluate_auc(torch.cat(scores).numpy(), y.numpy())


def write_logs(logs, path):
    """One JSON record per line: step, domain, kl, rec, gcn, cls, var, total."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in logs:
            fh.write(json.dumps(record) + "\n")
    return path
