"""Evaluation: ranking AUC, attribute accuracy, OOD scoring, recovery reports."""

from dataclasses import dataclass

import numpy as np
import torch
from scipy.stats import rankdata

from .errors import ValidationError
from .nets.dal import dal_forward_calls
from .synth.recovery import score_recovery


def evaluate_auc(scores, labels):
    """Area under the ROC curve via midranks; tied pairs count one half.

    Equals the probability that a uniformly chosen positive outranks a
    uniformly chosen negative.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise ValidationError("scores and labels differ in length")
    if not np.isin(labels, (0, 1)).all():
        raise ValidationError("labels must be binary")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("AUC needs both classes present")
    ranks = rankdata(scores)
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate_attributes(pred, targets, threshold=0.5):
    """Per-attribute and overall accuracy of thresholded attribute scores."""
    pred = np.asarray(pred, dtype=np.float64)
    targets = np.asarray(targets)
    if pred.shape != targets.shape:
        raise ValidationError("prediction and target shapes differ")
    hits = (pred >= threshold).astype(np.int64) == targets.astype(np.int64)
    per_attribute = hits.mean(axis=0)
    return per_attribute, float(hits.mean())


@dataclass
class EvalReport:
    dataset: str
    n: int
    auc: float
    per_attribute_accuracy: object = None
    overall_attribute_accuracy: float = None

    def rows(self, attribute_names=None):
        out = [
            {"dataset": self.dataset, "metric": "auc", "attribute": "", "value": self.auc},
            {"dataset": self.dataset, "metric": "n", "attribute": "", "value": self.n},
        ]
        if self.overall_attribute_accuracy is not None:
            out.append(
                {
                    "dataset": self.dataset,
                    "metric": "attribute_accuracy",
                    "attribute": "overall",
                    "value": self.overall_attribute_accuracy,
                }
            )
            names = attribute_names or [str(i) for i in range(len(self.per_attribute_accuracy))]
            for name, acc in zip(names, self.per_attribute_accuracy):
                out.append(
                    {
                        "dataset": self.dataset,
                        "metric": "attribute_accuracy",
                        "attribute": name,
                        "value": float(acc),
                    }
                )
        return out


def model_scores(model, x, batch_size=512):
    model.eval()
    scores = []
    with torch.no_grad():
        for start in range(0, x.shape[0], batch_size):
            scores.append(model.predict_proba(x[start : start + batch_size]))
    return torch.cat(scores).numpy()


def eval_ood(model, x, y, attrs=None, dataset="unseen", batch_size=512):
    """Score an unseen-domain dataset through the relevant branch only.

    Never requests a domain index; instrumentation asserts the adaptive
    normalization banks are untouched.
    """
    calls_before = dal_forward_calls(model)
    scores = model_scores(model, x, batch_size)
    report = EvalReport(dataset=dataset, n=int(x.shape[0]), auc=evaluate_auc(scores, y.numpy()))
    if attrs is not None and model.config.attribute_head == "gcn":
        model.eval()
        with torch.no_grad():
            pred = torch.cat(
                [
                    model.predict_attributes(x[start : start + batch_size])
                    for start in range(0, x.shape[0], batch_size)
                ]
            ).numpy()
        per_attr, overall = evaluate_attributes(pred, attrs.numpy())
        report.per_attribute_accuracy = per_attr
        report.overall_attribute_accuracy = overall
    if dal_forward_calls(model) != calls_before:
        raise AssertionError("unseen-domain evaluation touched adaptive normalization")
    return report


def encode_blocks(model, x, d=None, domain_map=None, batch_size=512):
    """Posterior means per latent block; z only where a domain mapping exists."""
    model.eval()
    s_parts, a_parts = [], []
    with torch.no_grad():
        for start in range(0, x.shape[0], batch_size):
            s_mean, a_mean = model.relevant_means(x[start : start + batch_size])
            s_parts.append(s_mean)
            a_parts.append(a_mean)
    blocks = {"s": torch.cat(s_parts).numpy(), "a": torch.cat(a_parts).numpy()}
    if d is not None and not model.config.single_branch:
        z = torch.zeros(x.shape[0], model.config.q_z, dtype=x.dtype)
        with torch.no_grad():
            for dataset_domain, model_domain in (domain_map or {}).items():
                mask = torch.as_tensor(np.asarray(d) == dataset_domain)
                if mask.any():
                    post = model.irrelevant(x[mask], model_domain)
                    z[mask] = post.mean
        blocks["z"] = z.numpy()
    elif d is not None and model.config.single_branch:
        with torch.no_grad():
            z_parts = []
            for start in range(0, x.shape[0], batch_size):
                _, _, post_z = model.encoder(x[start : start + batch_size])
                z_parts.append(post_z.mean)
        blocks["z"] = torch.cat(z_parts).numpy()
    return blocks


def disentangle_report(model, dataset, indices=None, domain_map=None):
    """Affine-recovery scores of the model's latents against ground truth.

    dataset is a SyntheticDataset; domain_map sends dataset domain ids to
    model domain indices (identity over training domains by default).
    """
    if indices is None:
        indices = np.arange(dataset.n)
    if domain_map is None:
        m = model.config.num_domains
        domain_map = {d: d for d in range(min(m, dataset.spec.num_domains))}
    keep = np.isin(dataset.d[indices], list(domain_map)) if domain_map else np.ones(len(indices), bool)
    idx = np.asarray(indices)[keep]
    x = torch.as_tensor(dataset.x[idx], dtype=torch.float32)
    recovered = encode_blocks(model, x, d=dataset.d[idx], domain_map=domain_map)
    true_blocks = {
        "s": dataset.latents.s[idx],
        "a": dataset.latents.a[idx],
        "z": dataset.latents.z[idx],
    }
    rank_report = dataset.spec.rank_report()
    return score_recovery(true_blocks, recovered, rank_report=rank_report)
