"""Report rendering: delimited tables plus matplotlib figures on disk."""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import torch

from .nets.heads import partial_reconstruction


def write_delimited(path, rows, columns):
    """UTF-8 CSV with an explicit column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def training_curves_figure(logs, path):
    """Per-domain total loss and the variance penalty over steps."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    by_domain = {}
    var_by_step = {}
    for record in logs:
        d = record["domain"]
        by_domain.setdefault(d, ([], []))
        total_d = record["kl"] + record["rec"] + record["gcn"] + record["cls"]
        by_domain[d][0].append(record["step"])
        by_domain[d][1].append(total_d)
        var_by_step[record["step"]] = record["var"]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))
    for d, (steps, totals) in sorted(by_domain.items()):
        ax0.plot(steps, totals, label=f"domain {d}", linewidth=0.8)
    ax0.set_xlabel("step")
    ax0.set_ylabel("domain loss")
    ax0.legend(fontsize=8)
    steps = sorted(var_by_step)
    ax1.plot(steps, [var_by_step[s] for s in steps], color="tab:red", linewidth=0.8)
    ax1.set_xlabel("step")
    ax1.set_ylabel("variance penalty")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def leakage_heatmap_figure(report, path):
    """3x3 recovery matrix: rows true blocks, columns recovered blocks."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    im = ax.imshow(report.leakage, vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(len(report.blocks)), [f"recovered {b}" for b in report.blocks])
    ax.set_yticks(range(len(report.blocks)), [f"true {b}" for b in report.blocks])
    for i in range(len(report.blocks)):
        for j in range(len(report.blocks)):
            value = report.leakage[i, j]
            ax.text(
                j,
                i,
                f"{value:.2f}",
                ha="center",
                va="center",
                color="white" if value < 0.6 else "black",
                fontsize=9,
            )
    ax.set_title("affine recovery R^2")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def roc_figure(scores, labels, path, title="ROC"):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    order = np.argsort(-scores, kind="stable")
    sorted_labels = labels[order]
    tp = np.concatenate([[0], np.cumsum(sorted_labels == 1)])
    fp = np.concatenate([[0], np.cumsum(sorted_labels == 0)])
    tpr = tp / max(tp[-1], 1)
    fpr = fp / max(fp[-1], 1)
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot(fpr, tpr, color="tab:blue")
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _to_png(image, path):
    from PIL import Image

    array = np.asarray(image, dtype=np.float64)
    array = np.clip(array, 0.0, 1.0)
    Image.fromarray(np.round(array * 255).astype(np.uint8), mode="L").save(path)


def export_reconstructions(model, x, out_dir, subsets=(("s", "a", "z"), ("s", "a"), ("z",)), domain=None):
    """Write per-(sample, subset) reconstruction PNGs plus a manifest.

    Images are scaled from [0, 1] to 8-bit grayscale; the manifest records
    the subset behind each file.  Needs image-shaped inputs.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.eval()
    with torch.no_grad():
        post_s, post_a, post_z = model.posteriors(x, domain)
        s, a = post_s.mean, post_a.mean
        z = post_z.mean if post_z is not None else torch.zeros(x.shape[0], model.config.q_z)
    rows = []
    for subset in subsets:
        recon = partial_reconstruction(model.decoder, s, a, z, subset)
        tag = "".join(sorted(subset))
        for i in range(x.shape[0]):
            name = f"sample{i:03d}_{tag}.png"
            _to_png(recon[i, 0].numpy(), out_dir / name)
            rows.append({"sample": i, "subset": "+".join(sorted(subset)), "file": name})
    for i in range(x.shape[0]):
        name = f"sample{i:03d}_input.png"
        _to_png(x[i, 0].numpy(), out_dir / name)
        rows.append({"sample": i, "subset": "input", "file": name})
    write_delimited(out_dir / "manifest.csv", rows, ("sample", "subset", "file"))
    return out_dir
