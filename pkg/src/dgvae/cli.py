"""Command-line interface.

Subcommands: synth-gen, train, eval, disentangle-report, parse-overlay.
Report-producing commands write CSV tables and matplotlib figures side by
side in their output directory.
"""

import json
from pathlib import Path

import click
import numpy as np
import torch
import yaml

from .checkpoint import load_checkpoint
from .config import load_train_config
from .errors import ValidationError
from .evaluation import disentangle_report, eval_ood, model_scores
from .ingest.attributes import ATTRIBUTE_NODES, encode_attribute_vector
from .ingest.overlay import parse_overlay_file
from .reporting import (
    leakage_heatmap_figure,
    roc_figure,
    training_curves_figure,
    write_delimited,
)
from .synth.dataset import SynthConfig, generate_dataset, load_dataset, save_dataset, split_indices
from .training import DomainData, train


@click.group()
def main():
    """Domain-generalization VAE toolkit."""


@main.command("synth-gen")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="YAML overrides for the generator")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
def synth_gen(config_path, out_dir, seed):
    """Generate a synthetic benchmark dataset with ground-truth latents."""
    overrides = {}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            overrides = yaml.safe_load(fh) or {}
    config = SynthConfig(**overrides)
    dataset = generate_dataset(config, seed)
    path = save_dataset(dataset, out_dir)
    click.echo(f"wrote {dataset.n} samples to {path}")
    click.echo(f"rank conditions satisfied: {dataset.spec.rank_report().satisfied}")


def _synthetic_domain_data(dataset, domains, indices):
    data = []
    for d in domains:
        idx = indices[np.isin(dataset.d[indices], [d])]
        data.append(
            DomainData(
                x=torch.as_tensor(dataset.x[idx], dtype=torch.float32),
                y=torch.as_tensor(dataset.y[idx]),
                attrs=torch.as_tensor(dataset.attrs[idx], dtype=torch.float32),
            )
        )
    return data


def _eval_tensors(dataset, domains, indices):
    idx = indices[np.isin(dataset.d[indices], list(domains))]
    return (
        torch.as_tensor(dataset.x[idx], dtype=torch.float32),
        torch.as_tensor(dataset.y[idx]),
    )


@main.command("train")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
def train_cmd(config_path):
    """Train on the domains referenced by the config's data section."""
    config = load_train_config(config_path)
    data_spec = dict(config.data)
    kind = data_spec.get("kind", "synthetic")
    if kind != "synthetic":
        raise ValidationError(f"the CLI trains on synthetic dataset directories, not {kind!r}")
    dataset = load_dataset(data_spec["path"])
    train_domains = list(data_spec.get("train_domains", range(config.model.num_domains)))
    split_seed = int(data_spec.get("split_seed", config.seed))
    splits = split_indices(dataset, seed=split_seed)
    domains = _synthetic_domain_data(dataset, train_domains, splits["train"])
    val_data = _eval_tensors(dataset, train_domains, splits["val"])
    result = train(config, domains, val_data=val_data)
    out_dir = Path(config.out_dir)
    training_curves_figure(result.logs, out_dir / "training_curves.png")
    click.echo(f"best checkpoint: {result.best_checkpoint}")
    click.echo(f"last checkpoint: {result.last_checkpoint}")
    if result.best_val_auc is not None:
        click.echo(f"best validation AUC: {result.best_val_auc:.4f}")


@main.command("eval")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--domain", "domains", type=int, multiple=True, help="Domain ids to score (default: all)")
@click.option("--split", type=click.Choice(["train", "val", "test", "all"]), default="test", show_default=True)
@click.option("--split-seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="reports/eval", show_default=True)
def eval_cmd(checkpoint_path, dataset_path, domains, split, split_seed, out_dir):
    """Score a dataset with the relevant-branch classifier (no domain index)."""
    model, _ = load_checkpoint(checkpoint_path)
    dataset = load_dataset(dataset_path)
    indices = (
        np.arange(dataset.n) if split == "all" else split_indices(dataset, seed=split_seed)[split]
    )
    domains = list(domains) if domains else sorted(set(dataset.d.tolist()))
    x, y = _eval_tensors(dataset, domains, indices)
    report = eval_ood(model, x, y, dataset=Path(dataset_path).stem)
    out_dir = Path(out_dir)
    write_delimited(out_dir / "eval.csv", report.rows(ATTRIBUTE_NODES), ("dataset", "metric", "attribute", "value"))
    scores = model_scores(model, x)
    roc_figure(scores, y.numpy(), out_dir / "roc.png", title=f"AUC {report.auc:.3f}")
    click.echo(f"AUC over domains {domains} ({split}): {report.auc:.4f}")
    click.echo(f"report written to {out_dir}")


@main.command("disentangle-report")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--split", type=click.Choice(["train", "val", "test", "all"]), default="test", show_default=True)
@click.option("--split-seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="reports/disentangle", show_default=True)
def disentangle_cmd(checkpoint_path, dataset_path, split, split_seed, out_dir):
    """Fit affine recovery maps per latent block and report R^2 and leakage."""
    model, _ = load_checkpoint(checkpoint_path)
    dataset = load_dataset(dataset_path)
    indices = (
        np.arange(dataset.n) if split == "all" else split_indices(dataset, seed=split_seed)[split]
    )
    report = disentangle_report(model, dataset, indices=indices)
    out_dir = Path(out_dir)
    write_delimited(
        out_dir / "recovery.csv", report.rows(), ("true_block", "recovered_block", "r2", "kind")
    )
    write_delimited(
        out_dir / "rank_conditions.csv",
        report.rank_report.rows(),
        ("block", "rows", "cols", "min_singular_value", "full_column_rank"),
    )
    leakage_heatmap_figure(report, out_dir / "leakage.png")
    for block, score in report.scores.items():
        click.echo(f"block {block}: R^2 {score:.3f} (max cross-block {report.max_offdiag(block):.3f})")
    click.echo(f"rank conditions satisfied: {report.rank_report.satisfied}")
    click.echo(f"report written to {out_dir}")


@main.command("parse-overlay")
@click.argument("paths", type=click.Path(exists=True), nargs=-1, required=True)
@click.option("--encode/--no-encode", default=False, help="Also print the 12-slot target vectors")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write annotations as CSV")
def parse_overlay_cmd(paths, encode, out_path):
    """Parse OVERLAY annotation files and print one record per lesion."""
    rows = []
    for path in paths:
        for ann in parse_overlay_file(path):
            record = {
                "case_id": ann.case_id,
                "abnormality": ann.index,
                "lesion_type": ann.lesion_type,
                "shape": ann.shape or "",
                "margin": ann.margin or "",
                "lobulated": int(bool(ann.lobulated)),
                "spiculated": int(bool(ann.spiculated)),
                "pathology": ann.pathology,
            }
            if encode and ann.lesion_type == "mass":
                g = encode_attribute_vector(ann)
                record["attribute_vector"] = "".join(str(v) for v in g)
            click.echo(json.dumps(record))
            rows.append(record)
    if out_path:
        columns = list(rows[0].keys()) if rows else []
        write_delimited(out_path, rows, columns)
        click.echo(f"wrote {len(rows)} records to {out_path}")


if __name__ == "__main__":
    main()
