"""Affine-recovery scoring of learned latents against ground truth.

A block counts as recovered when an affine map applied to the sufficient
statistics of the learned latents reproduces the sufficient statistics of
the true latents.  Cross-block fits quantify information leakage.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .expfam import sufficient_statistics

BLOCK_ORDER = ("s", "a", "z")


@dataclass
class AffineFit:
    r2: float
    per_output_r2: np.ndarray
    coef: np.ndarray
    intercept: np.ndarray
    degenerate: bool


def affine_fit_score(true, recovered, min_ratio=10):
    """Least-squares fit of recovered features onto true targets.

    Returns the coefficient of determination averaged over target
    coordinates together with the fitted map (coef, intercept).  A
    rank-deficient regressor is reported via the degenerate flag rather
    than raised.
    """
    true = np.atleast_2d(np.asarray(true, dtype=np.float64))
    recovered = np.atleast_2d(np.asarray(recovered, dtype=np.float64))
    if true.shape[0] != recovered.shape[0]:
        raise ValidationError("true and recovered need equal sample counts")
    n, p = recovered.shape
    if n < min_ratio * (p + 1):
        raise ValidationError(f"need >= {min_ratio}x more samples than regressors ({n} vs {p + 1})")

    design = np.concatenate([recovered, np.ones((n, 1))], axis=1)
    coef, _, rank, _ = np.linalg.lstsq(design, true, rcond=None)
    degenerate = rank < p + 1
    pred = design @ coef
    ss_res = np.sum((true - pred) ** 2, axis=0)
    ss_tot = np.sum((true - true.mean(axis=0)) ** 2, axis=0)
    per_output = np.where(
        ss_tot > 1e-12,
        1.0 - ss_res / np.where(ss_tot > 1e-12, ss_tot, 1.0),
        (ss_res <= 1e-12).astype(np.float64),
    )
    per_output = np.clip(per_output, 0.0, 1.0)
    return AffineFit(
        r2=float(per_output.mean()),
        per_output_r2=per_output,
        coef=coef[:-1],
        intercept=coef[-1],
        degenerate=bool(degenerate),
    )


@dataclass
class DisentanglementReport:
    """Per-block recovery scores and the 3x3 cross-block leakage matrix.

    leakage[i, j] is the R^2 of predicting the true block BLOCK_ORDER[i]
    from the recovered block BLOCK_ORDER[j]; the diagonal holds the block
    scores.
    """

    blocks: tuple
    leakage: np.ndarray
    fits: dict
    rank_report: object = None

    @property
    def scores(self):
        return {b: float(self.leakage[i, i]) for i, b in enumerate(self.blocks)}

    def max_offdiag(self, block):
        i = self.blocks.index(block)
        row = [self.leakage[i, j] for j in range(len(self.blocks)) if j != i]
        col = [self.leakage[j, i] for j in range(len(self.blocks)) if j != i]
        return float(max(row + col))

    def rows(self):
        out = []
        for i, true_block in enumerate(self.blocks):
            for j, rec_block in enumerate(self.blocks):
                out.append(
                    {
                        "true_block": true_block,
                        "recovered_block": rec_block,
                        "r2": float(self.leakage[i, j]),
                        "kind": "score" if i == j else "leakage",
                    }
                )
        return out


def score_recovery(true_blocks, recovered_blocks, rank_report=None, use_statistics=True):
    """Fit every (true block, recovered block) pair and assemble the report.

    Both arguments map block name -> (n, q) sample array.  With
    use_statistics the fits relate sufficient statistics [u, u^2] on both
    sides, matching the affine-recovery definition.
    """
    blocks = tuple(b for b in BLOCK_ORDER if b in true_blocks)
    feats = {}
    targets = {}
    for b in blocks:
        if use_statistics:
            feats[b] = sufficient_statistics(recovered_blocks[b])
            targets[b] = sufficient_statistics(true_blocks[b])
        else:
            feats[b] = np.asarray(recovered_blocks[b], dtype=np.float64)
            targets[b] = np.asarray(true_blocks[b], dtype=np.float64)
    leakage = np.zeros((len(blocks), len(blocks)))
    fits = {}
    for i, tb in enumerate(blocks):
        for j, rb in enumerate(blocks):
            fit = affine_fit_score(targets[tb], feats[rb])
            leakage[i, j] = fit.r2
            fits[(tb, rb)] = fit
    return DisentanglementReport(blocks=blocks, leakage=leakage, fits=fits, rank_report=rank_report)
