import numpy as np
import pytest
import torch

from conftest import eval_tensors, synthetic_domain_data, tiny_train_config
from dgvae.errors import ValidationError
from dgvae.evaluation import (
    disentangle_report,
    eval_ood,
    evaluate_attributes,
    evaluate_auc,
    model_scores,
)
from dgvae.nets.dal import dal_forward_calls
from dgvae.synth.recovery import score_recovery
from dgvae.training import train


def auc_pairwise_oracle(scores, labels):
    """O(n^2) Mann-Whitney statistic with half credit for ties."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestAuc:
    def test_perfect_ranking(self):
        assert evaluate_auc([0.9, 0.2, 0.7], [1, 0, 1]) == 1.0

    def test_all_tied_scores_give_half(self):
        assert evaluate_auc([0.4, 0.4, 0.4, 0.4], [1, 0, 1, 0]) == 0.5

    def test_label_inversion_symmetry(self):
        rng = np.random.default_rng(0)
        scores = rng.uniform(size=50)
        labels = rng.integers(0, 2, size=50)
        labels[0], labels[1] = 1, 0
        auc = evaluate_auc(scores, labels)
        assert evaluate_auc(scores, 1 - labels) == pytest.approx(1.0 - auc, abs=1e-12)

    def test_matches_pairwise_oracle_including_ties(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(5, 200))
            # coarse grid of score values forces plenty of ties
            scores = rng.integers(0, 6, size=n) / 5.0
            labels = rng.integers(0, 2, size=n)
            labels[0], labels[1] = 1, 0
            assert evaluate_auc(scores, labels) == auc_pairwise_oracle(scores, labels)

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            evaluate_auc([0.1, 0.9], [1, 1])


class TestAttributes:
    def test_perfect_predictions(self):
        g = np.array([[1, 0, 1], [0, 0, 1]])
        per_attr, overall = evaluate_attributes(g.astype(float), g)
        assert overall == 1.0
        assert np.all(per_attr == 1.0)

    def test_just_below_threshold_predicts_zero(self):
        g = np.array([[1, 0], [0, 0], [1, 1]])
        pred = np.full((3, 2), 0.499)
        per_attr, overall = evaluate_attributes(pred, g)
        assert overall == pytest.approx(1.0 - g.mean())

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(2)
        pred = rng.uniform(size=(20, 12))
        g = rng.integers(0, 2, size=(20, 12))
        per_attr, overall = evaluate_attributes(pred, g)
        hits = 0
        for i in range(20):
            for k in range(12):
                hits += int((pred[i, k] >= 0.5) == bool(g[i, k]))
        assert overall == pytest.approx(hits / 240)


@pytest.fixture(scope="module")
def trained(tmp_path_factory, tiny_synth):
    dataset, splits = tiny_synth
    domains = synthetic_domain_data(dataset, range(3), splits["train"])
    config = tiny_train_config(tmp_path_factory.mktemp("trained"), steps=150)
    return dataset, splits, train(config, domains)


class TestOodEvaluation:
    def test_never_touches_adaptive_banks(self, trained):
        dataset, splits, result = trained
        x, y = eval_tensors(dataset, range(3), splits["test"])
        before = dal_forward_calls(result.model)
        report = eval_ood(result.model, x, y)
        assert dal_forward_calls(result.model) == before
        assert 0.0 <= report.auc <= 1.0
        assert report.n == x.shape[0]

    def test_composes_with_evaluate_auc(self, trained):
        dataset, splits, result = trained
        x, y = eval_tensors(dataset, range(3), splits["test"])
        report = eval_ood(result.model, x, y)
        scores = model_scores(result.model, x)
        assert report.auc == evaluate_auc(scores, y.numpy())

    def test_report_rows_are_delimited_friendly(self, trained):
        dataset, splits, result = trained
        x, y = eval_tensors(dataset, range(3), splits["test"])
        rows = eval_ood(result.model, x, y, dataset="toy").rows()
        assert {r["metric"] for r in rows} == {"auc", "n"}


class TestDisentangleReport:
    def test_identity_recovery_scores_one(self):
        # ground-truth latents passed straight through score 1.0 per block
        rng = np.random.default_rng(3)
        true = {b: rng.standard_normal((1500, 2)) for b in ("s", "a", "z")}
        report = score_recovery(true, true)
        for block in ("s", "a", "z"):
            assert report.scores[block] == pytest.approx(1.0, abs=1e-9)

    def test_untrained_model_report_is_well_formed(self, tiny_synth, tmp_path):
        dataset, splits = tiny_synth
        domains = synthetic_domain_data(dataset, range(3), splits["train"])
        config = tiny_train_config(tmp_path, steps=1)
        result = train(config, domains)
        report = disentangle_report(result.model, dataset, indices=splits["test"])
        assert report.blocks == ("s", "a", "z")
        assert report.leakage.shape == (3, 3)
        assert np.all(report.leakage >= 0.0) and np.all(report.leakage <= 1.0)
        assert report.rank_report is not None

    def test_domain_map_restricts_z_to_training_domains(self, trained, tiny_synth):
        dataset, splits, result = trained
        report = disentangle_report(result.model, dataset, domain_map={0: 0, 1: 1})
        assert report.leakage.shape == (3, 3)
        # only samples from mapped domains enter the fits
        n_kept = int(np.isin(dataset.d, [0, 1]).sum())
        assert n_kept < dataset.n

    def test_trained_model_beats_untrained_on_block_scores(self, trained, tiny_synth, tmp_path):
        dataset, splits, result = trained
        report = disentangle_report(result.model, dataset, indices=splits["test"])
        fresh = train(tiny_train_config(tmp_path, steps=1),
                      synthetic_domain_data(dataset, range(3), splits["train"]))
        base = disentangle_report(fresh.model, dataset, indices=splits["test"])
        assert sum(report.scores.values()) > sum(base.scores.values())
