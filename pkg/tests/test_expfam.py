import numpy as np
import pytest

from dgvae.errors import ConfigurationError, ValidationError
from dgvae.synth import (
    GaussianBlockSpec,
    LatentFamilies,
    natural_from_moments,
    moments_from_natural,
    sample_latents,
    statistics_independent,
    verify_rank_conditions,
)


def families(z_means, s_means=None, a_means=None, var=1.0):
    s_means = s_means or {0: [0.0], 1: [1.0]}
    a_means = a_means or {0: [0.0], 1: [1.0]}
    return LatentFamilies(
        s=GaussianBlockSpec.from_moments("s", s_means, var),
        a=GaussianBlockSpec.from_moments("a", a_means, var),
        z=GaussianBlockSpec.from_moments("z", z_means, var),
    )


def test_natural_params_round_trip():
    gamma = natural_from_moments([1.0, -2.0], [2.0, 0.5])
    mean, var = moments_from_natural(gamma)
    assert np.allclose(mean, [1.0, -2.0])
    assert np.allclose(var, [2.0, 0.5])
    assert np.all(gamma[1] < 0)


def test_degenerate_variance_returns_mean():
    spec = GaussianBlockSpec.from_moments("s", {0: [1.5, -0.5]}, 1e-22)
    fam = families({0: [0.0], 1: [1.0]})
    fam = LatentFamilies(s=spec, a=fam.a, z=fam.z)
    lat = sample_latents(0, 0, fam, 100, seed=3)
    assert np.max(np.abs(lat.s - np.array([1.5, -0.5]))) < 1e-9


def test_gaussian_moments_large_sample():
    # N(1, 2) in 1-D: closed-form moments bound the empirical ones
    fam = families({0: [0.0], 1: [1.0]}, s_means={0: [1.0], 1: [2.0]}, var=1.0)
    fam = LatentFamilies(
        s=GaussianBlockSpec.from_moments("s", {0: [1.0]}, 2.0), a=fam.a, z=fam.z
    )
    lat = sample_latents(0, 0, fam, 100_000, seed=5)
    assert abs(lat.s.mean() - 1.0) < 0.05
    assert abs(lat.s.var() - 2.0) < 0.1


def test_two_domains_distinguishable_at_five_sigma():
    fam = families({0: [0.0], 1: [1.0]})
    n = 10_000
    z1 = sample_latents(0, 0, fam, n, seed=9).z
    z2 = sample_latents(0, 1, fam, n, seed=9).z
    welch = abs(z1.mean() - z2.mean()) / np.sqrt(z1.var() / n + z2.var() / n)
    assert welch > 5.0


def test_sampling_is_deterministic():
    fam = families({0: [0.0], 1: [1.0]})
    a = sample_latents(1, 0, fam, 64, seed=42)
    b = sample_latents(1, 0, fam, 64, seed=42)
    assert np.array_equal(a.s, b.s) and np.array_equal(a.a, b.a) and np.array_equal(a.z, b.z)


def test_missing_condition_is_a_configuration_error():
    fam = families({0: [0.0], 1: [1.0]})
    with pytest.raises(ConfigurationError):
        sample_latents(0, 5, fam, 8, seed=0)


def test_nonnegative_second_order_parameter_rejected():
    with pytest.raises(ValidationError):
        GaussianBlockSpec("z", 1, {0: np.array([[0.5], [0.1]])})
    with pytest.raises(ValidationError):
        GaussianBlockSpec.from_moments("z", {0: [0.0]}, -1.0)


def test_nonfinite_parameter_rejected():
    with pytest.raises(ValidationError):
        GaussianBlockSpec("z", 1, {0: np.array([[np.inf], [-0.5]])})


def test_statistics_linearly_independent():
    spec = GaussianBlockSpec.from_moments("s", {0: [0.0, 1.0]}, 1.0)
    assert statistics_independent(spec, 0)
    degenerate = GaussianBlockSpec.from_moments("s", {0: [2.0]}, 1e-24)
    assert not statistics_independent(degenerate, 0)


class TestRankConditions:
    def test_shared_domain_parameters_fail(self):
        fam = families({0: [0.5], 1: [0.5]}, var=1.0)
        report = verify_rank_conditions(fam, m=2, K=2)
        assert not report.checks["z"].full_column_rank

    def test_continuous_draws_pass_for_z(self):
        rng = np.random.default_rng(0)
        z_means = {d: rng.normal(size=2) for d in range(6)}
        z_vars = {d: rng.uniform(0.5, 1.5, size=2) for d in range(6)}
        fam = LatentFamilies(
            s=GaussianBlockSpec.from_moments("s", {0: [0.0], 1: [1.0]}, 1.0),
            a=GaussianBlockSpec.from_moments("a", {0: [0.0], 1: [1.0]}, 1.0),
            z=GaussianBlockSpec.from_moments("z", z_means, z_vars),
        )
        report = verify_rank_conditions(fam, m=6, K=2)
        check = report.checks["z"]
        assert check.full_column_rank
        assert check.shape == (5, 4)
        assert check.singular_values[-1] > 0

    def test_two_classes_cannot_span_four_columns(self):
        # q_s * k_s = 4 with a single difference row
        fam = LatentFamilies(
            s=GaussianBlockSpec.from_moments("s", {0: [0.0, 0.0], 1: [1.0, -1.0]}, 1.0),
            a=GaussianBlockSpec.from_moments("a", {0: [0.0], 1: [1.0]}, 1.0),
            z=GaussianBlockSpec.from_moments("z", {0: [0.0], 1: [1.0]}, 1.0),
        )
        report = verify_rank_conditions(fam, m=2, K=2)
        assert not report.checks["s"].full_column_rank
        assert report.checks["s"].shape == (1, 4)

    def test_verdict_matches_brute_force_svd(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            m = int(rng.integers(2, 7))
            dim = int(rng.integers(1, 3))
            degenerate = trial % 3 == 0
            means = {}
            variances = {}
            for d in range(m):
                if degenerate and d > 0:
                    means[d], variances[d] = means[0], variances[0]
                else:
                    means[d] = rng.normal(size=dim)
                    variances[d] = rng.uniform(0.5, 2.0, size=dim)
            fam = LatentFamilies(
                s=GaussianBlockSpec.from_moments("s", {0: [0.0], 1: [1.0]}, 1.0),
                a=GaussianBlockSpec.from_moments("a", {0: [0.0], 1: [1.0]}, 1.0),
                z=GaussianBlockSpec.from_moments("z", means, variances),
            )
            report = verify_rank_conditions(fam, m=m, K=2)
            base = fam.z.flat_gamma(0)
            stacked = np.array([fam.z.flat_gamma(d) - base for d in range(1, m)])
            sv = np.linalg.svd(stacked, compute_uv=False)
            expected = int(np.sum(sv > 1e-10 * max(sv[0], 1.0))) == 2 * dim
            assert report.checks["z"].full_column_rank == expected

    def test_requires_two_domains_and_classes(self):
        fam = families({0: [0.0], 1: [1.0]})
        with pytest.raises(ValidationError):
            verify_rank_conditions(fam, m=1, K=2)
