import numpy as np
import pytest

from dgvae.errors import ValidationError
from dgvae.synth import InvertibleStack, LatentTriple, MixingFunctions, mix_observation


def triple(n=16, dims=(2, 2, 2), seed=0):
    rng = np.random.default_rng(seed)
    return LatentTriple(
        s=rng.standard_normal((n, dims[0])),
        a=rng.standard_normal((n, dims[1])),
        z=rng.standard_normal((n, dims[2])),
    )


def test_identity_mixing_returns_latents():
    lat = triple()
    mix = MixingFunctions(
        f_x=InvertibleStack.identity(6), f_a=InvertibleStack.identity(2), noise_x=0.0, noise_a=0.0
    )
    x, attrs = mix_observation(lat, mix, seed=0)
    assert np.array_equal(x, lat.stacked())
    assert np.array_equal(attrs, lat.a)


def test_inverse_recovers_latents_without_noise():
    lat = triple(n=64)
    mix = MixingFunctions.random((2, 2, 2), seed=5, noise_x=0.0, noise_a=0.0)
    x, attrs = mix_observation(lat, mix, seed=1)
    recovered = mix.f_x.inverse(x)
    truth = lat.stacked()
    scale = np.abs(truth).max()
    assert np.abs(recovered - truth).max() / scale < 1e-6
    rec_a = mix.f_a.inverse(attrs)
    assert np.abs(rec_a - lat.a).max() / np.abs(lat.a).max() < 1e-6


def test_noise_variance_matches_scale():
    sigma = 0.3
    lat = triple(n=10_000)
    mix = MixingFunctions.random((2, 2, 2), seed=2, noise_x=sigma, noise_a=0.0)
    x, _ = mix_observation(lat, mix, seed=11)
    clean = mix.f_x.forward(lat.stacked())
    mse = np.mean(np.sum((x - clean) ** 2, axis=1) / x.shape[1])
    assert abs(mse - sigma**2) <= 0.1 * sigma**2


def test_condition_number_bound_enforced():
    with pytest.raises(ValidationError):
        InvertibleStack([np.diag([1.0, 1e-9])])
    # generous bound admits the same matrix
    InvertibleStack([np.diag([1.0, 1e-9])], condition_bound=1e12)


def test_random_stack_is_well_conditioned():
    stack = InvertibleStack.random(4, seed=0)
    assert all(c < 1e3 for c in stack.condition_numbers())


def test_dimension_mismatch_rejected():
    lat = triple(dims=(2, 2, 2))
    mix = MixingFunctions(
        f_x=InvertibleStack.identity(7), f_a=InvertibleStack.identity(2)
    )
    with pytest.raises(ValidationError):
        mix_observation(lat, mix, seed=0)
    with pytest.raises(ValidationError):
        InvertibleStack.identity(3).forward(np.zeros((4, 5)))


def test_pointwise_stage_is_strictly_monotone_and_invertible():
    stack = InvertibleStack.random(3, seed=1, alpha=0.9)
    x = np.linspace(-4, 4, 97).reshape(-1, 1).repeat(3, axis=1)
    y = stack.forward(x)
    back = stack.inverse(y)
    assert np.abs(back - x).max() < 1e-9


def test_observation_noise_is_deterministic_per_seed():
    lat = triple(n=32)
    mix = MixingFunctions.random((2, 2, 2), seed=3, noise_x=0.1, noise_a=0.1)
    x1, a1 = mix_observation(lat, mix, seed=21)
    x2, a2 = mix_observation(lat, mix, seed=21)
    x3, _ = mix_observation(lat, mix, seed=22)
    assert np.array_equal(x1, x2) and np.array_equal(a1, a2)
    assert not np.array_equal(x1, x3)
