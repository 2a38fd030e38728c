"""Bijective mixing maps with recorded inverses and additive observation noise.

Observations follow an additive noise model: a stack of invertible square
linear maps interleaved with a smooth strictly-increasing pointwise
nonlinearity g(u) = u + alpha * tanh(u), plus diagonal Gaussian noise.
Bijectivity holds by construction: the linear stages are built from an
SVD with bounded singular values and g' >= 1 everywhere.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..rng import stream

DEFAULT_CONDITION_BOUND = 1e3


def _pointwise(u, alpha):
    return u + alpha * np.tanh(u)


def _pointwise_inverse(w, alpha, tol=1e-13, max_iter=60):
    # Newton on t + alpha*tanh(t) = w; derivative >= 1 so the iteration is safe.
    if alpha == 0.0:
        return np.array(w, dtype=np.float64, copy=True)
    t = np.array(w, dtype=np.float64, copy=True)
    for _ in range(max_iter):
        th = np.tanh(t)
        resid = t + alpha * th - w
        if np.max(np.abs(resid)) < tol:
            break
        t -= resid / (1.0 + alpha * (1.0 - th**2))
    return t


@dataclass
class InvertibleStack:
    """Alternating (invertible linear, pointwise nonlinearity) stages."""

    weights: list
    alpha: float = 0.5
    condition_bound: float = DEFAULT_CONDITION_BOUND

    def __post_init__(self):
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        dim = self.dim
        for w in self.weights:
            if w.shape != (dim, dim):
                raise ValidationError(f"linear stage shape {w.shape} is not square of dim {dim}")
        if self.alpha <= -1.0:
            raise ValidationError("pointwise map needs alpha > -1 to stay invertible")
        for k, c in enumerate(self.condition_numbers()):
            if c > self.condition_bound:
                raise ValidationError(
                    f"linear stage {k} has condition number {c:.3g} > bound {self.condition_bound:.3g}"
                )

    @property
    def dim(self):
        return self.weights[0].shape[0]

    def condition_numbers(self):
        return [float(np.linalg.cond(w)) for w in self.weights]

    @classmethod
    def identity(cls, dim):
        return cls(weights=[np.eye(dim)], alpha=0.0)

    @classmethod
    def random(cls, dim, seed, stages=3, alpha=0.5, singular_range=(0.5, 2.0), tag="mix"):
        """Draw a well-conditioned random stack (singular values inside singular_range)."""
        rng = stream(seed, tag, dim, stages)
        lo, hi = singular_range
        weights = []
        for _ in range(stages):
            u, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
            v, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
            sv = rng.uniform(lo, hi, size=dim)
            weights.append(u @ np.diag(sv) @ v.T)
        return cls(weights=weights, alpha=alpha)

    def forward(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.shape[-1] != self.dim:
            raise ValidationError(f"input dim {v.shape[-1]} != map dim {self.dim}")
        out = v
        for w in self.weights:
            out = _pointwise(out @ w.T, self.alpha)
        return out

    def inverse(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise ValidationError(f"input dim {x.shape[-1]} != map dim {self.dim}")
        out = x
        for w in reversed(self.weights):
            out = _pointwise_inverse(out, self.alpha)
            out = np.linalg.solve(w, out.T).T
        return out


@dataclass
class MixingFunctions:
    """Observation maps x = f_x(s,a,z) + eps_x and A = f_A(a) + eps_A."""

    f_x: InvertibleStack
    f_a: InvertibleStack
    noise_x: float = 0.05
    noise_a: float = 0.05

    def __post_init__(self):
        if self.noise_x < 0 or self.noise_a < 0:
            raise ValidationError("noise scales must be non-negative")

    @classmethod
    def random(cls, latent_dims, seed, stages=3, alpha=0.5, noise_x=0.05, noise_a=0.05):
        q_s, q_a, q_z = latent_dims
        return cls(
            f_x=InvertibleStack.random(q_s + q_a + q_z, seed, stages=stages, alpha=alpha, tag="f_x"),
            f_a=InvertibleStack.random(q_a, seed, stages=stages, alpha=alpha, tag="f_a"),
            noise_x=noise_x,
            noise_a=noise_a,
        )


def mix_observation(latents, mix, seed):
    """Map a latent batch to noisy observations (x, A)."""
    v = latents.stacked()
    if v.shape[1] != mix.f_x.dim:
        raise ValidationError(f"latent dim {v.shape[1]} != f_x dim {mix.f_x.dim}")
    if latents.a.shape[1] != mix.f_a.dim:
        raise ValidationError(f"a dim {latents.a.shape[1]} != f_A dim {mix.f_a.dim}")
    rng = stream(seed, "observe", v.shape[0])
    x = mix.f_x.forward(v)
    attrs = mix.f_a.forward(latents.a)
    if mix.noise_x > 0:
        x = x + mix.noise_x * rng.standard_normal(x.shape)
    if mix.noise_a > 0:
        attrs = attrs + mix.noise_a * rng.standard_normal(attrs.shape)
    return x, attrs
