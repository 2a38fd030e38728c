"""Conditional Gaussian latent blocks in natural-parameter form.

Each latent block (s, a, z) is a product of per-coordinate exponential
families with sufficient statistics T(u) = [u, u^2], conditioned on the
class label (s, a) or the domain index (z).  Natural parameters are stored
as a (2, dim) table per conditioning value:

    row 0:  mu / sigma^2
    row 1:  -1 / (2 sigma^2)

so row 1 must be strictly negative for a proper density.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, ValidationError
from ..rng import stream

GAUSSIAN_ORDER = 2


def natural_from_moments(mean, var):
    """Map per-coordinate (mean, variance) to a (2, dim) natural-parameter table."""
    mean = np.asarray(mean, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    if mean.shape != var.shape:
        raise ValidationError(f"mean shape {mean.shape} != variance shape {var.shape}")
    if np.any(var <= 0):
        raise ValidationError("Gaussian variance must be strictly positive")
    return np.stack([mean / var, -0.5 / var])


def moments_from_natural(gamma):
    """Inverse of natural_from_moments; returns (mean, variance) arrays."""
    gamma = np.asarray(gamma, dtype=np.float64)
    var = -0.5 / gamma[1]
    return gamma[0] * var, var


def sufficient_statistics(u):
    """Stack [u, u^2] per coordinate: (n, q) -> (n, 2q)."""
    u = np.asarray(u, dtype=np.float64)
    return np.concatenate([u, u**2], axis=-1)


@dataclass(frozen=True)
class GaussianBlockSpec:
    """One latent block: natural-parameter tables indexed by conditioning value."""

    block: str
    dim: int
    natural_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"block {self.block!r}: dim must be >= 1")
        for cond, gamma in self.natural_params.items():
            gamma = np.asarray(gamma, dtype=np.float64)
            if gamma.shape != (GAUSSIAN_ORDER, self.dim):
                raise ConfigurationError(
                    f"block {self.block!r}, condition {cond}: parameter table shape "
                    f"{gamma.shape} != ({GAUSSIAN_ORDER}, {self.dim})"
                )
            if not np.all(np.isfinite(gamma)):
                raise ValidationError(f"block {self.block!r}, condition {cond}: non-finite entry")
            if np.any(gamma[1] >= 0):
                raise ValidationError(
                    f"block {self.block!r}, condition {cond}: second-order natural parameter "
                    "must be negative (variance > 0)"
                )
            self.natural_params[cond] = gamma

    @classmethod
    def from_moments(cls, block, means, variances):
        """Build a spec from {condition: mean vector} and {condition: variance vector}."""
        params = {}
        for cond, mean in means.items():
            var = variances[cond] if isinstance(variances, dict) else variances
            mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
            var = np.broadcast_to(np.asarray(var, dtype=np.float64), mean.shape)
            params[cond] = natural_from_moments(mean, var)
        dims = {p.shape[1] for p in params.values()}
        if len(dims) != 1:
            raise ConfigurationError(f"block {block!r}: inconsistent dims across conditions")
        return cls(block=block, dim=dims.pop(), natural_params=params)

    @property
    def conditions(self):
        return sorted(self.natural_params)

    @property
    def order(self):
        return GAUSSIAN_ORDER

    def gamma(self, cond):
        try:
            return self.natural_params[cond]
        except KeyError:
            raise ConfigurationError(
                f"no natural parameters for block {self.block!r}, condition {cond}"
            ) from None

    def flat_gamma(self, cond):
        return self.gamma(cond).reshape(-1)

    def moments(self, cond):
        return moments_from_natural(self.gamma(cond))

    def sample(self, cond, n, rng):
        mean, var = self.moments(cond)
        return mean + np.sqrt(var) * rng.standard_normal((n, self.dim))


@dataclass(frozen=True)
class LatentFamilies:
    """The three block specs: s, a conditioned on y; z conditioned on d."""

    s: GaussianBlockSpec
    a: GaussianBlockSpec
    z: GaussianBlockSpec

    def __post_init__(self):
        for name in ("s", "a", "z"):
            spec = getattr(self, name)
            if spec.block != name:
                raise ConfigurationError(f"field {name!r} holds block {spec.block!r}")

    @property
    def dims(self):
        return self.s.dim, self.a.dim, self.z.dim


@dataclass
class LatentTriple:
    """Index-aligned latent samples, one row per draw."""

    s: np.ndarray
    a: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        if not (self.s.shape[0] == self.a.shape[0] == self.z.shape[0]):
            raise ValidationError("latent blocks have mismatched sample counts")

    @property
    def n(self):
        return self.s.shape[0]

    def stacked(self):
        """Concatenate blocks in (s, a, z) order: (n, q_s + q_a + q_z)."""
        return np.concatenate([self.s, self.a, self.z], axis=1)


def sample_latents(y, d, families, n, seed):
    """Draw n i.i.d. latent triples for class y and domain d."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = stream(seed, "latents", y, d)
    return LatentTriple(
        s=families.s.sample(y, n, rng),
        a=families.a.sample(y, n, rng),
        z=families.z.sample(d, n, rng),
    )


def statistics_independent(spec, cond, n=512, seed=0):
    """Numerical check that {u, u^2} are linearly independent per coordinate.

    Draws points from the block and tests that the Gram matrix of the two
    statistic functions (after centering against the constant function) is
    full rank for every coordinate.
    """
    rng = stream(seed, "gram", spec.block, cond)
    u = spec.sample(cond, n, rng)
    for i in range(spec.dim):
        design = np.stack([np.ones(n), u[:, i], u[:, i] ** 2], axis=1)
        gram = design.T @ design / n
        sv = np.linalg.svd(gram, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            return False
    return True


@dataclass
class BlockRankCheck:
    block: str
    shape: tuple
    singular_values: np.ndarray
    full_column_rank: bool


@dataclass
class RankConditionReport:
    """Full-column-rank verdicts for the stacked parameter-difference matrices."""

    checks: dict

    @property
    def satisfied(self):
        return all(c.full_column_rank for c in self.checks.values())

    def rows(self):
        out = []
        for name in ("s", "a", "z"):
            c = self.checks[name]
            out.append(
                {
                    "block": name,
                    "rows": c.shape[0],
                    "cols": c.shape[1],
                    "min_singular_value": float(c.singular_values[-1]) if c.singular_values.size else 0.0,
                    "full_column_rank": c.full_column_rank,
                }
            )
        return out


def _difference_matrix(spec, conditions):
    base = spec.flat_gamma(conditions[0])
    rows = [spec.flat_gamma(c) - base for c in conditions[1:]]
    return np.asarray(rows, dtype=np.float64).reshape(len(conditions) - 1, -1)


def _rank_check(spec, conditions):
    mat = _difference_matrix(spec, conditions)
    cols = spec.dim * spec.order
    if mat.shape[0] == 0:
        return BlockRankCheck(spec.block, (0, cols), np.zeros(0), False)
    sv = np.linalg.svd(mat, compute_uv=False)
    full = mat.shape[0] >= cols and np.linalg.matrix_rank(mat) == cols
    return BlockRankCheck(spec.block, mat.shape, sv, bool(full))


def verify_rank_conditions(families, m, K):
    """Check the diversity conditions needed for block-wise identifiability.

    Stacks the parameter differences [G_cond - G_cond1] per block, shape
    (conditions - 1, dim * order), and reports whether each has full column
    rank.  z uses the m domain conditions, s and a the K class conditions.
    """
    if m < 2 or K < 2:
        raise ValidationError("need at least 2 domains and 2 classes")
    y_conds = sorted(families.s.conditions)[:K]
    d_conds = sorted(families.z.conditions)[:m]
    if len(y_conds) < K or len(d_conds) < m:
        raise ConfigurationError("spec does not cover the requested conditions")
    checks = {
        "s": _rank_check(families.s, y_conds),
        "a": _rank_check(families.a, y_conds),
        "z": _rank_check(families.z, d_conds),
    }
    return RankConditionReport(checks=checks)
