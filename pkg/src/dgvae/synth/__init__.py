"""Synthetic generative benchmark: exponential-family latents, bijective mixing, recovery scoring."""

from .dataset import (
    GenerativeSpec,
    SynthConfig,
    SyntheticDataset,
    build_generative_spec,
    generate_dataset,
    generate_from_spec,
    load_dataset,
    manifest_text,
    save_dataset,
    split_indices,
)
from .expfam import (
    GaussianBlockSpec,
    LatentFamilies,
    LatentTriple,
    RankConditionReport,
    moments_from_natural,
    natural_from_moments,
    sample_latents,
    statistics_independent,
    sufficient_statistics,
    verify_rank_conditions,
)
from .mixing import InvertibleStack, MixingFunctions, mix_observation
from .recovery import AffineFit, DisentanglementReport, affine_fit_score, score_recovery

__all__ = [
    "AffineFit",
    "DisentanglementReport",
    "GaussianBlockSpec",
    "GenerativeSpec",
    "InvertibleStack",
    "LatentFamilies",
    "LatentTriple",
    "MixingFunctions",
    "RankConditionReport",
    "SynthConfig",
    "SyntheticDataset",
    "affine_fit_score",
    "build_generative_spec",
    "generate_dataset",
    "generate_from_spec",
    "load_dataset",
    "manifest_text",
    "mix_observation",
    "moments_from_natural",
    "natural_from_moments",
    "sample_latents",
    "save_dataset",
    "score_recovery",
    "split_indices",
    "statistics_independent",
    "sufficient_statistics",
    "verify_rank_conditions",
]
