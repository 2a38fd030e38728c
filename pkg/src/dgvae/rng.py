"""Deterministic random streams keyed by (seed, call tag)."""

import zlib

import numpy as np


def stream(seed, *tags):
    """Return a numpy Generator owned by this (seed, tags) combination.

    Every sampling call site passes its own tag so concurrent callers never
    share a stream and re-running with the same seed is bit-reproducible.
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for tag in tags:
        entropy.append(zlib.crc32(str(tag).encode("utf-8")))
    return np.random.default_rng(entropy)
