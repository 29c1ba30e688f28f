"""Seeded random streams.

Every stochastic consumer (splitting, bootstrap draws, feature subsets, SGD
shuffles, weight initialisation) gets its own generator derived from
``(seed, purpose, index)``.  The bit generator is numpy's Philox, a
counter-based generator, so streams are reproducible across machines and a
new consumer never shifts the draws of an existing one.
"""
import zlib

import numpy as np


def _tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Return an independent generator for ``(seed, tag, index)``."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    ss = np.random.SeedSequence([int(seed), _tag_key(tag), int(index)])
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed: int, tag: str, index: int = 0) -> int:
    """Derive a 32-bit integer seed for a nested consumer."""
    return int(stream(seed, tag, index).integers(0, 2**32 - 1))
