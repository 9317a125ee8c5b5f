"""Deterministic seed derivation for independent random streams."""

from __future__ import annotations

import zlib

import numpy as np


def spawn_seed(base_seed: int, *tags) -> int:
    """Derive a child seed from a base seed and a tuple of tags.

    Stable across runs and platforms: tags are hashed with crc32, so the same
    (base, tags) always yields the same child seed.
    """
    entropy = [int(base_seed) & 0xFFFFFFFF]
    for tag in tags:
        entropy.append(zlib.crc32(str(tag).encode("utf-8")))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def spawn_rng(base_seed: int, *tags) -> np.random.Generator:
    """Generator seeded via spawn_seed(base_seed, *tags)."""
    return np.random.default_rng(spawn_seed(base_seed, *tags))
