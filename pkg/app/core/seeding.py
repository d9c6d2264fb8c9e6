"""Keyed child random sources.

A child generator depends only on the master seed and its key path, never on
the order in which other children were created. Monte Carlo blocks, rounds and
sweep points therefore reproduce bit for bit no matter how work is split.
"""

import hashlib

import numpy as np

Key = int | str


def _key_to_int(key: Key) -> int:
    if isinstance(key, int):
        if key < 0:
            raise ValueError(f"seed keys must be non-negative, got {key}")
        return key
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def child_seed(master_seed: int, *keys: Key) -> np.random.SeedSequence:
    """Seed sequence for the key path ``keys`` under ``master_seed``."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(_key_to_int(k) for k in keys))


def child_rng(master_seed: int, *keys: Key) -> np.random.Generator:
    """Independent generator for the key path ``keys`` under ``master_seed``."""
    return np.random.Generator(np.random.PCG64(child_seed(master_seed, *keys)))
