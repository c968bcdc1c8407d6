"""Seed derivation and random streams.

Every random draw in the package comes from a Philox4x64-10 counter-based
generator (``numpy.random.Philox``) keyed by an unsigned 64-bit seed.  Child
seeds are derived from a master seed by hashing ``"<master>/<stage>/<index>"``
with BLAKE2b (8-byte digest, little-endian), so any language with BLAKE2b and
Philox can reproduce the streams.
"""
from __future__ import annotations

import hashlib

import numpy as np

RNG_NAME = "philox4x64-10/numpy-standard-normal/v1"
U64_MAX = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= U64_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def derive_seed(master: int, stage: str, index: int = 0) -> int:
    """Child seed for ``(stage, index)`` under ``master``."""
    key = f"{check_seed(master)}/{stage}/{int(index)}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=check_seed(seed)))
