"""Seeding rules.

All randomness uses numpy's ``PCG64`` bit generator, seeded through
``numpy.random.SeedSequence`` from a non-negative integer. Sub-seeds for a
named purpose are the first 8 bytes (little endian) of
``blake2b(f"{seed}:{purpose}", digest_size=8)``, so they do not depend on
Python's per-process string hashing.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, purpose: str) -> int:
    digest = hashlib.blake2b(f"{int(seed)}:{purpose}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
