"""Deterministic seed derivation.

Every stochastic step draws from a generator keyed by the base seed plus a
tuple of labels (dataset, generator, fold, ...), so adding or reordering
tasks never shifts the stream seen by another task.
"""

from __future__ import annotations

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MASK:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def derive_seed(seed: int, *keys: object) -> int:
    """Hash ``(seed, *keys)`` into a fresh 64-bit seed.

    Keys are rendered with ``repr`` so ``1`` and ``"1"`` give different seeds.
    """
    payload = "\x1f".join([str(check_seed(seed)), *(repr(k) for k in keys)])
    digest = hashlib.blake2b(payload.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int, *keys: object) -> np.random.Generator:
    """Return a PCG64 generator for the keyed stream."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *keys)))
