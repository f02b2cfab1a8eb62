"""Seed derivation and random-generator construction.

Replicate ``i`` of an experiment with master seed ``m`` draws from a generator
seeded by a 128-bit BLAKE2b hash of ``i`` keyed by ``m``. Streams are never
shared between replicates, so results do not depend on how replicates are
scheduled across threads.
"""
from __future__ import annotations

import hashlib
import secrets
from typing import List, Optional

import numpy as np

from .error_handling import LabValidationError

SEED_BITS = 128
# BLAKE2b key limit
MAX_KEY_BYTES = 64


def _key_bytes(master: int) -> bytes:
    if master < 0:
        raise LabValidationError('master seed must be non-negative', context={'master': master})
    if master.bit_length() > MAX_KEY_BYTES * 8:
        raise LabValidationError(f'master seed must fit in {MAX_KEY_BYTES * 8} bits',
                                 context={'bit_length': master.bit_length()})
    return master.to_bytes(max(1, (master.bit_length() + 7) // 8), 'big')


def replicate_seed(master: int, index: int) -> int:
    """128-bit keyed hash of the replicate index."""
    digest = hashlib.blake2b(
        index.to_bytes(8, 'big', signed=False),
        key=_key_bytes(master),
        digest_size=SEED_BITS // 8,
    ).digest()
    return int.from_bytes(digest, 'big')


def entropy_seed() -> int:
    """Fresh master seed from system entropy (printed by the CLI)."""
    return secrets.randbits(63)


def make_rng(seed: Optional[int | np.random.Generator] = None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def replicate_rng(master: int, index: int) -> np.random.Generator:
    return make_rng(replicate_seed(master, index))


def spawn(rng: np.random.Generator, count: int) -> List[np.random.Generator]:
    """Independent child generators for per-path parallel simulation."""
    return rng.spawn(count)
