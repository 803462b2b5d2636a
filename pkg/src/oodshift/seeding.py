"""Deterministic 64-bit seed derivation.

Every random stream in a sweep is keyed by a tuple such as
``(master_seed, "background", split_index, trial_index, "ood_sample")``.
The tuple is folded through splitmix64::

    h = splitmix64(master_seed)
    for part in parts:
        h = splitmix64(h ^ encode(part))

where integers encode as themselves (mod 2**64) and strings as the first
8 bytes (little endian) of their BLAKE2b digest. The result keys a Philox
counter-based generator, so a stream depends only on its key and never on
execution order or worker count.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def _encode(part: int | str) -> int:
    if isinstance(part, str):
        return int.from_bytes(hashlib.blake2b(part.encode(), digest_size=8).digest(), "little")
    return int(part) & MASK64


def derive_seed(master_seed: int, *parts: int | str) -> int:
    h = splitmix64(int(master_seed) & MASK64)
    for part in parts:
        h = splitmix64(h ^ _encode(part))
    return h


def make_rng(seed: int) -> np.random.Generator:
    """Philox generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))
