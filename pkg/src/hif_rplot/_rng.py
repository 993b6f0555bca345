"""Keyed counter-based random streams.

Every random draw in the package comes from a Philox4x64-10 generator
(numpy's ``Philox`` bit generator) whose 128-bit key is
``(seed, stream_id)``.  Seeds for sub-entities (events, trees, classes) are
derived with SplitMix64 chaining::

    h = splitmix64(master_seed)
    for p in path: h = splitmix64(h ^ p)

so any record or tree can be regenerated from its own derived seed without
replaying the draws of its siblings.
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


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorised :func:`splitmix64` over a uint64 array (wrapping arithmetic)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + np.uint64(0x9E3779B97F4A7C15)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def derive_seed(seed: int, *path: int) -> int:
    h = splitmix64(int(seed) & MASK64)
    for p in path:
        h = splitmix64(h ^ (int(p) & MASK64))
    return h


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    key = np.array([int(seed) & MASK64, int(stream_id) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def name_key(name: str) -> int:
    """Stable 64-bit key for a string (BLAKE2b, first 8 bytes little-endian)."""
    return int.from_bytes(hashlib.blake2b(name.encode("utf-8"), digest_size=8).digest(), "little")
