"""Seed handling shared by the randomized algorithms.

A seed is a 64-bit unsigned integer; ``random.Random(seed)`` is reproducible
across platforms for integer seeds. Sub-seeds are derived with a keyed hash so
that independent components never share a stream.
"""
from __future__ import annotations

import hashlib
import random

SEED_MASK = (1 << 64) - 1

RngLike = random.Random | int | None


def as_rng(rng: RngLike) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    if rng is None:
        return random.Random()
    return random.Random(int(rng) & SEED_MASK)


def master_seed(rng: RngLike) -> int:
    """A 64-bit master seed: the integer itself, or 64 bits drawn from ``rng``."""
    if isinstance(rng, int) and not isinstance(rng, bool):
        return rng & SEED_MASK
    return as_rng(rng).getrandbits(64)


def derive_seed(master: int, *keys: int | str) -> int:
    h = hashlib.blake2b(digest_size=8, key=(master & SEED_MASK).to_bytes(8, "little"))
    for k in keys:
        h.update(str(k).encode())
        h.update(b"\x00")
    return int.from_bytes(h.digest(), "little")
