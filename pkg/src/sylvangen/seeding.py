"""Seed hierarchy helpers.

Every random stream in the generator is derived from a master seed by
hashing the path that leads to it (scene index, frame index, purpose tag),
so any single frame can be regenerated in isolation.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(*parts: int | str) -> int:
    """Hash an ordered path of ints/strings into a 64-bit seed."""
    h = 0x243F6A8885A308D3
    for part in parts:
        if isinstance(part, str):
            value = int.from_bytes(part.encode("utf-8")[:32].ljust(32, b"\0"), "little")
            for shift in range(0, 256, 64):
                h = splitmix64(h ^ ((value >> shift) & _MASK64))
        else:
            h = splitmix64(h ^ (int(part) & _MASK64))
    return h


def rng_from(*parts: int | str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))
