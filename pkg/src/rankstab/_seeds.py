"""Deterministic 64-bit seed derivation.

Every stochastic step in the library receives an explicit integer seed.
Seeds are derived from a single master seed by folding a SplitMix64 mix
over a stable FNV-1a hash of each scope label, so that distinct label
tuples give independent streams and the same tuple always gives the same
seed, on any platform.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def splitmix64(value: int) -> int:
    """One SplitMix64 step: advance by the golden gamma and finalize."""
    value = (value + GOLDEN) & MASK64
    z = value
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


def derive_seed(master: int, labels=()) -> int:
    """Derive a 64-bit seed from a master seed and an ordered label tuple.

    Labels may be integers or strings; the two kinds never collide
    (``1`` and ``"1"`` hash differently) and label order matters.
    """
    state = splitmix64(master & MASK64)
    for label in labels:
        if isinstance(label, str):
            text = "s:" + label
        else:
            text = "i:" + str(int(label))
        state = splitmix64(state ^ fnv1a64(text.encode("utf-8")))
    return state
