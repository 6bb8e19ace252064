"""Deterministic randomness plumbing.

Two primitives keep every run reproducible from a single integer seed:

``splitmix64_uniform``
    Counter-based splitmix64 stream mapped to floats in [-1, 1).  This is
    the documented rule for the synthetic oracle's projection matrix, so an
    implementation in any language can reproduce identical features:

        x_i   = (seed + (i+1) * 0x9E3779B97F4A7C15) mod 2^64
        z     = (x_i ^ (x_i >> 30)) * 0xBF58476D1CE4E5B9   mod 2^64
        z     = (z   ^ (z   >> 27)) * 0x94D049BB133111EB   mod 2^64
        out_i = z ^ (z >> 31)
        f_i   = ((out_i >> 11) * 2^-53) * 2 - 1

    filled row-major into the target matrix.  Negative seeds fold to their
    two's-complement 64-bit value.

``derive_seed``
    Sub-stream derivation: sha256 over the '\\x1f'-joined decimal/UTF-8
    rendering of the parts, top 8 bytes big-endian, shifted right once to a
    63-bit non-negative integer.  Per-pair batch streams use
    derive_seed(seed, left, right).
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64_words(seed: int, n: int) -> np.ndarray:
    """Return the first `n` 64-bit words of the splitmix64 stream for `seed`."""
    if n < 0:
        raise ValueError("n must be non-negative")
    s = seed & 0xFFFFFFFFFFFFFFFF
    with np.errstate(over="ignore"):
        idx = np.arange(1, n + 1, dtype=np.uint64)
        x = (np.uint64(s) + idx * np.uint64(_GAMMA)) & _MASK64
        z = ((x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)) & _MASK64
        z = ((z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)) & _MASK64
        return z ^ (z >> np.uint64(31))


def splitmix64_uniform(seed: int, n: int) -> np.ndarray:
    """First `n` floats of the seed's stream, uniform in [-1, 1)."""
    words = splitmix64_words(seed, n)
    u01 = (words >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    return u01 * 2.0 - 1.0


def derive_seed(*parts) -> int:
    """Derive a 63-bit sub-stream seed from arbitrary string/int parts."""
    payload = "\x1f".join(str(p) for p in parts).encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") >> 1
