"""Toeplitz-hash privacy amplification and the final-length rule."""
from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..keyrate.formulas import binary_entropy

DEFAULT_SECURITY_MARGIN = 100


def toeplitz_seed_bits(public_seed: int, n: int, length: int) -> np.ndarray:
    rng = np.random.default_rng(public_seed)
    return rng.integers(0, 2, size=n + length - 1, dtype=np.uint8)


def toeplitz_hash(key: np.ndarray, seed_bits: np.ndarray, length: int) -> np.ndarray:
    """Multiply ``key`` by the ``length x n`` Toeplitz matrix ``T[i, j] = seed[i - j + n - 1]``."""
    n = len(key)
    if len(seed_bits) != n + length - 1:
        raise ValueError(f"Toeplitz seed must have {n + length - 1} bits, got {len(seed_bits)}")
    # row i is seed[i : i + n] reversed
    rows = sliding_window_view(seed_bits, n)[:, ::-1]
    out = np.empty(length, dtype=np.uint8)
    key64 = key.astype(np.int64)
    chunk = max(1, 2**22 // max(n, 1))
    for start in range(0, length, chunk):
        block = rows[start : start + chunk].astype(np.int64)
        out[start : start + chunk] = (block @ key64) & 1
    return out


def privacy_amplify(key, output_length: int, public_seed: int) -> np.ndarray:
    """Compress ``key`` to ``output_length`` bits with a seeded Toeplitz hash."""
    key = np.asarray(key, dtype=np.uint8)
    if output_length < 0:
        raise ValueError("output length must be >= 0")
    if output_length > len(key):
        raise ValueError(f"cannot amplify {len(key)} bits to {output_length} bits")
    if output_length == 0:
        return np.zeros(0, dtype=np.uint8)
    seed_bits = toeplitz_seed_bits(public_seed, len(key), output_length)
    return toeplitz_hash(key, seed_bits, output_length)


def final_length(
    n: int,
    qber: float,
    multiphoton_fraction: float,
    ec_bits_leaked: int,
    security_margin: int = DEFAULT_SECURITY_MARGIN,
) -> int:
    """Secure length after tagged-bit (GLLP-style) shrinking.

    ``n * (1 - Delta) * (1 - H2(e1)) - leak - margin`` with the single-photon
    error bound ``e1 = min(1/2, qber / (1 - Delta))``: all errors are charged
    to the untagged bits.
    """
    if n <= 0:
        return 0
    if not multiphoton_fraction < 1:
        return 0
    untagged = n * (1.0 - multiphoton_fraction)
    e1 = min(0.5, qber * n / untagged)
    value = untagged * (1.0 - binary_entropy(e1)) - ec_bits_leaked - security_margin
    return max(0, math.floor(value))
