"""Vernam one-time pad over bit arrays."""
from __future__ import annotations

import numpy as np

from .keystore import KeyStore


def as_bits(bits) -> np.ndarray:
    """Coerce a ``"0101"`` string or 0/1 sequence to a uint8 array."""
    if isinstance(bits, str):
        if set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit string: {bits!r}")
        return np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1 or np.any(arr > 1):
        raise ValueError("bits must be a flat sequence of 0/1")
    return arr


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits))


def otp_encrypt(message, key) -> np.ndarray:
    """XOR ``message`` with the first ``len(message)`` bits of ``key``.

    A key shorter than the message is refused, never stretched.
    """
    m, k = as_bits(message), as_bits(key)
    if len(k) < len(m):
        raise ValueError(f"one-time pad key too short: {len(k)} bits for a {len(m)}-bit message")
    return m ^ k[: len(m)]


otp_decrypt = otp_encrypt


def encrypt_with_store(message, store: KeyStore) -> np.ndarray:
    """Encrypt with fresh bits from ``store``; the bits are marked consumed."""
    m = as_bits(message)
    return otp_encrypt(m, store.take(len(m), "one-time pad"))


def key_reuse_leak(c1, c2) -> np.ndarray:
    """``c1 xor c2``; equals ``m1 xor m2`` when both used the same pad."""
    a, b = as_bits(c1), as_bits(c2)
    if len(a) != len(b):
        raise ValueError(f"ciphertext lengths differ: {len(a)} vs {len(b)}")
    return a ^ b
