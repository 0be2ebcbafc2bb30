"""Information-theoretic message authentication.

A tag is a polynomial-evaluation hash over GF(2**b), masked with a one-time
pad. For a message split into ``d`` field blocks (plus one length block), two
distinct messages collide for at most ``d`` evaluation points, so a forger
succeeds with probability at most ``d / 2**b``. Choosing
``b = t + ceil(log2(d))`` holds that at ``2**-t`` and makes the key cost
``2b`` grow only logarithmically with the message length.

Several messages may share one hash point as long as every tag gets a fresh
pad (:class:`HashKey`); each extra tag then costs ``b`` bits instead of ``2b``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gf2 import irreducible_polynomial, mulmod
from .keystore import KeyStore

DEFAULT_SECURITY_BITS = 64


def field_bits(message_bits: int, security_bits: int = DEFAULT_SECURITY_BITS) -> int:
    """Field degree ``b`` needed for an ``message_bits``-bit message."""
    blocks = math.ceil(message_bits / security_bits) + 1
    return security_bits + max(0, math.ceil(math.log2(blocks)))


def key_bits_needed(message_bits: int, security_bits: int = DEFAULT_SECURITY_BITS) -> int:
    return 2 * field_bits(message_bits, security_bits)


def _bits_to_int(bits: np.ndarray) -> int:
    return int("".join("1" if b else "0" for b in bits) or "0", 2)


def poly_hash(message: bytes, point: int, b: int) -> int:
    """Horner evaluation of the message blocks (and its bit length) at ``point``."""
    modulus = irreducible_polynomial(b)
    bits = np.unpackbits(np.frombuffer(message, dtype=np.uint8))
    pad = (-len(bits)) % b
    bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)]).reshape(-1, b)
    h = 0
    for row in bits:
        h = mulmod(h ^ _bits_to_int(row), point, modulus)
    length_block = (8 * len(message)) % (1 << b)
    return mulmod(h ^ length_block, point, modulus)


@dataclass(frozen=True)
class HashKey:
    """Secret evaluation point in GF(2**b), reusable across tags with fresh pads."""

    point: int
    b: int

    @classmethod
    def draw(cls, store: KeyStore, b: int) -> "HashKey":
        return cls(_bits_to_int(store.take(b, "authentication hash key")), b)


def _tag(message: bytes, store: KeyStore, security_bits: int, key: HashKey | None) -> tuple[int, int]:
    b = field_bits(8 * len(message), security_bits)
    used = 0
    if key is None:
        key = HashKey.draw(store, b)
        used = b
    elif key.b < b:
        raise ValueError(f"hash key has {key.b}-bit field, message needs {b}")
    pad = _bits_to_int(store.take(key.b, "authentication pad"))
    return poly_hash(message, key.point, key.b) ^ pad, used + key.b


def authenticate(
    message: bytes, store: KeyStore, security_bits: int = DEFAULT_SECURITY_BITS,
    key: HashKey | None = None,
) -> tuple[int, int]:
    """Tag ``message`` with fresh key bits from ``store``.

    Returns ``(tag, bits_consumed)``. Without ``key`` a new hash point is
    drawn as well as the pad. Raises :class:`KeyExhausted` if the store
    cannot cover the key; the caller must stop rather than reuse bits.
    """
    return _tag(message, store, security_bits, key)


def verify(
    message: bytes, tag: int, store: KeyStore, security_bits: int = DEFAULT_SECURITY_BITS,
    key: HashKey | None = None,
) -> bool:
    """Peer-side check; consumes the same key bits from the peer's copy of the store."""
    expected, _ = _tag(message, store, security_bits, key)
    return expected == tag
