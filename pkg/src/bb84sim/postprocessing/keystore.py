"""Shared secret key material with single-use consumption."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class KeyExhausted(Exception):
    """Raised when a consumer asks for more unconsumed key than the store holds."""


@dataclass
class KeyStore:
    """Pre-shared bits followed by QKD-grown bits, consumed strictly in order.

    ``consumed_offset`` only moves forward, and every ``take`` is logged in
    ``consumption_log`` as a half-open interval, so reuse can be audited.
    """

    pre_shared_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    grown_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    consumed_offset: int = 0
    consumption_log: list[tuple[int, int, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.pre_shared_bits = np.asarray(self.pre_shared_bits, dtype=np.uint8)
        self.grown_bits = np.asarray(self.grown_bits, dtype=np.uint8)

    @property
    def total_bits(self) -> int:
        return len(self.pre_shared_bits) + len(self.grown_bits)

    @property
    def available(self) -> int:
        return self.total_bits - self.consumed_offset

    def take(self, n: int, purpose: str = "") -> np.ndarray:
        if n < 0:
            raise ValueError("cannot take a negative number of bits")
        if n > self.available:
            raise KeyExhausted(f"need {n} key bits for {purpose or 'consumer'}, {self.available} left")
        start = self.consumed_offset
        bits = np.concatenate([self.pre_shared_bits, self.grown_bits])[start : start + n]
        self.consumed_offset += n
        self.consumption_log.append((start, start + n, purpose))
        return bits.copy()

    def grow(self, bits) -> None:
        self.grown_bits = np.concatenate([self.grown_bits, np.asarray(bits, dtype=np.uint8)])

    def copy(self) -> "KeyStore":
        return KeyStore(
            self.pre_shared_bits.copy(),
            self.grown_bits.copy(),
            self.consumed_offset,
            list(self.consumption_log),
        )

    def reused_bits(self) -> int:
        """Number of bit indices consumed more than once (0 for a healthy store)."""
        counts = np.zeros(self.total_bits + 1, dtype=np.int64)
        for start, stop, _ in self.consumption_log:
            counts[start:stop] += 1
        return int(np.sum(counts > 1))

    @property
    def consumed_bits(self) -> int:
        return sum(stop - start for start, stop, _ in self.consumption_log)
