"""Classical records kept by Alice and Bob, with sifting and error estimation on top."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..photonics import Basis, DetectionRecord, DetectionTrain, PulseTrain

# Bob's records are the detector output itself
DetectionRecords = DetectionTrain


@dataclass(frozen=True)
class SignalRecord:
    index: int
    basis: Basis
    bit: int
    intensity_label: str


@dataclass
class SignalRecords:
    """Alice's log of what she prepared (she never learns photon numbers)."""

    basis: np.ndarray
    bit: np.ndarray
    label_index: np.ndarray
    labels: tuple[str, ...]

    @classmethod
    def from_pulses(cls, pulses: PulseTrain) -> "SignalRecords":
        return cls(pulses.basis.copy(), pulses.bit.copy(), pulses.label_index.copy(), pulses.labels)

    def __len__(self) -> int:
        return len(self.basis)

    def __getitem__(self, i: int) -> SignalRecord:
        return SignalRecord(int(i), Basis(int(self.basis[i])), int(self.bit[i]),
                            self.labels[int(self.label_index[i])])


@dataclass
class SiftedKeyPair:
    alice_bits: np.ndarray
    bob_bits: np.ndarray
    positions: np.ndarray
    label_index: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not len(self.alice_bits) == len(self.bob_bits) == len(self.positions) == len(self.label_index):
            raise ValueError("sifted key arrays differ in length")

    def __len__(self) -> int:
        return len(self.positions)

    def select(self, mask: np.ndarray) -> "SiftedKeyPair":
        return SiftedKeyPair(self.alice_bits[mask], self.bob_bits[mask], self.positions[mask],
                             self.label_index[mask], self.labels)

    def label_mask(self, label: str) -> np.ndarray:
        if label not in self.labels:
            return np.zeros(len(self), dtype=bool)
        return self.label_index == self.labels.index(label)

    @classmethod
    def empty(cls, labels: tuple[str, ...] = ("signal",)) -> "SiftedKeyPair":
        z = np.zeros(0, dtype=np.uint8)
        return cls(z, z.copy(), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), labels)


def sift_mask(alice_basis: np.ndarray, bob_basis: np.ndarray, detected: np.ndarray) -> np.ndarray:
    return np.asarray(detected, dtype=bool) & (np.asarray(alice_basis) == np.asarray(bob_basis))


def sift(alice: SignalRecords, bob: DetectionTrain | list[DetectionRecord]) -> SiftedKeyPair:
    """Keep the detected positions where Alice's and Bob's bases agree, in order."""
    if isinstance(bob, list):
        bob = DetectionTrain(
            np.array([r.detected for r in bob], dtype=bool),
            np.array([int(r.basis) for r in bob], dtype=np.int8),
            np.array([r.outcome_bit for r in bob], dtype=np.uint8),
            np.array([r.double_click for r in bob], dtype=bool),
        )
    if len(alice) != len(bob):
        raise ValueError(f"record lengths differ: {len(alice)} signals vs {len(bob)} detections")
    keep = np.flatnonzero(sift_mask(alice.basis, bob.basis, bob.detected))
    return SiftedKeyPair(
        alice.bit[keep].astype(np.uint8),
        bob.outcome_bit[keep].astype(np.uint8),
        keep.astype(np.int64),
        alice.label_index[keep],
        alice.labels,
    )


def select_test_mask(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Each sifted position becomes a test event independently with probability ``p``."""
    if not 0 < p <= 1:
        raise ValueError(f"test fraction must lie in (0, 1], got {p}")
    return rng.random(n) < p


def qber_by_label(
    alice_bits: np.ndarray, bob_bits: np.ndarray, label_index: np.ndarray, labels: tuple[str, ...]
) -> dict[str, float | None]:
    """Disagreement rate per intensity label; ``None`` where no test events exist."""
    errors = np.asarray(alice_bits) != np.asarray(bob_bits)
    out: dict[str, float | None] = {}
    for i, label in enumerate(labels):
        mask = np.asarray(label_index) == i
        count = int(mask.sum())
        out[label] = float(errors[mask].mean()) if count else None
    return out


def estimate_qber(
    pair: SiftedKeyPair, p: float, rng: np.random.Generator
) -> tuple[dict[str, float | None], SiftedKeyPair]:
    """Sample test events, return per-label QBER and the untouched remainder."""
    mask = select_test_mask(len(pair), p, rng)
    test = pair.select(mask)
    qber = qber_by_label(test.alice_bits, test.bob_bits, test.label_index, pair.labels)
    return qber, pair.select(~mask)
