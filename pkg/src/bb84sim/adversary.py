"""Eavesdropper policies acting on the pulse stream between Alice and Bob.

Eve sits right after Alice's source. She may replace the fiber by a lossless
link (forwarded pulses get ``bypass_fiber``) but cannot touch Bob's detector
efficiency or dark counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .keyrate.formulas import p_multi
from .photonics import (
    ChannelConfig,
    DetectorConfig,
    PulseTrain,
    SourceConfig,
    expected_gain,
    poisson_pmf,
    total_transmittance,
)

VARIANTS = ("passive", "intercept-resend", "pns", "beam-splitter")

UNTOUCHED, MEASURED, STORED, BLOCKED = 0, 1, 2, 3


@dataclass(frozen=True)
class AttackStrategy:
    variant: str = "passive"
    fraction: float = 1.0
    target_gain: float | None = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown attack {self.variant!r}; expected one of {VARIANTS}")
        if not 0 <= self.fraction <= 1:
            raise ValueError("intercept fraction must lie in [0, 1]")
        if self.target_gain is not None and not 0 < self.target_gain <= 1:
            raise ValueError("target gain must lie in (0, 1]")

    @classmethod
    def passive(cls) -> "AttackStrategy":
        return cls("passive")

    @classmethod
    def intercept_resend(cls, fraction: float = 1.0) -> "AttackStrategy":
        return cls("intercept-resend", fraction=fraction)

    @classmethod
    def pns(cls, target_gain: float | None = None) -> "AttackStrategy":
        return cls("pns", target_gain=target_gain)

    @classmethod
    def beam_splitter(cls) -> "AttackStrategy":
        return cls("beam-splitter")

    @property
    def is_passive(self) -> bool:
        return self.variant == "passive"


@dataclass
class EveRecord:
    """What Eve did to each pulse and what she holds afterwards.

    ``note`` codes: 0 untouched, 1 measured, 2 stored photon(s), 3 blocked.
    """

    note: np.ndarray
    eve_basis: np.ndarray
    eve_bit: np.ndarray
    stored_photons: np.ndarray
    plan: "PnsPlan | None" = None

    @classmethod
    def empty(cls, n: int) -> "EveRecord":
        return cls(
            np.zeros(n, dtype=np.int8),
            np.full(n, -1, dtype=np.int8),
            np.zeros(n, dtype=np.uint8),
            np.zeros(n, dtype=np.int64),
        )

    @property
    def is_empty(self) -> bool:
        return not np.any(self.note)

    def knows(self, positions: np.ndarray, alice_basis: np.ndarray) -> np.ndarray:
        """Per sifted position: does Eve hold Alice's bit once bases are public?"""
        positions = np.asarray(positions, dtype=np.int64)
        note = self.note[positions]
        stored = (note == STORED) & (self.stored_photons[positions] > 0)
        measured = (note == MEASURED) & (self.eve_basis[positions] == alice_basis[positions])
        return stored | measured


@dataclass(frozen=True)
class PnsPlan:
    block_single: float
    block_multi: float
    excess_gain: bool


def _pns_terms(mu: float, det_eff: float) -> tuple[float, float]:
    """(single-photon, multi-photon) click contributions when Eve forwards losslessly.

    Multi-photon pulses lose one photon to Eve and the remaining ``n - 1``
    face only the detector efficiency.
    """
    single = poisson_pmf(mu, 1) * det_eff
    x = 1.0 - det_eff
    # sum_{n>=2} P_n x^(n-1) from the Poisson generating function
    tail = 0.0 if x == 0 else (math.exp(-mu * (1.0 - x)) - math.exp(-mu) - mu * math.exp(-mu) * x) / x
    return single, p_multi(mu) - tail


def pns_plan(
    mu: float, eta: float, dark_count_prob: float, detector_efficiency: float,
    target_gain: float | None = None,
) -> PnsPlan:
    """Blocking probabilities that make Bob's gain equal ``target_gain``.

    The gain Bob sees under the attack is linear in the blocking
    probabilities, so they follow in closed form. When the forwarded
    multi-photon pulses alone already exceed the target, all single photons
    are blocked, a share of multi-photon pulses is dropped too, and
    ``excess_gain`` is set.
    """
    if not mu > 0:
        raise ValueError(f"PNS planning needs mu > 0, got {mu}")
    if target_gain is None:
        target_gain = expected_gain(mu, eta, dark_count_prob)
    needed = max(0.0, (target_gain - dark_count_prob) / (1.0 - dark_count_prob))
    single, multi = _pns_terms(mu, detector_efficiency)
    if multi > needed:
        return PnsPlan(1.0, 1.0 - needed / multi, True)
    if single == 0:
        return PnsPlan(1.0, 0.0, False)
    block = 1.0 - (needed - multi) / single
    return PnsPlan(min(1.0, max(0.0, block)), 0.0, False)


def pns_blocking_probability(
    mu: float, eta: float, dark_count_prob: float, detector_efficiency: float,
    target_gain: float | None = None,
) -> tuple[float, bool]:
    """Single-photon blocking probability ``b`` and the excess-gain flag."""
    plan = pns_plan(mu, eta, dark_count_prob, detector_efficiency, target_gain)
    return plan.block_single, plan.excess_gain


def pns_gain(mu: float, plan: PnsPlan, dark_count_prob: float, detector_efficiency: float) -> float:
    """Bob's expected gain under a PNS plan (direct evaluation, for checking plans)."""
    single, multi = _pns_terms(mu, detector_efficiency)
    signal = (1.0 - plan.block_single) * single + (1.0 - plan.block_multi) * multi
    return 1.0 - (1.0 - dark_count_prob) * (1.0 - signal)


def apply_attack(
    strategy: AttackStrategy,
    pulses: PulseTrain,
    channel: ChannelConfig,
    detector: DetectorConfig,
    rng: np.random.Generator,
    source: SourceConfig | None = None,
) -> tuple[PulseTrain, EveRecord]:
    """Return the stream that reaches Bob's lab and Eve's record.

    ``source`` tells the PNS attacker the signal intensity; without it she
    uses the empirical mean photon number of the stream.
    """
    n = len(pulses)
    record = EveRecord.empty(n)
    out = pulses.copy()
    if strategy.variant == "passive" or n == 0:
        return out, record

    if strategy.variant == "intercept-resend":
        hit = (rng.random(n) < strategy.fraction) & (pulses.photons > 0)
        eve_basis = rng.integers(0, 2, size=n, dtype=np.int8)
        guess = rng.integers(0, 2, size=n, dtype=np.uint8)
        outcome = np.where(eve_basis == pulses.basis, pulses.bit, guess).astype(np.uint8)
        record.note[hit] = MEASURED
        record.eve_basis[hit] = eve_basis[hit]
        record.eve_bit[hit] = outcome[hit]
        out.photons[hit] = 1
        out.basis[hit] = eve_basis[hit]
        out.bit[hit] = outcome[hit]
        return out, record

    if strategy.variant == "beam-splitter":
        taken = rng.binomial(pulses.photons, 1.0 - channel.transmittance)
        record.stored_photons[:] = taken
        record.note[taken > 0] = STORED
        out.photons = pulses.photons - taken
        out.bypass_fiber[:] = True
        return out, record

    # photon-number splitting
    mu = source.signal_mu if source is not None else float(np.mean(pulses.photons))
    if mu <= 0:
        return out, record
    plan = pns_plan(
        mu, total_transmittance(channel, detector), detector.dark_count_prob,
        detector.efficiency, strategy.target_gain,
    )
    record.plan = plan
    u = rng.random(n)
    singles = pulses.photons == 1
    multis = pulses.photons >= 2
    block = (singles & (u < plan.block_single)) | (multis & (u < plan.block_multi))
    split = multis & ~block
    record.note[block] = BLOCKED
    record.note[split] = STORED
    record.stored_photons[split] = 1
    out.photons = np.where(block, 0, np.where(split, pulses.photons - 1, pulses.photons))
    out.bypass_fiber[:] = True
    return out, record


def eve_information(record: EveRecord, transcript) -> float:
    """Fraction of sifted positions whose bit Eve holds deterministically.

    ``transcript`` is a :class:`~bb84sim.protocol.SessionTranscript` (or any
    object with ``sifted.positions`` and ``signals.basis``).
    """
    positions = transcript.sifted.positions
    if len(positions) == 0:
        return 0.0
    return float(np.mean(record.knows(positions, transcript.signals.basis)))
