"""Weak-coherent-pulse source, lossy fiber and threshold detector models.

Pulses are generated and detected in bulk as :class:`PulseTrain` arrays;
the single-pulse :class:`Pulse` / :func:`detect` API is a thin view over the
same vectorized code path so both routes draw from the random stream in the
same way.

Detector model
--------------
Every photon reaching Bob survives independently with probability
``eta`` (fiber transmittance times detector efficiency, or detector
efficiency alone for photons forwarded over a lossless link). Surviving
photons in the matching basis all land in the detector of the pulse bit,
flipped together with probability ``e_d``; photons in the conjugate basis
pick a detector uniformly and independently. An intrinsic dark count fires
with probability ``Y0`` per pulse in a uniformly chosen detector. A pulse is
detected when at least one detector clicks, which gives the click
probability ``1 - (1 - Y0)(1 - eta)**n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, Mapping

import numpy as np


class Basis(IntEnum):
    RECTILINEAR = 0
    DIAGONAL = 1


# (basis, bit) -> polarization angle in degrees; H and 45 encode 0, V and 135 encode 1
POLARIZATION_DEGREES = {
    (Basis.RECTILINEAR, 0): 0,
    (Basis.RECTILINEAR, 1): 90,
    (Basis.DIAGONAL, 0): 45,
    (Basis.DIAGONAL, 1): 135,
}
_POLARIZATION_TO_STATE = {deg: state for state, deg in POLARIZATION_DEGREES.items()}


def bit_of_polarization(degrees: int) -> int:
    """Key bit carried by a polarization angle (H/45 -> 0, V/135 -> 1)."""
    try:
        return _POLARIZATION_TO_STATE[degrees][1]
    except KeyError:
        raise ValueError(f"not a BB84 polarization: {degrees}") from None


def basis_of_polarization(degrees: int) -> Basis:
    try:
        return _POLARIZATION_TO_STATE[degrees][0]
    except KeyError:
        raise ValueError(f"not a BB84 polarization: {degrees}") from None


DOUBLE_CLICK_POLICIES = ("random-bit", "discard")


@dataclass(frozen=True)
class SourceConfig:
    """Intensity settings of Alice's phase-randomized laser.

    ``intensities`` maps an intensity label to its mean photon number;
    ``selection_probabilities`` gives the probability that a pulse is
    prepared with that label. One label must be ``"signal"``.
    """

    intensities: Mapping[str, float] = field(default_factory=lambda: {"signal": 0.1})
    selection_probabilities: Mapping[str, float] = field(
        default_factory=lambda: {"signal": 1.0}
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "intensities", dict(self.intensities))
        object.__setattr__(self, "selection_probabilities", dict(self.selection_probabilities))
        if "signal" not in self.intensities:
            raise ValueError("source needs an intensity labeled 'signal'")
        if set(self.intensities) != set(self.selection_probabilities):
            raise ValueError("intensities and selection_probabilities must share labels")
        for label, mu in self.intensities.items():
            if not mu >= 0:
                raise ValueError(f"intensity {label!r} must be >= 0, got {mu}")
        probs = self.selection_probabilities.values()
        if any(p < 0 for p in probs):
            raise ValueError("selection probabilities must be non-negative")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"selection probabilities sum to {sum(probs)}, not 1")

    @property
    def labels(self) -> tuple[str, ...]:
        # signal first, then the rest in sorted order, so label indices are stable
        return ("signal",) + tuple(sorted(k for k in self.intensities if k != "signal"))

    @property
    def signal_mu(self) -> float:
        return self.intensities["signal"]

    @classmethod
    def single(cls, mu: float) -> "SourceConfig":
        return cls({"signal": mu}, {"signal": 1.0})


@dataclass(frozen=True)
class ChannelConfig:
    distance_km: float = 20.0
    attenuation_db_per_km: float = 0.2
    misalignment_prob: float = 0.01

    def __post_init__(self) -> None:
        if not self.distance_km >= 0:
            raise ValueError("distance_km must be >= 0")
        if not self.attenuation_db_per_km >= 0:
            raise ValueError("attenuation_db_per_km must be >= 0")
        if not 0 <= self.misalignment_prob <= 0.5:
            raise ValueError("misalignment_prob must lie in [0, 0.5]")
        if self.transmittance <= 0:
            raise ValueError("channel transmittance underflows to 0")

    @property
    def transmittance(self) -> float:
        """Fiber-only transmittance ``10**(-alpha * L / 10)``."""
        return 10.0 ** (-self.attenuation_db_per_km * self.distance_km / 10.0)


@dataclass(frozen=True)
class DetectorConfig:
    efficiency: float = 0.1
    dark_count_prob: float = 1e-5
    double_click_policy: str = "random-bit"

    def __post_init__(self) -> None:
        if not 0 < self.efficiency <= 1:
            raise ValueError("detector efficiency must lie in (0, 1]")
        if not 0 <= self.dark_count_prob < 1:
            raise ValueError("dark_count_prob must lie in [0, 1)")
        if self.double_click_policy not in DOUBLE_CLICK_POLICIES:
            raise ValueError(f"double_click_policy must be one of {DOUBLE_CLICK_POLICIES}")


@dataclass(frozen=True)
class Pulse:
    photon_count: int
    basis: Basis
    bit: int
    intensity_label: str
    index: int


@dataclass(frozen=True)
class DetectionRecord:
    index: int
    detected: bool
    basis: Basis
    outcome_bit: int
    double_click: bool


@dataclass
class PulseTrain:
    """Struct-of-arrays pulse stream.

    ``bypass_fiber`` marks pulses that reach Bob's lab over a lossless link
    (set by eavesdroppers that replace the fiber); only the detector
    efficiency thins those photons.
    """

    photons: np.ndarray
    basis: np.ndarray
    bit: np.ndarray
    label_index: np.ndarray
    labels: tuple[str, ...]
    bypass_fiber: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = len(self.photons)
        if self.bypass_fiber is None:
            self.bypass_fiber = np.zeros(n, dtype=bool)
        for name in ("basis", "bit", "label_index", "bypass_fiber"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"PulseTrain field {name} has the wrong length")

    def __len__(self) -> int:
        return len(self.photons)

    def __getitem__(self, i: int) -> Pulse:
        return Pulse(
            photon_count=int(self.photons[i]),
            basis=Basis(int(self.basis[i])),
            bit=int(self.bit[i]),
            intensity_label=self.labels[int(self.label_index[i])],
            index=int(i),
        )

    def __iter__(self) -> Iterator[Pulse]:
        for i in range(len(self)):
            yield self[i]

    def copy(self) -> "PulseTrain":
        return PulseTrain(
            self.photons.copy(),
            self.basis.copy(),
            self.bit.copy(),
            self.label_index.copy(),
            self.labels,
            self.bypass_fiber.copy(),
        )

    @classmethod
    def from_pulses(cls, pulses: list[Pulse], labels: tuple[str, ...] | None = None) -> "PulseTrain":
        if labels is None:
            labels = tuple(dict.fromkeys(p.intensity_label for p in pulses)) or ("signal",)
        lookup = {lab: i for i, lab in enumerate(labels)}
        return cls(
            np.array([p.photon_count for p in pulses], dtype=np.int64),
            np.array([int(p.basis) for p in pulses], dtype=np.int8),
            np.array([p.bit for p in pulses], dtype=np.uint8),
            np.array([lookup[p.intensity_label] for p in pulses], dtype=np.int64),
            labels,
        )


@dataclass
class DetectionTrain:
    detected: np.ndarray
    basis: np.ndarray
    outcome_bit: np.ndarray
    double_click: np.ndarray

    def __len__(self) -> int:
        return len(self.detected)

    def __getitem__(self, i: int) -> DetectionRecord:
        return DetectionRecord(
            index=int(i),
            detected=bool(self.detected[i]),
            basis=Basis(int(self.basis[i])),
            outcome_bit=int(self.outcome_bit[i]),
            double_click=bool(self.double_click[i]),
        )


def poisson_pmf(mu: float, n: int) -> float:
    """Probability that a pulse of mean photon number ``mu`` holds ``n`` photons."""
    if mu < 0 or n < 0 or int(n) != n:
        raise ValueError(f"poisson_pmf needs mu >= 0 and integer n >= 0, got mu={mu}, n={n}")
    n = int(n)
    if mu == 0:
        return 1.0 if n == 0 else 0.0
    # log space keeps large n finite
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1))


def sample_photon_number(mu: float, rng: np.random.Generator, size: int | None = None):
    if mu < 0:
        raise ValueError(f"mean photon number must be >= 0, got {mu}")
    return rng.poisson(mu, size=size)


def total_transmittance(channel: ChannelConfig, detector: DetectorConfig) -> float:
    return detector.efficiency * channel.transmittance


def emit(source: SourceConfig, n_pulses: int, rng: np.random.Generator) -> PulseTrain:
    """Alice's pulse train with a random intensity label and polarization per pulse."""
    labels = source.labels
    probs = np.array([source.selection_probabilities[lab] for lab in labels])
    mus = np.array([source.intensities[lab] for lab in labels])
    label_index = rng.choice(len(labels), size=n_pulses, p=probs)
    basis = rng.integers(0, 2, size=n_pulses, dtype=np.int8)
    bit = rng.integers(0, 2, size=n_pulses, dtype=np.uint8)
    photons = rng.poisson(mus[label_index]).astype(np.int64)
    return PulseTrain(photons, basis, bit, label_index.astype(np.int64), labels)


def detect_train(
    pulses: PulseTrain,
    bob_basis: np.ndarray,
    channel: ChannelConfig,
    detector: DetectorConfig,
    rng: np.random.Generator,
) -> DetectionTrain:
    """Bob's measurement of a whole pulse train; see the module docstring for the model."""
    n = len(pulses)
    bob_basis = np.asarray(bob_basis, dtype=np.int8)
    if len(bob_basis) != n:
        raise ValueError("bob_basis length differs from the pulse train")

    eta_fiber = np.where(pulses.bypass_fiber, 1.0, channel.transmittance)
    arrived = rng.binomial(pulses.photons, eta_fiber * detector.efficiency)

    matched = pulses.basis == bob_basis
    misaligned = rng.random(n) < channel.misalignment_prob
    matched_bit = pulses.bit.astype(np.int64) ^ misaligned
    # conjugate basis: each photon independently picks detector 1 with probability 1/2
    to_one = rng.binomial(arrived, 0.5)

    has_signal = arrived > 0
    click1 = np.where(matched, has_signal & (matched_bit == 1), to_one > 0)
    click0 = np.where(matched, has_signal & (matched_bit == 0), to_one < arrived)

    dark = rng.random(n) < detector.dark_count_prob
    dark_detector = rng.integers(0, 2, size=n)
    click0 |= dark & (dark_detector == 0)
    click1 |= dark & (dark_detector == 1)

    detected = click0 | click1
    double = click0 & click1
    tie_break = rng.integers(0, 2, size=n)
    outcome = np.where(double, tie_break, click1.astype(np.int64)).astype(np.uint8)
    if detector.double_click_policy == "discard":
        detected = detected & ~double
    outcome[~detected] = 0
    return DetectionTrain(detected, bob_basis.copy(), outcome, double)


def detect(
    pulse: Pulse,
    bob_basis: Basis,
    channel: ChannelConfig,
    detector: DetectorConfig,
    rng: np.random.Generator,
) -> DetectionRecord:
    train = PulseTrain.from_pulses([pulse], labels=(pulse.intensity_label,))
    rec = detect_train(train, np.array([int(bob_basis)]), channel, detector, rng)[0]
    return DetectionRecord(pulse.index, rec.detected, rec.basis, rec.outcome_bit, rec.double_click)


def expected_gain(mu: float, eta: float, dark_count_prob: float) -> float:
    """Benign per-pulse detection probability ``1 - (1 - Y0) exp(-eta mu)``."""
    return 1.0 - (1.0 - dark_count_prob) * math.exp(-eta * mu)


def expected_qber(mu: float, eta: float, dark_count_prob: float, misalignment: float) -> float:
    """Matched-basis error rate ``(Y0/2 + e_d (1 - exp(-eta mu))) / Q``; NaN when Q = 0."""
    gain = expected_gain(mu, eta, dark_count_prob)
    if gain == 0:
        return math.nan
    return (0.5 * dark_count_prob + misalignment * (1.0 - math.exp(-eta * mu))) / gain
