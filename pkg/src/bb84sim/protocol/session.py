"""End-to-end BB84 sessions between two simulated parties.

The quantum phase, from emission through detection, is simulated in bulk. The
public discussion runs as two coroutines, :func:`alice_party` and
:func:`bob_party`, that share nothing but a :mod:`bb84sim.channel` duplex
and identical copies of the pre-shared key.

Both transcripts are authenticated once, at the end, before either side
accepts a key: Alice tags everything she sent, Bob checks it against what he
received and answers with a tag over his own messages. No key exists before
that point, so deferring the tags is safe and costs two tags per session.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Generator

import numpy as np

from ..adversary import AttackStrategy, EveRecord, apply_attack, eve_information
from ..channel import Endpoint, duplex, run_parties, transcript_bytes
from ..keyrate.decoy import DecoyObservations, IntensityObservation, YieldBounds, decoy_bounds
from ..keyrate.formulas import RateModelParams, binary_entropy, model_gain_qber, p_multi
from ..photonics import (
    ChannelConfig,
    DetectionTrain,
    DetectorConfig,
    SourceConfig,
    detect_train,
    emit,
    total_transmittance,
)
from ..postprocessing import (
    KeyExhausted,
    HashKey,
    KeyStore,
    LeakageLedger,
    authenticate,
    field_bits,
    final_length,
    privacy_amplify,
    verify,
)
from ..postprocessing.cascade import VERIFY_HASH_BITS, cascade_alice, cascade_bob
from .records import SiftedKeyPair, SignalRecords, qber_by_label, select_test_mask


@dataclass(frozen=True)
class SessionParams:
    n_pulses: int = 1_000_000
    test_fraction: float = 0.5
    qber_abort_threshold: float = 0.11
    abort_margin: float = 0.0
    source: SourceConfig = field(default_factory=SourceConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    seed: int = 0
    preshared_key_bits: int = 1024
    security_margin: int = 100
    ec_passes: int = 6
    auth_security_bits: int = 64

    def __post_init__(self) -> None:
        if self.n_pulses < 0 or int(self.n_pulses) != self.n_pulses:
            raise ValueError("n_pulses must be a non-negative integer")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")
        if not 0 < self.qber_abort_threshold < 0.5:
            raise ValueError("qber_abort_threshold must lie in (0, 0.5)")
        if self.abort_margin < 0:
            raise ValueError("abort_margin must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.preshared_key_bits < 0 or self.security_margin < 0 or self.ec_passes < 1:
            raise ValueError("preshared_key_bits, security_margin must be >= 0 and ec_passes >= 1")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class PartyResult:
    outcome: str
    reason: str | None
    final_key: np.ndarray | None
    reconciled_key: np.ndarray | None
    ledger: LeakageLedger
    public: "PublicRecord"


@dataclass
class PublicRecord:
    """Everything both parties derive from the public discussion."""

    labels: tuple[str, ...] = ("signal",)
    sent_per_label: list[int] = field(default_factory=list)
    detected: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sifted_positions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    sifted_labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    test_mask: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    alice_test_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    bob_test_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint8))
    qber: dict[str, float | None] = field(default_factory=dict)
    gains: dict[str, float | None] = field(default_factory=dict)
    multiphoton_fraction: float | None = None
    bounds: YieldBounds | None = None

    @property
    def key_mask(self) -> np.ndarray:
        return ~self.test_mask & (self.sifted_labels == self.labels.index("signal"))

    @property
    def key_positions(self) -> np.ndarray:
        return self.sifted_positions[self.key_mask]

    @property
    def test_positions(self) -> np.ndarray:
        return self.sifted_positions[self.test_mask]


def _observations(public: PublicRecord, source: SourceConfig) -> DecoyObservations | None:
    obs = {}
    for i, label in enumerate(public.labels):
        sent = public.sent_per_label[i]
        gain = public.gains.get(label)
        if not sent or gain is None:
            return None
        obs[label] = IntensityObservation(source.intensities[label], gain, public.qber.get(label), sent)
    return DecoyObservations(obs)


def _has_decoy_set(source: SourceConfig) -> bool:
    mu = source.signal_mu
    others = [v for k, v in source.intensities.items() if k != "signal"]
    return any(v == 0 for v in others) and sum(0 < v < mu for v in others) == 1 and len(others) == 2


def multiphoton_fraction(public: PublicRecord, source: SourceConfig) -> tuple[float, YieldBounds | None]:
    """Upper bound on the share of signal detections that came from multi-photon pulses."""
    gain = public.gains.get("signal")
    mu = source.signal_mu
    if not gain:
        return 1.0, None
    if _has_decoy_set(source):
        obs = _observations(public, source)
        if obs is not None:
            bounds = decoy_bounds(obs)
            q1 = bounds.y1_lower * mu * math.exp(-mu)
            return min(1.0, max(0.0, 1.0 - q1 / gain)), bounds
    return min(1.0, p_multi(mu) / gain), None


def _sift_and_estimate(public: PublicRecord, alice_basis, bob_basis, detected_labels) -> None:
    matched = np.asarray(alice_basis) == np.asarray(bob_basis)
    public.sifted_positions = public.detected[matched]
    public.sifted_labels = np.asarray(detected_labels, dtype=np.int64)[matched]
    counts = np.bincount(np.asarray(detected_labels, dtype=np.int64), minlength=len(public.labels))
    public.gains = {
        lab: (int(counts[i]) / public.sent_per_label[i] if public.sent_per_label[i] else None)
        for i, lab in enumerate(public.labels)
    }


def _abort_reason(public: PublicRecord, params: SessionParams) -> str | None:
    n_key = int(public.key_mask.sum())
    q = public.qber.get("signal")
    if q is None:
        return "no QBER estimate for the signal intensity" if n_key else None
    if q >= params.qber_abort_threshold - 1e-15 + params.abort_margin:
        return f"signal QBER {q:.4f} >= threshold {params.qber_abort_threshold}"
    return None


def _finish(
    ep: Endpoint, store: KeyStore, params: SessionParams, first: bool
) -> Generator[None, None, tuple[str | None, int]]:
    """Exchange transcript tags. Returns (abort reason or None, key bits consumed).

    Both tags share one hash point sized for the longer transcript; each tag
    gets its own pad. No tag has been read yet when this starts, so both
    sides see the same two transcripts and size the field identically.
    """
    t = params.auth_security_bits
    mine = transcript_bytes(ep.sent)
    theirs = transcript_bytes(ep.received)
    b = field_bits(8 * max(len(mine), len(theirs)), t)
    consumed = 0

    def send_tag():
        nonlocal consumed
        try:
            tag, used = authenticate(transcript_bytes(ep.sent), store, t, key)
        except KeyExhausted:
            ep.send("tag", tag=None)
            return "authentication budget exhausted"
        consumed += used
        ep.send("tag", tag=tag)
        return None

    def check_tag():
        nonlocal consumed
        msg = yield from ep.recv("tag")
        if msg["tag"] is None:
            return "peer could not authenticate"
        before = store.consumed_offset
        try:
            ok = verify(transcript_bytes(ep.received[:-1]), msg["tag"], store, t, key)
        except KeyExhausted:
            return "authentication budget exhausted"
        consumed += store.consumed_offset - before
        return None if ok else "authentication tag mismatch"

    try:
        key = HashKey.draw(store, b)
        consumed += b
    except KeyExhausted:
        if first:
            ep.send("tag", tag=None)
        else:
            yield from ep.recv("tag")
            ep.send("tag", tag=None)
        return "authentication budget exhausted", consumed

    if first:
        reason = send_tag()
        if reason is None:
            reason = yield from check_tag()
    else:
        reason = yield from check_tag()
        if reason is None:
            reason = send_tag()
        else:
            ep.send("tag", tag=None)
    return reason, consumed


def alice_party(
    ep: Endpoint, signals: SignalRecords, params: SessionParams, rng: np.random.Generator, store: KeyStore
) -> Generator[None, None, PartyResult]:
    public = PublicRecord(labels=signals.labels)
    public.sent_per_label = np.bincount(signals.label_index, minlength=len(signals.labels)).tolist()
    ledger = LeakageLedger()

    receipt = yield from ep.recv("receipt")
    public.detected = np.asarray(receipt["detected"], dtype=np.int64)
    bob = yield from ep.recv("bases")
    alice_basis = signals.basis[public.detected]
    detected_labels = signals.label_index[public.detected]
    ep.send("bases", bases=alice_basis, labels=detected_labels,
            label_names=list(signals.labels), sent_per_label=public.sent_per_label)
    _sift_and_estimate(public, alice_basis, bob["bases"], detected_labels)

    alice_bits = signals.bit[public.sifted_positions]
    public.test_mask = select_test_mask(len(public.sifted_positions), params.test_fraction, rng)
    public.alice_test_bits = alice_bits[public.test_mask]
    ep.send("test", indices=np.flatnonzero(public.test_mask), bits=public.alice_test_bits)
    reply = yield from ep.recv("test_bits")
    public.bob_test_bits = np.asarray(reply["bits"], dtype=np.uint8)
    public.qber = qber_by_label(public.alice_test_bits, public.bob_test_bits,
                                public.sifted_labels[public.test_mask], public.labels)
    ledger.test_bits_revealed = int(public.test_mask.sum())
    public.multiphoton_fraction, public.bounds = multiphoton_fraction(public, params.source)

    reason = _abort_reason(public, params)
    if reason:
        return PartyResult("aborted", reason, None, None, ledger, public)
    key = alice_bits[public.key_mask]
    if len(key) == 0:
        return PartyResult("completed", None, key, key, ledger, public)

    ec = yield from cascade_alice(ep, key, public.qber["signal"],
                                  int(rng.integers(0, 2**62)), params.ec_passes)
    ledger.ec_bits_leaked = ec.ec_bits_leaked
    if not ec.verified:
        return PartyResult("aborted", "reconciliation verification failed", None, None, ledger, public)

    length = final_length(len(key), public.qber["signal"], public.multiphoton_fraction,
                          ledger.ec_bits_leaked, params.security_margin)
    pa_seed = int(rng.integers(0, 2**62))
    ep.send("pa", seed=pa_seed, length=length)
    final = privacy_amplify(key, length, pa_seed)
    ledger.pa_output_length = length
    if length == 0:
        return PartyResult("completed", None, final, key, ledger, public)

    reason, used = yield from _finish(ep, store, params, first=True)
    ledger.auth_bits_consumed = used
    if reason:
        return PartyResult("aborted", reason, None, key, ledger, public)
    store.grow(final)
    return PartyResult("completed", None, final, key, ledger, public)


def bob_party(
    ep: Endpoint, detections: DetectionTrain, params: SessionParams, store: KeyStore
) -> Generator[None, None, PartyResult]:
    ledger = LeakageLedger()
    detected = np.flatnonzero(detections.detected)
    ep.send("receipt", detected=detected)
    ep.send("bases", bases=detections.basis[detected])
    msg = yield from ep.recv("bases")
    public = PublicRecord(labels=tuple(msg["label_names"]), sent_per_label=list(msg["sent_per_label"]))
    public.detected = detected
    _sift_and_estimate(public, msg["bases"], detections.basis[detected], msg["labels"])

    bob_bits = detections.outcome_bit[public.sifted_positions]
    test = yield from ep.recv("test")
    public.test_mask = np.zeros(len(public.sifted_positions), dtype=bool)
    public.test_mask[np.asarray(test["indices"], dtype=np.int64)] = True
    public.alice_test_bits = np.asarray(test["bits"], dtype=np.uint8)
    public.bob_test_bits = bob_bits[public.test_mask]
    ep.send("test_bits", bits=public.bob_test_bits)
    public.qber = qber_by_label(public.alice_test_bits, public.bob_test_bits,
                                public.sifted_labels[public.test_mask], public.labels)
    ledger.test_bits_revealed = int(public.test_mask.sum())
    public.multiphoton_fraction, public.bounds = multiphoton_fraction(public, params.source)

    reason = _abort_reason(public, params)
    if reason:
        return PartyResult("aborted", reason, None, None, ledger, public)
    key = bob_bits[public.key_mask]
    if len(key) == 0:
        return PartyResult("completed", None, key, key, ledger, public)

    ec = yield from cascade_bob(ep, key)
    ledger.ec_bits_leaked = ec.ec_bits_leaked
    if not ec.verified:
        return PartyResult("aborted", "reconciliation verification failed", None, None, ledger, public)

    pa = yield from ep.recv("pa")
    length = final_length(len(key), public.qber["signal"], public.multiphoton_fraction,
                          ledger.ec_bits_leaked, params.security_margin)
    if length != pa["length"]:
        return PartyResult("aborted", "final length disagreement", None, None, ledger, public)
    final = privacy_amplify(ec.key, length, pa["seed"])
    ledger.pa_output_length = length
    if length == 0:
        return PartyResult("completed", None, final, ec.key, ledger, public)

    reason, used = yield from _finish(ep, store, params, first=False)
    ledger.auth_bits_consumed = used
    if reason:
        return PartyResult("aborted", reason, None, ec.key, ledger, public)
    store.grow(final)
    return PartyResult("completed", None, final, ec.key, ledger, public)


@dataclass
class SessionTranscript:
    params: SessionParams
    attack: AttackStrategy
    signals: SignalRecords
    detections: DetectionTrain
    sifted: SiftedKeyPair
    public: PublicRecord
    ledger: LeakageLedger
    outcome: str
    abort_reason: str | None
    alice_key: np.ndarray | None
    bob_key: np.ndarray | None
    alice_store: KeyStore
    bob_store: KeyStore
    eve: EveRecord
    messages: int

    @property
    def completed(self) -> bool:
        return self.outcome == "completed"

    @property
    def final_key(self) -> np.ndarray | None:
        return self.alice_key

    @property
    def test_positions(self) -> np.ndarray:
        return self.public.test_positions

    @property
    def key_positions(self) -> np.ndarray:
        return self.public.key_positions

    @property
    def qber(self) -> dict[str, float | None]:
        return self.public.qber

    @property
    def net_key_growth(self) -> int:
        """Final key bits minus the pre-shared bits spent on authentication."""
        grown = len(self.alice_key) if self.completed and self.alice_key is not None else 0
        return grown - self.ledger.auth_bits_consumed

    def report(self) -> dict[str, Any]:
        """JSON-ready summary (arrays are summarized, not dumped)."""
        doc: dict[str, Any] = {
            "seed": self.params.seed,
            "params": self.params.to_dict(),
            "attack": asdict(self.attack),
            "outcome": self.outcome,
            "abort_reason": self.abort_reason,
            "qber": self.public.qber,
            "gains": self.public.gains,
            "sifted_length": int(len(self.sifted)),
            "test_length": int(self.public.test_mask.sum()),
            "key_length": int(self.public.key_mask.sum()),
            "multiphoton_fraction": self.public.multiphoton_fraction,
            "yield_bounds": self.public.bounds.to_dict() if self.public.bounds else None,
            "final_length": int(len(self.alice_key)) if self.alice_key is not None else 0,
            "leakage": asdict(self.ledger),
            "net_key_growth": self.net_key_growth,
            "messages": self.messages,
        }
        if not self.attack.is_passive:
            doc["eve_information"] = eve_information(self.eve, self)
        return doc


def run_session(params: SessionParams, attack: AttackStrategy | None = None) -> SessionTranscript:
    """Run one BB84 session; ``(params, attack)`` fully determine the result."""
    attack = attack or AttackStrategy.passive()
    streams = np.random.SeedSequence(params.seed).spawn(6)
    source_rng, bob_rng, channel_rng, eve_rng, alice_rng, key_rng = (
        np.random.default_rng(s) for s in streams
    )

    pulses = emit(params.source, params.n_pulses, source_rng)
    signals = SignalRecords.from_pulses(pulses)
    at_bob, eve = apply_attack(attack, pulses, params.channel, params.detector, eve_rng, params.source)
    bob_basis = bob_rng.integers(0, 2, size=params.n_pulses, dtype=np.int8)
    detections = detect_train(at_bob, bob_basis, params.channel, params.detector, channel_rng)

    preshared = key_rng.integers(0, 2, size=params.preshared_key_bits, dtype=np.uint8)
    alice_store, bob_store = KeyStore(preshared.copy()), KeyStore(preshared.copy())

    ea, eb = duplex()
    a, b = run_parties(
        [alice_party(ea, signals, params, alice_rng, alice_store),
         bob_party(eb, detections, params, bob_store)],
        [ea, eb],
    )

    sifted_positions = a.public.sifted_positions
    sifted = SiftedKeyPair(
        signals.bit[sifted_positions].astype(np.uint8),
        detections.outcome_bit[sifted_positions].astype(np.uint8),
        sifted_positions,
        a.public.sifted_labels,
        signals.labels,
    )
    if a.outcome == b.outcome == "completed":
        outcome, reason = "completed", None
        alice_key, bob_key = a.final_key, b.final_key
    else:
        outcome = "aborted"
        reason = a.reason or b.reason
        alice_key = bob_key = None
    return SessionTranscript(
        params, attack, signals, detections, sifted, a.public, a.ledger, outcome, reason,
        alice_key, bob_key, alice_store, bob_store, eve, ea.messages_sent + eb.messages_sent,
    )


def predicted_final_length(params: SessionParams, f_ec: float = 1.22) -> float:
    """Expected final key length of a passive-channel session from the analytic model.

    Mirrors the session pipeline with noise-free gains and error rates.
    """
    eta = total_transmittance(params.channel, params.detector)
    model = RateModelParams(
        mu=params.source.signal_mu, eta=eta,
        dark_count_prob=params.detector.dark_count_prob,
        misalignment=params.channel.misalignment_prob,
    )
    public = PublicRecord(labels=params.source.labels)
    public.sent_per_label = [params.n_pulses * params.source.selection_probabilities[lab]
                             for lab in public.labels]
    for lab in public.labels:
        gain, qber = model_gain_qber(model, params.source.intensities[lab])
        public.gains[lab] = gain
        public.qber[lab] = None if math.isnan(qber) else qber
    gain, qber = public.gains["signal"], public.qber["signal"]
    delta, _ = multiphoton_fraction(public, params.source)
    n_key = public.sent_per_label[0] * gain * 0.5 * (1.0 - params.test_fraction)
    leak = f_ec * n_key * binary_entropy(qber) + VERIFY_HASH_BITS
    if delta >= 1:
        return 0.0
    untagged = n_key * (1.0 - delta)
    e1 = min(0.5, qber / (1.0 - delta))
    return max(0.0, untagged * (1.0 - binary_entropy(e1)) - leak - params.security_margin)
