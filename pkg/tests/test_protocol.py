import math

import numpy as np
import pytest

from bb84sim.adversary import AttackStrategy
from bb84sim.config import RunConfig
from bb84sim.photonics import (
    ChannelConfig,
    DetectionTrain,
    DetectorConfig,
    SourceConfig,
    expected_qber,
    total_transmittance,
)
from bb84sim.protocol import (
    SessionParams,
    SiftedKeyPair,
    SignalRecords,
    estimate_qber,
    predicted_final_length,
    run_session,
    sift,
)

BENIGN = RunConfig.load("configs/benign_20km.json").session()


def signal_records(basis, bit):
    n = len(basis)
    return SignalRecords(np.array(basis, np.int8), np.array(bit, np.uint8),
                         np.zeros(n, np.int64), ("signal",))


def detections(detected, basis, bits):
    n = len(detected)
    return DetectionTrain(np.array(detected, bool), np.array(basis, np.int8),
                          np.array(bits, np.uint8), np.zeros(n, bool))


def pair(alice, bob):
    n = len(alice)
    return SiftedKeyPair(np.array(alice, np.uint8), np.array(bob, np.uint8),
                         np.arange(n), np.zeros(n, np.int64), ("signal",))


# sifting -------------------------------------------------------------------

def test_sift_without_detections_is_empty():
    rng = np.random.default_rng(0)
    alice = signal_records(rng.integers(0, 2, 50), rng.integers(0, 2, 50))
    out = sift(alice, detections(np.zeros(50), rng.integers(0, 2, 50), np.zeros(50)))
    assert len(out) == 0


def test_sift_eight_pulse_fixture():
    alice = signal_records([0, 1, 0, 1, 0, 0, 1, 1], [0, 1, 1, 0, 1, 0, 1, 0])
    bob = detections([1, 1, 0, 1, 1, 1, 0, 1], [0, 0, 0, 1, 0, 1, 1, 1], [0, 1, 1, 0, 1, 1, 1, 1])
    out = sift(alice, bob)
    assert out.positions.tolist() == [0, 3, 4, 7]
    assert out.alice_bits.tolist() == [0, 0, 1, 0]
    assert out.bob_bits.tolist() == [0, 0, 1, 1]


def test_sift_accepts_record_lists():
    alice = signal_records([0, 1], [1, 1])
    bob = detections([1, 1], [0, 1], [1, 0])
    assert sift(alice, [bob[0], bob[1]]).positions.tolist() == [0, 1]


def test_sift_keeps_half_of_random_bases():
    n = 10**6
    rng = np.random.default_rng(1)
    alice = signal_records(rng.integers(0, 2, n), rng.integers(0, 2, n))
    out = sift(alice, detections(np.ones(n), rng.integers(0, 2, n), np.zeros(n)))
    assert abs(len(out) / n - 0.5) < 0.002
    assert np.all(np.diff(out.positions) > 0)


def test_sift_length_mismatch():
    with pytest.raises(ValueError, match="lengths differ"):
        sift(signal_records([0, 1], [0, 0]), detections([1], [0], [0]))


# QBER estimation -----------------------------------------------------------

def test_identical_strings_have_zero_qber(rng):
    bits = rng.integers(0, 2, 1000)
    qber, rest = estimate_qber(pair(bits, bits), 0.5, rng)
    assert qber == {"signal": 0.0}
    assert 0 < len(rest) < 1000


def test_full_census_of_alternating_string(rng):
    n = 1000
    qber, rest = estimate_qber(pair(np.zeros(n), np.arange(n) % 2), 1.0, rng)
    assert qber["signal"] == 0.5 and len(rest) == 0


def test_eleven_percent_estimate(rng):
    n = 10**5
    alice = rng.integers(0, 2, n)
    bob = alice.copy()
    bob[rng.choice(n, int(0.11 * n), replace=False)] ^= 1
    qber, rest = estimate_qber(pair(alice, bob), 0.5, rng)
    assert abs(qber["signal"] - 0.11) < 0.005
    assert len(rest) < n


def test_labels_without_tests_are_flagged(rng):
    p = SiftedKeyPair(np.zeros(4, np.uint8), np.zeros(4, np.uint8), np.arange(4),
                      np.zeros(4, np.int64), ("signal", "decoy"))
    qber, _ = estimate_qber(p, 1.0, rng)
    assert qber == {"signal": 0.0, "decoy": None}


def test_remainder_excludes_tested_positions(rng):
    p = pair(rng.integers(0, 2, 500), rng.integers(0, 2, 500))
    _, rest = estimate_qber(p, 0.3, rng)
    assert set(rest.positions.tolist()) <= set(range(500))
    assert len(rest) < 500


# sessions ------------------------------------------------------------------

def test_benign_session_grows_key():
    tr = run_session(BENIGN)
    assert tr.completed
    assert np.array_equal(tr.alice_key, tr.bob_key)
    assert len(tr.final_key) > 0
    assert tr.net_key_growth > 0
    assert tr.alice_store.reused_bits() == 0 and tr.bob_store.reused_bits() == 0
    assert tr.ledger.pa_output_length == len(tr.final_key)


def test_mean_final_length_matches_prediction():
    predicted = predicted_final_length(BENIGN)
    lengths = []
    for seed in range(10):
        params = SessionParams(**{**BENIGN.__dict__, "seed": 1000 + seed})
        tr = run_session(params)
        assert tr.completed
        lengths.append(len(tr.final_key))
    assert abs(np.mean(lengths) - predicted) <= 0.2 * predicted


def test_full_intercept_resend_aborts():
    tr = run_session(BENIGN, AttackStrategy.intercept_resend(1.0))
    assert tr.outcome == "aborted"
    assert tr.final_key is None
    assert abs(tr.qber["signal"] - 0.25) < 0.03
    assert "threshold" in tr.abort_reason


def test_zero_pulses_completes_empty():
    tr = run_session(SessionParams(**{**BENIGN.__dict__, "n_pulses": 0}))
    assert tr.completed
    assert len(tr.final_key) == 0
    assert tr.ledger.is_zero


def test_test_and_key_positions_disjoint():
    tr = run_session(BENIGN)
    assert not set(tr.test_positions.tolist()) & set(tr.key_positions.tolist())
    assert len(tr.test_positions) == tr.ledger.test_bits_revealed


def test_sessions_are_deterministic():
    a, b = run_session(BENIGN), run_session(BENIGN)
    assert a.report() == b.report()
    assert np.array_equal(a.final_key, b.final_key)
    other = run_session(SessionParams(**{**BENIGN.__dict__, "seed": BENIGN.seed + 1}))
    assert not np.array_equal(a.detections.detected, other.detections.detected)


def test_passive_qber_matches_model():
    params = SessionParams(n_pulses=10**6, source=SourceConfig.single(0.1), seed=5,
                           channel=ChannelConfig(20.0, 0.2, 0.01), detector=DetectorConfig(0.1, 1e-5))
    tr = run_session(params)
    eta = total_transmittance(params.channel, params.detector)
    model = expected_qber(0.1, eta, 1e-5, 0.01)
    tested = int(tr.public.test_mask.sum())
    se = math.sqrt(model * (1 - model) / tested)
    assert abs(tr.qber["signal"] - model) <= 4 * se


def test_small_preshared_key_aborts_instead_of_reusing():
    tr = run_session(SessionParams(**{**BENIGN.__dict__, "preshared_key_bits": 150}))
    assert tr.outcome == "aborted"
    assert tr.abort_reason == "authentication budget exhausted"
    assert tr.alice_store.reused_bits() == 0 and tr.bob_store.reused_bits() == 0
    assert len(tr.alice_store.grown_bits) == 0
