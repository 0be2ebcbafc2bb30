import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bb84sim.keyrate import binary_entropy
from bb84sim.postprocessing import (
    HashKey,
    KeyExhausted,
    KeyStore,
    LeakageLedger,
    authenticate,
    encrypt_with_store,
    field_bits,
    final_length,
    irreducible_polynomial,
    is_irreducible,
    key_bits_needed,
    key_reuse_leak,
    otp_decrypt,
    otp_encrypt,
    poly_hash,
    privacy_amplify,
    toeplitz_hash,
    toeplitz_seed_bits,
    verify,
)
from bb84sim.postprocessing.gf2 import clmul, degree, mulmod, polymod
from bb84sim.postprocessing.otp import as_bits, bits_to_str

bitstrings = st.text(alphabet="01", min_size=1, max_size=64)


# GF(2)[x] -------------------------------------------------------------------

def schoolbook_mul(a: int, b: int) -> int:
    out = 0
    for i in range(b.bit_length()):
        if b >> i & 1:
            out ^= a << i
    return out


def trial_division_irreducible(m: int) -> bool:
    d = degree(m)
    if d < 1:
        return False
    for f in range(2, 1 << (d // 2 + 1)):
        if 0 < degree(f) <= d // 2 and polymod(m, f) == 0:
            return False
    return True


def irreducible_count(n: int) -> int:
    def mobius(k):
        result, p = 1, 2
        while p * p <= k:
            if k % p == 0:
                k //= p
                if k % p == 0:
                    return 0
                result = -result
            p += 1
        return -result if k > 1 else result
    return sum(mobius(d) * 2 ** (n // d) for d in range(1, n + 1) if n % d == 0) // n


@given(st.integers(0, 2**80), st.integers(0, 2**80))
def test_clmul_matches_schoolbook(a, b):
    assert clmul(a, b) == schoolbook_mul(a, b)


@given(st.integers(0, 2**120), st.integers(2, 2**70))
def test_polymod_remainder(a, m):
    r = polymod(a, m)
    assert degree(r) < degree(m)
    # a - r is a multiple of m: its remainder vanishes
    assert polymod(a ^ r, m) == 0


def test_irreducibility_against_trial_division():
    for m in range(2, 1 << 11):
        assert is_irreducible(m) == trial_division_irreducible(m), bin(m)


@pytest.mark.parametrize("n", range(1, 11))
def test_irreducible_counts(n):
    found = sum(is_irreducible(m) for m in range(1 << n, 1 << (n + 1)))
    assert found == irreducible_count(n)


@pytest.mark.parametrize("n", [2, 7, 8, 64, 65, 70, 71, 72, 80, 127, 128])
def test_irreducible_polynomial_degree(n):
    m = irreducible_polynomial(n)
    assert degree(m) == n and is_irreducible(m)


def test_field_multiplication_has_inverses():
    m = irreducible_polynomial(8)
    for a in range(1, 256):
        assert any(mulmod(a, b, m) == 1 for b in range(1, 256))


# key store -----------------------------------------------------------------

def test_keystore_consumes_in_order():
    store = KeyStore(np.array([1, 0, 1, 1, 0], dtype=np.uint8))
    assert bits_to_str(store.take(2, "a")) == "10"
    assert bits_to_str(store.take(3, "b")) == "110"
    with pytest.raises(KeyExhausted):
        store.take(1)
    store.grow([0, 1])
    assert bits_to_str(store.take(2)) == "01"
    assert store.reused_bits() == 0 and store.consumed_bits == 7
    with pytest.raises(ValueError):
        store.take(-1)


@given(st.lists(st.integers(0, 40), max_size=30), st.integers(0, 300))
def test_keystore_never_reuses(requests, size):
    store = KeyStore(np.zeros(size, dtype=np.uint8))
    offsets = [store.consumed_offset]
    for r in requests:
        try:
            store.take(r)
        except KeyExhausted:
            pass
        offsets.append(store.consumed_offset)
    assert offsets == sorted(offsets)
    assert store.reused_bits() == 0
    assert store.consumed_offset <= size


# one-time pad ----------------------------------------------------------------

def test_otp_examples():
    assert bits_to_str(otp_encrypt("1011", "0110")) == "1101"
    assert bits_to_str(otp_encrypt("0110", "0110")) == "0000"
    c1, c2 = otp_encrypt("1100", "0111"), otp_encrypt("1010", "0111")
    assert bits_to_str(key_reuse_leak(c1, c2)) == "0110"
    assert bits_to_str(key_reuse_leak(c1, c1)) == "0000"
    with pytest.raises(ValueError):
        otp_encrypt("1011", "01")
    with pytest.raises(ValueError):
        key_reuse_leak("101", "10")
    with pytest.raises(ValueError):
        as_bits("10a1")


def test_otp_round_trip_and_reuse_identity_fuzz():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        n = int(rng.integers(1, 200))
        m, k = rng.integers(0, 2, n, dtype=np.uint8), rng.integers(0, 2, n, dtype=np.uint8)
        assert np.array_equal(otp_decrypt(otp_encrypt(m, k), k), m)
    for _ in range(10_000):
        n = int(rng.integers(1, 64))
        m1, m2, k = (rng.integers(0, 2, n, dtype=np.uint8) for _ in range(3))
        assert np.array_equal(key_reuse_leak(otp_encrypt(m1, k), otp_encrypt(m2, k)), m1 ^ m2)


def test_encrypt_with_store_marks_bits():
    store = KeyStore(np.ones(8, dtype=np.uint8))
    c = encrypt_with_store("1010", store)
    assert bits_to_str(c) == "0101" and store.consumed_offset == 4
    with pytest.raises(KeyExhausted):
        encrypt_with_store("11111", store)


@given(bitstrings, st.data())
def test_otp_involution(m, data):
    k = data.draw(st.text(alphabet="01", min_size=len(m), max_size=len(m) + 8))
    assert bits_to_str(otp_decrypt(otp_encrypt(m, k), k)) == m


# authentication -----------------------------------------------------------

def _store(bits: int, seed: int = 0) -> KeyStore:
    return KeyStore(np.random.default_rng(seed).integers(0, 2, bits, dtype=np.uint8))


def test_auth_round_trip():
    rng = np.random.default_rng(5)
    alice, bob = _store(200_000, 1), _store(200_000, 1)
    for _ in range(1000):
        msg = rng.bytes(int(rng.integers(0, 300)))
        tag, used = authenticate(msg, alice)
        assert used == key_bits_needed(8 * len(msg))
        assert verify(msg, tag, bob)
    assert alice.consumed_offset == bob.consumed_offset
    assert alice.reused_bits() == 0


def test_flipped_bit_rejected():
    rng = np.random.default_rng(6)
    rejected = 0
    trials = 10_000
    for i in range(trials):
        msg = bytearray(rng.bytes(16))
        store = _store(2 * field_bits(128), i)
        peer = store.copy()
        tag, _ = authenticate(bytes(msg), store)
        pos = int(rng.integers(0, 128))
        msg[pos // 8] ^= 1 << (pos % 8)
        rejected += not verify(bytes(msg), tag, peer)
    assert rejected / trials >= 1 - 2.0**-64


@given(st.binary(min_size=1, max_size=6), st.binary(min_size=1, max_size=6), st.integers(0, 127))
def test_forgery_bound_small_field(m1, m2, delta):
    """Over every key point, a forged tag tag(m1) ^ delta verifies for m2 at most ``blocks`` times."""
    if m1 == m2:
        return
    t = 4
    b = field_bits(8 * max(len(m1), len(m2)), t)
    blocks = math.ceil(8 * max(len(m1), len(m2)) / b) + 1
    hits = sum((poly_hash(m1, k, b) ^ poly_hash(m2, k, b)) == delta for k in range(1 << b))
    assert hits <= blocks
    assert hits / (1 << b) <= 2.0**-t + 1e-12


def test_auth_cost_is_logarithmic():
    small, big = key_bits_needed(2**10), key_bits_needed(2**20)
    assert big - small <= 2 * 10
    assert key_bits_needed(2**30) < 2 * (64 + 30)


def test_auth_exhausted_store():
    store = _store(100)
    with pytest.raises(KeyExhausted):
        authenticate(b"hello", store)


def test_shared_hash_key_saves_bits():
    alice, bob = _store(1000, 3), _store(1000, 3)
    b = field_bits(8 * 64)
    ka, kb = HashKey.draw(alice, b), HashKey.draw(bob, b)
    t1, used1 = authenticate(b"x" * 64, alice, key=ka)
    t2, used2 = authenticate(b"y" * 10, alice, key=ka)
    assert used1 == used2 == b
    assert verify(b"x" * 64, t1, bob, key=kb) and verify(b"y" * 10, t2, bob, key=kb)
    assert alice.consumed_offset == 3 * b
    with pytest.raises(ValueError):
        authenticate(b"z" * 10_000, alice, key=ka)


# privacy amplification ------------------------------------------------------

def explicit_toeplitz(key, seed_bits, length):
    n = len(key)
    T = np.array([[seed_bits[i - j + n - 1] for j in range(n)] for i in range(length)], dtype=np.int64)
    return (T @ key.astype(np.int64)) % 2


@given(st.integers(1, 60), st.integers(1, 60), st.integers(0, 2**31))
def test_toeplitz_hash_matches_explicit_matrix(n, length, seed):
    rng = np.random.default_rng(seed)
    key = rng.integers(0, 2, n, dtype=np.uint8)
    seed_bits = toeplitz_seed_bits(seed, n, length)
    assert np.array_equal(toeplitz_hash(key, seed_bits, length), explicit_toeplitz(key, seed_bits, length))


def test_privacy_amplify_contract():
    key = np.random.default_rng(1).integers(0, 2, 500, dtype=np.uint8)
    assert len(privacy_amplify(key, 0, 7)) == 0
    assert np.array_equal(privacy_amplify(key, 100, 7), privacy_amplify(key, 100, 7))
    assert not np.array_equal(privacy_amplify(key, 100, 7), privacy_amplify(key, 100, 8))
    with pytest.raises(ValueError):
        privacy_amplify(key, 501, 7)


def test_privacy_amplify_uniformity():
    rng = np.random.default_rng(2)
    keys = rng.integers(0, 2, (10_000, 256), dtype=np.uint8)
    seed_bits = toeplitz_seed_bits(11, 256, 64)
    outputs = np.array([toeplitz_hash(k, seed_bits, 64) for k in keys])
    freq = outputs.mean(axis=0)
    assert np.all(np.abs(freq - 0.5) <= 0.02)


def final_length_reference(n, qber, delta, leak, s):
    h = lambda x: 0.0 if x <= 0 or x >= 1 else -x * math.log2(x) - (1 - x) * math.log2(1 - x)
    if n == 0:
        return 0
    e1 = min(0.5, qber * n / (n * (1 - delta)))
    return max(0, math.floor(n * (1 - delta) * (1 - h(e1)) - leak - s))


def test_final_length_examples():
    assert final_length(1000, 0.0, 0.0, 0, 0) == 1000
    assert final_length(1000, 0.3, 0.5, 0, 0) == 0
    assert final_length(10_000, 0.03, 0.1, 800, 100) == final_length_reference(10_000, 0.03, 0.1, 800, 100)
    assert final_length(10_000, 0.03, 0.1, 800, 100) == 6202
    assert final_length(10, 0.0, 1.0, 0, 0) == 0


@given(st.integers(0, 10**6), st.floats(0, 0.5), st.floats(0, 0.99), st.integers(0, 10**5), st.integers(0, 500))
def test_final_length_dual(n, qber, delta, leak, s):
    assert final_length(n, qber, delta, leak, s) == final_length_reference(n, qber, delta, leak, s)
    assert 0 <= final_length(n, qber, delta, leak, s) <= n


def test_ledger_defaults():
    ledger = LeakageLedger()
    assert ledger.is_zero
    ledger.ec_bits_leaked = 3
    assert not ledger.is_zero
