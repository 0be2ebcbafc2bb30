"""Cascade error reconciliation over the classical channel.

Alice holds the reference key and only answers parity queries; Bob drives the
protocol and corrects his key. Bisections of all odd blocks run in lockstep,
one query message per level, so the message count stays logarithmic in the
block size instead of linear in the number of errors.

Bob remembers every parity Alice has revealed, sub-blocks included. After a
correction he restarts from the smallest remembered range whose parity now
disagrees rather than from the enclosing top-level block.

Leakage is one bit per parity Alice reveals plus the verification hash.
When the error estimate is exactly zero Alice sends a hash up front, and
parities are spent only if it disagrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Generator

import numpy as np

from ..channel import Endpoint, duplex, run_parties
from .amplify import toeplitz_hash

DEFAULT_PASSES = 4
VERIFY_HASH_BITS = 64
# first-pass block size is about 0.73 / QBER (Brassard-Salvail)
BLOCK_CONSTANT = 0.73
MIN_QBER = 1e-3
# later passes never merge the key into fewer than this many blocks; on short
# keys plain doubling reaches a single block and hides error pairs for good
MIN_BLOCKS = 4


class ReconciliationError(Exception):
    """Residual mismatch detected by the verification hash."""


@dataclass
class ReconcileOutcome:
    key: np.ndarray
    ec_bits_leaked: int
    corrected: int
    verified: bool
    messages: int


def first_block_size(qber: float, n: int) -> int:
    q = max(qber, MIN_QBER)
    return int(min(max(n, 1), max(4, math.ceil(BLOCK_CONSTANT / q))))


def _permutations(seed: int, n: int, passes: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    perms = [np.arange(n)]
    for _ in range(passes - 1):
        perms.append(rng.permutation(n))
    return perms


def _verify_hash(key: np.ndarray, seed: int) -> list[int]:
    rng = np.random.default_rng(seed)
    seed_bits = rng.integers(0, 2, size=len(key) + VERIFY_HASH_BITS - 1, dtype=np.uint8)
    return toeplitz_hash(key, seed_bits, VERIFY_HASH_BITS).tolist()


def cascade_alice(
    ep: Endpoint, key: np.ndarray, qber: float, seed: int, passes: int = DEFAULT_PASSES
) -> Generator[None, None, ReconcileOutcome]:
    key = np.asarray(key, dtype=np.uint8)
    n = len(key)
    k1 = first_block_size(qber, n)
    precheck = _verify_hash(key, seed + 2) if qber <= 0 else None
    ep.send("ec_start", n=n, k1=k1, passes=passes, seed=seed, precheck=precheck)
    leaked = 0
    if precheck is not None:
        leaked += VERIFY_HASH_BITS
        reply = yield from ep.recv("ec_precheck")
        if reply["ok"]:
            return ReconcileOutcome(key, leaked, 0, True, ep.messages_sent)
    perms = _permutations(seed, n, passes)
    permuted = [key[p] for p in perms]
    cums = [np.concatenate([[0], np.cumsum(pk, dtype=np.int64)]) for pk in permuted]
    while True:
        msg = yield from ep.recv("ec_query")
        if msg["done"]:
            break
        ranges = msg["ranges"]
        parities = [int((cums[p][e] - cums[p][s]) & 1) for p, s, e in ranges]
        leaked += len(parities)
        ep.send("ec_parities", parities=parities)
    digest = _verify_hash(key, seed + 1)
    ep.send("ec_verify", digest=digest)
    leaked += VERIFY_HASH_BITS
    reply = yield from ep.recv("ec_verify_result")
    return ReconcileOutcome(key, leaked, 0, bool(reply["ok"]), ep.messages_sent)


def cascade_bob(ep: Endpoint, key: np.ndarray) -> Generator[None, None, ReconcileOutcome]:
    start = yield from ep.recv("ec_start")
    n, k1, passes, seed = start["n"], start["k1"], start["passes"], start["seed"]
    bob = np.asarray(key, dtype=np.uint8).copy()
    if len(bob) != n:
        raise ValueError("reconciliation keys differ in length")
    leaked = 0
    if start["precheck"] is not None:
        leaked += VERIFY_HASH_BITS
        ok = start["precheck"] == _verify_hash(bob, seed + 2)
        ep.send("ec_precheck", ok=ok)
        if ok:
            return ReconcileOutcome(bob, leaked, 0, True, ep.messages_sent)
    perms = _permutations(seed, n, passes)
    sizes = [min(max(n, 1), k1 * 2**i, max(k1, -(-n // MIN_BLOCKS))) for i in range(passes)]
    # every parity Alice has revealed, per pass: (start, stop) -> parity
    known: list[dict[tuple[int, int], int]] = [{} for _ in range(passes)]
    corrected = 0

    def parity(p: int, s: int, e: int) -> int:
        return int(bob[perms[p][s:e]].sum() & 1)

    def query(ranges: list[tuple[int, int, int]]):
        nonlocal leaked
        ep.send("ec_query", done=False, ranges=[list(r) for r in ranges])
        reply = yield from ep.recv("ec_parities")
        leaked += len(ranges)
        for (p, s, e), a in zip(ranges, reply["parities"]):
            known[p][(s, e)] = a
        return reply["parities"]

    def odd_ranges(done_passes: int) -> list[tuple[int, int, int, int]]:
        """Smallest pairwise-disjoint known ranges whose parities disagree."""
        chosen = []
        for p in range(done_passes):
            odd = [(e - s, s, e, a) for (s, e), a in known[p].items() if parity(p, s, e) != a]
            taken: list[tuple[int, int]] = []
            for _, s, e, a in sorted(odd):
                if all(e <= ts or s >= te for ts, te in taken):
                    taken.append((s, e))
                    chosen.append((p, s, e, a))
        return chosen

    def bisect_all(active: list[tuple[int, int, int, int]]):
        nonlocal corrected
        while active:
            halves = [(p, s, (s + e) // 2) for p, s, e, _ in active]
            answers = yield from query(halves)
            found = set()
            survivors = []
            for (p, s, e, par), (_, _, mid), a_left in zip(active, halves, answers):
                known[p][(mid, e)] = par ^ a_left
                if a_left != parity(p, s, mid):
                    s2, e2, par2 = s, mid, a_left
                else:
                    s2, e2, par2 = mid, e, par ^ a_left
                if e2 - s2 == 1:
                    found.add(int(perms[p][s2]))
                else:
                    survivors.append((p, s2, e2, par2))
            for idx in found:
                bob[idx] ^= 1
            corrected += len(found)
            # a flip elsewhere may already have fixed a pending range
            active = [r for r in survivors if parity(r[0], r[1], r[2]) != r[3]]

    for p in range(passes if n else 0):
        k = sizes[p]
        yield from query([(p, s, min(n, s + k)) for s in range(0, n, k)])
        while True:
            pending = odd_ranges(p + 1)
            if not pending:
                break
            yield from bisect_all(pending)

    ep.send("ec_query", done=True, ranges=[])
    msg = yield from ep.recv("ec_verify")
    ok = msg["digest"] == _verify_hash(bob, seed + 1)
    ep.send("ec_verify_result", ok=ok)
    return ReconcileOutcome(bob, leaked + VERIFY_HASH_BITS, corrected, ok, ep.messages_sent)


def reconcile(
    alice_key, bob_key, qber: float, seed: int = 0, passes: int = DEFAULT_PASSES
) -> tuple[np.ndarray, np.ndarray, int]:
    """Run Cascade between two local parties.

    Returns ``(alice_key, bob_key, ec_bits_leaked)``. Raises
    :class:`ReconciliationError` if the verification hash still differs
    after the last pass.
    """
    alice_key = np.asarray(alice_key, dtype=np.uint8)
    bob_key = np.asarray(bob_key, dtype=np.uint8)
    if len(alice_key) != len(bob_key):
        raise ValueError(f"key lengths differ: {len(alice_key)} vs {len(bob_key)}")
    ea, eb = duplex()
    a, b = run_parties(
        [cascade_alice(ea, alice_key, qber, seed, passes), cascade_bob(eb, bob_key)], [ea, eb]
    )
    if not b.verified:
        raise ReconciliationError("keys still differ after reconciliation")
    return a.key, b.key, a.ec_bits_leaked
