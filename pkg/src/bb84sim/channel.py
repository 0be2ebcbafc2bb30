"""In-process duplex classical channel and a cooperative two-party scheduler.

Parties are generator functions. ``yield from endpoint.recv(kind)`` suspends
the party until a message arrives; :func:`run_parties` resumes whichever party
can make progress, in a fixed order, so a session is deterministic.

Every message is serialized to canonical JSON on send. The receiver gets the
decoded copy, and both ends keep the exact bytes so the transcript can be
authenticated afterwards.
"""
from __future__ import annotations

import json
from collections import deque
from typing import Any, Generator

import numpy as np


class ProtocolError(Exception):
    pass


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def encode(kind: str, payload: dict[str, Any]) -> bytes:
    return json.dumps({"kind": kind, "payload": payload}, default=_default,
                      sort_keys=True, separators=(",", ":")).encode()


class Endpoint:
    def __init__(self, name: str):
        self.name = name
        self.peer: Endpoint | None = None
        self.inbox: deque[bytes] = deque()
        self.sent: list[bytes] = []
        self.received: list[bytes] = []

    def send(self, kind: str, **payload) -> None:
        raw = encode(kind, payload)
        self.sent.append(raw)
        self.peer.inbox.append(raw)

    def recv(self, kind: str) -> Generator[None, None, dict]:
        while not self.inbox:
            yield
        raw = self.inbox.popleft()
        self.received.append(raw)
        msg = json.loads(raw)
        if msg["kind"] != kind:
            raise ProtocolError(f"{self.name} expected {kind!r}, got {msg['kind']!r}")
        return msg["payload"]

    @property
    def messages_sent(self) -> int:
        return len(self.sent)

    @property
    def bytes_sent(self) -> int:
        return sum(len(m) for m in self.sent)


def transcript_bytes(messages: list[bytes]) -> bytes:
    """Length-prefixed concatenation, so message boundaries are authenticated too."""
    return b"".join(len(m).to_bytes(8, "big") + m for m in messages)


def duplex(a: str = "alice", b: str = "bob") -> tuple[Endpoint, Endpoint]:
    ea, eb = Endpoint(a), Endpoint(b)
    ea.peer, eb.peer = eb, ea
    return ea, eb


def run_parties(parties: list[Generator], endpoints: list[Endpoint]) -> list:
    """Drive party generators to completion and return their return values.

    Raises :class:`ProtocolError` if every live party is blocked and no
    message moved during a full round.
    """
    results: list = [None] * len(parties)
    live = dict(enumerate(parties))
    while live:
        sent_before = sum(e.messages_sent for e in endpoints)
        finished = False
        for i in list(live):
            try:
                next(live[i])
            except StopIteration as stop:
                results[i] = stop.value
                del live[i]
                finished = True
        if live and not finished and sum(e.messages_sent for e in endpoints) == sent_before:
            if all(not e.inbox for e in endpoints):
                raise ProtocolError("parties deadlocked waiting for each other")
    return results
