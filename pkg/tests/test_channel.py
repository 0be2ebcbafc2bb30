import json

import numpy as np
import pytest

from bb84sim.channel import ProtocolError, duplex, encode, run_parties, transcript_bytes


def test_encode_is_canonical():
    a = encode("x", {"b": 1, "a": np.array([1, 2], dtype=np.int8), "c": np.float64(0.5)})
    assert a == b'{"kind":"x","payload":{"a":[1,2],"b":1,"c":0.5}}'
    with pytest.raises(TypeError):
        encode("x", {"bad": object()})


def test_ping_pong_and_results():
    ea, eb = duplex()

    def alice():
        ep = ea
        ep.send("ping", n=1)
        msg = yield from ep.recv("pong")
        return msg["n"]

    def bob():
        msg = yield from eb.recv("ping")
        eb.send("pong", n=msg["n"] + 1)
        return "done"

    assert run_parties([alice(), bob()], [ea, eb]) == [2, "done"]
    assert ea.messages_sent == eb.messages_sent == 1
    assert ea.sent == eb.received and eb.sent == ea.received
    assert json.loads(ea.sent[0])["kind"] == "ping"


def test_deadlock_is_detected():
    ea, eb = duplex()

    def waiter(ep, kind):
        yield from ep.recv(kind)

    with pytest.raises(ProtocolError, match="deadlock"):
        run_parties([waiter(ea, "a"), waiter(eb, "b")], [ea, eb])


def test_unexpected_message_kind():
    ea, eb = duplex()

    def alice():
        ea.send("hello")
        return None
        yield

    def bob():
        yield from eb.recv("goodbye")

    with pytest.raises(ProtocolError, match="expected 'goodbye'"):
        run_parties([alice(), bob()], [ea, eb])


def test_transcript_framing_separates_messages():
    assert transcript_bytes([b"ab", b"c"]) != transcript_bytes([b"a", b"bc"])
    assert transcript_bytes([]) == b""
