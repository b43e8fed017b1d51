"""Composed two-party similarity protocols and their plaintext oracles.

Three wire protocols are registered here: exact Jaccard, sketch-based
Jaccard approximation, and the size-hiding approximate intersection
cardinality. Each reduces to one PSI-CA execution; the client derives the
final figure locally.
"""

from __future__ import annotations

import random
import secrets
from dataclasses import dataclass
from fractions import Fraction

from . import group, minhash, psi_ca, wire
from .encoding import Reader, pack_bytes, pack_u32
from .errors import ProtocolAbort
from .group import GroupParams

FAMILY_SEED_BYTES = 32


@dataclass
class SimilarityResult:
    jaccard: Fraction
    mode: str  # "exact" | "approximated"
    intersection_estimate: Fraction | None = None
    k: int | None = None


def oracle_jaccard(a, b) -> Fraction:
    """Plaintext Jaccard index by direct enumeration. J(empty, empty) := 0."""
    a, b = set(a), set(b)
    union = len(a | b)
    if union == 0:
        return Fraction(0)
    return Fraction(len(a & b), union)


def oracle_intersection(a, b) -> int:
    return len(set(a) & set(b))


def intersection_from_jaccard(j, size_a: int, size_b: int) -> Fraction:
    """Recover the intersection size from the Jaccard index and set sizes."""
    j = Fraction(j)
    if not 0 <= j <= 1:
        raise ValueError("jaccard value must lie in [0, 1]")
    return j * (size_a + size_b) / (j + 1)


# ---------------------------------------------------------------------------
# PSI-CA message codecs

def encode_round1(params: GroupParams, msg: psi_ca.Round1Msg) -> bytes:
    out = bytearray(pack_u32(len(msg.masked_items)))
    for e in msg.masked_items:
        out += group.encode_element(params, e)
    return bytes(out)


def decode_round1(params: GroupParams, payload: bytes) -> psi_ca.Round1Msg:
    r = Reader(payload)
    count = r.u32()
    items = [group.decode_element(params, r.raw(params.element_size)) for _ in range(count)]
    r.done()
    return psi_ca.Round1Msg(items)


def encode_round2(params: GroupParams, msg: psi_ca.Round2Msg) -> bytes:
    out = bytearray(pack_u32(len(msg.blinded_items)))
    for e in msg.blinded_items:
        out += group.encode_element(params, e)
    out += pack_u32(len(msg.server_tags))
    for t in msg.server_tags:
        out += t
    return bytes(out)


def decode_round2(params: GroupParams, payload: bytes) -> psi_ca.Round2Msg:
    r = Reader(payload)
    count = r.u32()
    blinded = [group.decode_element(params, r.raw(params.element_size)) for _ in range(count)]
    n_tags = r.u32()
    tags = [r.raw(psi_ca.TAG_SIZE) for _ in range(n_tags)]
    r.done()
    return psi_ca.Round2Msg(blinded, tags)


def psi_ca_client_round(
    channel: wire.Channel, params: GroupParams, items, rng
) -> int:
    """Run the client half of one PSI-CA execution over an open channel."""
    state, round1 = psi_ca.client_start(params, items, rng)
    channel.send(wire.MSG_ROUND1, encode_round1(params, round1))
    round2 = decode_round2(params, channel.expect(wire.MSG_ROUND2))
    return psi_ca.client_finish(state, round2)


def psi_ca_server_round(
    channel: wire.Channel,
    params: GroupParams,
    items,
    rng,
    precomputed: psi_ca.PsiCaServerState | None = None,
) -> None:
    round1 = decode_round1(params, channel.expect(wire.MSG_ROUND1))
    round2 = psi_ca.server_respond(params, items, round1, rng, precomputed)
    channel.send(wire.MSG_ROUND2, encode_round2(params, round2))


# ---------------------------------------------------------------------------
# Handshake helpers

def _hello(proto: str, params: GroupParams, extra: bytes = b"") -> bytes:
    return pack_bytes(proto.encode()) + pack_bytes(group.serialize_params(params)) + extra


def read_hello(payload: bytes) -> tuple[str, GroupParams, Reader]:
    r = Reader(payload)
    proto = r.bytes_().decode("utf-8")
    params = group.deserialize_params(r.bytes_())
    return proto, params, r


def check_proto(got: str, expected: str) -> None:
    if got != expected:
        raise ProtocolAbort(f"peer requested protocol {got!r}, expected {expected!r}", "proto-mismatch")


def _check_params(params: GroupParams, inputs: dict) -> None:
    own = inputs.get("params")
    if own is not None and own != params:
        raise ProtocolAbort("group parameter mismatch in handshake", "params-mismatch")


# ---------------------------------------------------------------------------
# jaccard-exact

def _exact_client(channel, inputs, rng, proto="jaccard-exact"):
    params: GroupParams = inputs["params"]
    items = set(inputs["items"])
    if not items:
        raise ValueError("client set must be nonempty")
    v = len(items)
    channel.send(wire.MSG_HELLO, _hello(proto, params, pack_u32(v)))
    ack = Reader(channel.expect(wire.MSG_HELLO_ACK))
    w = ack.u32()
    ack.done()
    c = psi_ca_client_round(channel, params, items, rng)
    u = v + w - c
    return SimilarityResult(jaccard=Fraction(c, u), mode="exact", intersection_estimate=Fraction(c))


def _exact_server(channel, inputs, rng, proto="jaccard-exact"):
    items = set(inputs["items"])
    if not items:
        raise ValueError("server set must be nonempty")
    got, params, r = read_hello(channel.expect(wire.MSG_HELLO))
    check_proto(got, proto)
    _check_params(params, inputs)
    v = r.u32()
    r.done()
    if v < 1:
        raise ProtocolAbort("client declared an empty set", "empty-set")
    channel.send(wire.MSG_HELLO_ACK, pack_u32(len(items)))
    psi_ca_server_round(channel, params, items, rng, inputs.get("precomputed"))
    return {"client_size": v}


# ---------------------------------------------------------------------------
# psi-ca (bare cardinality, sizes exchanged per the two-party contract)

def _psi_ca_bare_client(channel, inputs, rng):
    params: GroupParams = inputs["params"]
    items = set(inputs["items"])
    channel.send(wire.MSG_HELLO, _hello("psi-ca", params, pack_u32(len(items))))
    ack = Reader(channel.expect(wire.MSG_HELLO_ACK))
    ack.u32()
    ack.done()
    return psi_ca_client_round(channel, params, items, rng)


def _psi_ca_bare_server(channel, inputs, rng):
    items = set(inputs["items"])
    got, params, r = read_hello(channel.expect(wire.MSG_HELLO))
    check_proto(got, "psi-ca")
    _check_params(params, inputs)
    v = r.u32()
    r.done()
    channel.send(wire.MSG_HELLO_ACK, pack_u32(len(items)))
    psi_ca_server_round(channel, params, items, rng, inputs.get("precomputed"))
    return {"client_size": v}


# ---------------------------------------------------------------------------
# jaccard-minhash and approx-card (fixed-size inputs, no client size on wire)

def _minhash_client(channel, inputs, rng, proto="jaccard-minhash"):
    params: GroupParams = inputs["params"]
    items = set(inputs["items"])
    k: int = inputs["k"]
    seed = inputs.get("family_seed")
    if seed is None:
        seed = (
            rng.getrandbits(8 * FAMILY_SEED_BYTES).to_bytes(FAMILY_SEED_BYTES, "big")
            if rng is not None
            else secrets.token_bytes(FAMILY_SEED_BYTES)
        )
    channel.send(
        wire.MSG_HELLO, _hello(proto, params, pack_u32(k) + pack_bytes(seed))
    )
    ack = Reader(channel.expect(wire.MSG_HELLO_ACK))
    w = ack.u32() if proto == "approx-card" else None
    ack.done()
    sketch = inputs.get("sketch")
    if sketch is None:
        sketch = minhash.sketch_multi(minhash.family_new(k, seed), items)
    elif sketch.k != k:
        raise ValueError("provided sketch does not match k")
    delta_count = psi_ca_client_round(channel, params, sketch.indexed_items(), rng)
    delta = Fraction(delta_count, k)
    if proto == "approx-card":
        v = len(items)
        return delta * (v + w) / (1 + delta)
    return SimilarityResult(jaccard=delta, mode="approximated", k=k)


def _minhash_server(channel, inputs, rng, proto="jaccard-minhash"):
    items = set(inputs["items"])
    got, params, r = read_hello(channel.expect(wire.MSG_HELLO))
    check_proto(got, proto)
    _check_params(params, inputs)
    k = r.u32()
    seed = r.bytes_()
    r.done()
    expected_seed = inputs.get("expected_seed")
    if expected_seed is not None and expected_seed != seed:
        raise ProtocolAbort("family seed mismatch in handshake", "seed-mismatch")
    if inputs.get("expected_k") is not None and inputs["expected_k"] != k:
        raise ProtocolAbort("sketch size mismatch in handshake", "k-mismatch")
    ack = pack_u32(len(items)) if proto == "approx-card" else b""
    channel.send(wire.MSG_HELLO_ACK, ack)
    sketch = inputs.get("sketch")
    if sketch is None:
        sketch = minhash.sketch_multi(minhash.family_new(k, seed), items)
    elif sketch.k != k:
        raise ProtocolAbort("provided sketch does not match negotiated k", "k-mismatch")
    psi_ca_server_round(channel, params, sketch.indexed_items(), rng)
    return {"k": k}


def _approx_card_client(channel, inputs, rng):
    return _minhash_client(channel, inputs, rng, proto="approx-card")


def _approx_card_server(channel, inputs, rng):
    return _minhash_server(channel, inputs, rng, proto="approx-card")


def _media_client(channel, inputs, rng):
    return _exact_client(channel, inputs, rng, proto="media")


def _media_server(channel, inputs, rng):
    return _exact_server(channel, inputs, rng, proto="media")


wire.register_protocol("psi-ca", _psi_ca_bare_client, _psi_ca_bare_server)
wire.register_protocol("jaccard-exact", _exact_client, _exact_server)
wire.register_protocol("jaccard-minhash", _minhash_client, _minhash_server)
wire.register_protocol("approx-card", _approx_card_client, _approx_card_server)
wire.register_protocol("media", _media_client, _media_server)


# ---------------------------------------------------------------------------
# Library entry points (both inputs local, any transport)

def jaccard_exact(
    client_items,
    server_items,
    transport=None,
    client_rng: random.Random | None = None,
    server_rng: random.Random | None = None,
    params: GroupParams | None = None,
) -> SimilarityResult:
    params = params or group.DEFAULT_PARAMS
    result, _ = wire.loopback(
        "jaccard-exact",
        {"params": params, "items": client_items},
        {"items": server_items},
        channels=transport,
        client_rng=client_rng,
        server_rng=server_rng,
    )
    return result


def jaccard_minhash(
    client_items,
    server_items,
    k: int,
    shared_family_seed: bytes | None = None,
    transport=None,
    client_rng: random.Random | None = None,
    server_rng: random.Random | None = None,
    params: GroupParams | None = None,
) -> SimilarityResult:
    params = params or group.DEFAULT_PARAMS
    result, _ = wire.loopback(
        "jaccard-minhash",
        {"params": params, "items": client_items, "k": k, "family_seed": shared_family_seed},
        {"items": server_items},
        channels=transport,
        client_rng=client_rng,
        server_rng=server_rng,
    )
    return result


def approx_cardinality_size_hiding(
    client_items,
    server_items,
    k: int,
    seed: bytes | None = None,
    transport=None,
    client_rng: random.Random | None = None,
    server_rng: random.Random | None = None,
    params: GroupParams | None = None,
) -> Fraction:
    params = params or group.DEFAULT_PARAMS
    result, _ = wire.loopback(
        "approx-card",
        {"params": params, "items": client_items, "k": k, "family_seed": seed},
        {"items": server_items},
        channels=transport,
        client_rng=client_rng,
        server_rng=server_rng,
    )
    return result
