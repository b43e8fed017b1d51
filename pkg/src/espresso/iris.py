"""Privacy-preserving iris matching.

Two PSI-CA executions per rotation: one over sampled mask bits (how many
sampled positions are valid on both sides) and one over sampled iris bits
(how many of those agree). Their ratio estimates the weighted Hamming
distance without revealing either code.
"""

from __future__ import annotations

import hashlib
import random
import secrets
from dataclasses import dataclass
from fractions import Fraction

from . import group, psi_ca, wire
from .encoding import Reader, indexed_item, pack_bytes, pack_u32
from .errors import IndeterminateMatch, ProtocolAbort
from .group import GroupParams
from .psi_ca import RANDOM_TOKEN_BYTES, bit_item
from .similarity import (
    _check_params,
    _hello,
    check_proto,
    psi_ca_client_round,
    psi_ca_server_round,
)

DEFAULT_N = 2048
DEFAULT_K = 25
DEFAULT_MAX_SHIFT = 5
NONCE_BYTES = 16

_INDEX_PREFIX = b"ESPR:RI:"


@dataclass(frozen=True)
class IrisCode:
    bits: tuple[int, ...]
    mask: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != len(self.mask):
            raise ValueError("bits and mask must have equal length")
        if any(b not in (0, 1) for b in self.bits + self.mask):
            raise ValueError("bits and mask must be 0/1 valued")

    @property
    def n(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class SampleIndexSet:
    indices: tuple[int, ...]  # distinct, 1-based
    seed: bytes


def parse_iris_file(text: str) -> IrisCode:
    """Three lines: n, bits as '0'/'1' characters, mask likewise."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) != 3:
        raise ValueError("iris file must have exactly three nonempty lines")
    n = int(lines[0])
    if len(lines[1]) != n or len(lines[2]) != n:
        raise ValueError("bit strings do not match the declared length")
    return IrisCode(
        bits=tuple(int(c) for c in lines[1]),
        mask=tuple(int(c) for c in lines[2]),
    )


def format_iris_file(code: IrisCode) -> str:
    return "{}\n{}\n{}\n".format(
        code.n,
        "".join(str(b) for b in code.bits),
        "".join(str(b) for b in code.mask),
    )


def whd(a: IrisCode, b: IrisCode) -> Fraction:
    """Plaintext weighted Hamming distance, the oracle for the protocol."""
    if a.n != b.n:
        raise ValueError("iris codes must have equal length")
    combined = [ma & mb for ma, mb in zip(a.mask, b.mask)]
    weight = sum(combined)
    if weight == 0:
        raise IndeterminateMatch("combined mask is all zero")
    mismatches = sum(
        1 for ba, bb, m in zip(a.bits, b.bits, combined) if m and ba != bb
    )
    return Fraction(mismatches, weight)


def rotate(code: IrisCode, shift: int) -> IrisCode:
    """Cyclic shift of bits and mask together; positive shifts move right."""
    n = code.n
    if abs(shift) > n:
        raise ValueError("shift exceeds code length")
    return IrisCode(
        bits=tuple(code.bits[(i - shift) % n] for i in range(n)),
        mask=tuple(code.mask[(i - shift) % n] for i in range(n)),
    )


def derive_indices(seed: bytes, n: int, k: int) -> SampleIndexSet:
    """Expand shared nonce material into k distinct positions in [1, n]."""
    if k > n:
        raise ValueError("cannot sample more distinct positions than exist")
    limit = (1 << 32) - ((1 << 32) % n)
    chosen: list[int] = []
    seen: set[int] = set()
    counter = 0
    while len(chosen) < k:
        block = hashlib.sha256(
            _INDEX_PREFIX + seed + counter.to_bytes(8, "big")
        ).digest()
        counter += 1
        for off in range(0, len(block) - 3, 4):
            val = int.from_bytes(block[off : off + 4], "big")
            if val >= limit:
                continue
            idx = val % n + 1
            if idx not in seen:
                seen.add(idx)
                chosen.append(idx)
                if len(chosen) == k:
                    break
    return SampleIndexSet(indices=tuple(chosen), seed=seed)


def combine_nonces(nonce_a: bytes, nonce_b: bytes) -> bytes:
    # order-independent so both roles derive the same seed
    return b"".join(sorted((nonce_a, nonce_b)))


def negotiate_indices(
    channel: wire.Channel, n: int, k: int, rng: random.Random | None = None
) -> SampleIndexSet:
    """Symmetric nonce exchange over an open channel; both sides derive R."""
    nonce = _fresh_nonce(rng)
    channel.send(wire.MSG_NONCE, nonce)
    peer = channel.expect(wire.MSG_NONCE)
    return derive_indices(combine_nonces(nonce, peer), n, k)


def _fresh_nonce(rng: random.Random | None) -> bytes:
    if rng is None:
        return secrets.token_bytes(NONCE_BYTES)
    return rng.getrandbits(8 * NONCE_BYTES).to_bytes(NONCE_BYTES, "big")


def extract(
    x: tuple[int, ...],
    y: tuple[int, ...],
    r: SampleIndexSet,
    rng: random.Random | None = None,
    fillers: dict[int, bytes] | None = None,
) -> set[bytes]:
    """Position-encoded tokens for x's sampled bits, valid where y's bit is 1.

    Where y's bit is 0 a fresh random token is emitted instead (or a
    caller-supplied filler, for the precomputed-table path).
    """
    if len(x) != len(y):
        raise ValueError("bit vectors must have equal length")
    tokens: set[bytes] = set()
    for idx in r.indices:
        if y[idx - 1] == 1:
            tokens.add(bit_item(x[idx - 1], idx))
        elif fillers is not None:
            tokens.add(indexed_item(fillers[idx], idx))
        else:
            raw = (
                rng.getrandbits(8 * RANDOM_TOKEN_BYTES).to_bytes(RANDOM_TOKEN_BYTES, "big")
                if rng is not None
                else secrets.token_bytes(RANDOM_TOKEN_BYTES)
            )
            tokens.add(indexed_item(raw, idx))
    return tokens


@dataclass(frozen=True)
class RotationScore:
    shift: int
    c1: int
    c2: int
    distance: Fraction | None


@dataclass(frozen=True)
class IrisMatchResult:
    matched: bool
    rotations: tuple[RotationScore, ...]
    threshold: Fraction

    @property
    def best_distance(self) -> Fraction:
        dists = [r.distance for r in self.rotations if r.distance is not None]
        return min(dists)


def _distance(c1: int, c2: int, n: int, paper_formula: bool) -> Fraction | None:
    if c1 == 0:
        return None
    if paper_formula:
        # literal printed decision quantity, kept behind a compatibility flag
        return Fraction(n - c2, c1)
    return Fraction(c1 - c2, c1)


def _decide(scores, threshold, n, paper_formula) -> IrisMatchResult:
    scores = tuple(scores)
    if all(s.distance is None for s in scores):
        raise IndeterminateMatch("no rotation produced a usable mask overlap")
    threshold = Fraction(threshold)
    matched = any(s.distance is not None and s.distance < threshold for s in scores)
    return IrisMatchResult(matched=matched, rotations=scores, threshold=threshold)


# ---------------------------------------------------------------------------
# Wire protocol

def _table_masks(params, r_exp, sample, bits, mask, rng):
    """Round-1 masks selected from a precomputed bit table."""
    table = psi_ca.precompute_bit_tables(params, r_exp, sample.indices, rng)
    masked: dict[bytes, int] = {}
    for entry in table:
        pos = entry.index
        if mask[pos - 1] == 1:
            item = bit_item(bits[pos - 1], pos)
            alpha = entry.alpha_one if bits[pos - 1] else entry.alpha_zero
        else:
            item = indexed_item(entry.rand_token, pos)
            alpha = entry.alpha_rand
        masked[item] = alpha
    return masked


def _client_psi_round(channel, params, items, rng):
    return psi_ca_client_round(channel, params, items, rng)


def _client_psi_round_tables(channel, params, sample, bits, mask, rng):
    from .similarity import decode_round2, encode_round1

    r_exp = group.random_scalar(params, rng)
    masked = _table_masks(params, r_exp, sample, bits, mask, rng)
    state, round1 = psi_ca.client_start_with_masks(params, r_exp, masked)
    channel.send(wire.MSG_ROUND1, encode_round1(params, round1))
    round2 = decode_round2(params, channel.expect(wire.MSG_ROUND2))
    return psi_ca.client_finish(state, round2)


def _iris_client(channel, inputs, rng):
    params: GroupParams = inputs["params"]
    code: IrisCode = inputs["iris"]
    k: int = inputs.get("k", DEFAULT_K)
    threshold = Fraction(inputs["threshold"])
    max_shift: int = inputs.get("max_shift", DEFAULT_MAX_SHIFT)
    paper_formula: bool = inputs.get("paper_formula", False)
    use_tables: bool = inputs.get("use_tables", False)
    n = code.n
    if k > n:
        raise ValueError("k cannot exceed the code length")

    nonce = _fresh_nonce(rng)
    channel.send(
        wire.MSG_HELLO,
        _hello("iris", params, pack_u32(n) + pack_u32(k) + pack_u32(max_shift) + pack_bytes(nonce)),
    )
    ack = Reader(channel.expect(wire.MSG_HELLO_ACK))
    peer_nonce = ack.bytes_()
    ack.done()
    sample = derive_indices(combine_nonces(nonce, peer_nonce), n, k)

    scores = []
    for shift in range(-max_shift, max_shift + 1):
        rotated = rotate(code, shift)
        if use_tables:
            c1 = _client_psi_round_tables(channel, params, sample, rotated.mask, rotated.mask, rng)
            c2 = _client_psi_round_tables(channel, params, sample, rotated.bits, rotated.mask, rng)
        else:
            mask_tokens = extract(rotated.mask, rotated.mask, sample, rng)
            bit_tokens = extract(rotated.bits, rotated.mask, sample, rng)
            c1 = _client_psi_round(channel, params, mask_tokens, rng)
            c2 = _client_psi_round(channel, params, bit_tokens, rng)
        scores.append(RotationScore(shift, c1, c2, _distance(c1, c2, n, paper_formula)))
    return _decide(scores, threshold, n, paper_formula)


def _iris_server(channel, inputs, rng):
    code: IrisCode = inputs["iris"]
    got, params, r = similarity_read_hello(channel)
    check_proto(got, "iris")
    _check_params(params, inputs)
    n, k, max_shift = r.u32(), r.u32(), r.u32()
    peer_nonce = r.bytes_()
    r.done()
    if n != code.n:
        raise ProtocolAbort("iris length mismatch in handshake", "length-mismatch")
    nonce = _fresh_nonce(rng)
    channel.send(wire.MSG_HELLO_ACK, pack_bytes(nonce))
    sample = derive_indices(combine_nonces(peer_nonce, nonce), n, k)

    # server tokens are rotation-independent: extract once, reuse per round
    mask_tokens = extract(code.mask, code.mask, sample, rng)
    bit_tokens = extract(code.bits, code.mask, sample, rng)
    for _ in range(2 * max_shift + 1):
        psi_ca_server_round(channel, params, mask_tokens, rng)
        psi_ca_server_round(channel, params, bit_tokens, rng)
    return {"rotations": 2 * max_shift + 1}


def similarity_read_hello(channel):
    from .similarity import read_hello

    got, params, r = read_hello(channel.expect(wire.MSG_HELLO))
    return got, params, r


wire.register_protocol("iris", _iris_client, _iris_server)


def iris_match(
    a: IrisCode,
    b: IrisCode,
    k: int = DEFAULT_K,
    t=Fraction(1, 3),
    max_shift: int = DEFAULT_MAX_SHIFT,
    transport=None,
    client_rng: random.Random | None = None,
    server_rng: random.Random | None = None,
    params: GroupParams | None = None,
    paper_formula: bool = False,
    use_tables: bool = False,
) -> IrisMatchResult:
    """Run the full private matching protocol with both codes local."""
    params = params or group.DEFAULT_PARAMS
    result, _ = wire.loopback(
        "iris",
        {
            "params": params,
            "iris": a,
            "k": k,
            "threshold": t,
            "max_shift": max_shift,
            "paper_formula": paper_formula,
            "use_tables": use_tables,
        },
        {"iris": b},
        channels=transport,
        client_rng=client_rng,
        server_rng=server_rng,
    )
    return result
