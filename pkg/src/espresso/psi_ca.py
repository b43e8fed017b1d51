"""Two-party private set intersection cardinality over a DDH-hard subgroup.

The client masks hashed items with a random exponent; the server blindly
re-exponentiates and shuffles them, and publishes short tags of its own
blinded items. The client strips its mask and counts tag matches, learning
only the intersection size.
"""

from __future__ import annotations

import hashlib
import random
import secrets
from dataclasses import dataclass, field

from . import group
from .encoding import indexed_item
from .errors import ProtocolAbort
from .group import GroupParams

TAG_SIZE = 32
_TAG_PREFIX = b"ESPR:T:"  # domain-separated from hash_to_group

RANDOM_TOKEN_BYTES = 8  # width of the filler tokens in precomputed bit tables


def _tag(params: GroupParams, element: int) -> bytes:
    return hashlib.sha256(
        _TAG_PREFIX + group.encode_element(params, element)
    ).digest()


def _check_items(items) -> list[bytes]:
    items = list(items)
    if not items:
        raise ValueError("input set must be nonempty")
    if len(set(items)) != len(items):
        raise ValueError("input items must be distinct")
    return sorted(items)


@dataclass
class Round1Msg:
    """Client -> server: masked items, one per input item, in canonical order."""

    masked_items: list[int]


@dataclass
class Round2Msg:
    """Server -> client: shuffled blinded items plus the server's item tags."""

    blinded_items: list[int]
    server_tags: list[bytes]


@dataclass
class PsiCaClientState:
    params: GroupParams
    r_a: int
    item_count: int
    round1_sent: bool = True


@dataclass
class PsiCaServerState:
    params: GroupParams
    r_b: int
    precomputed_tags: list[bytes] = field(default_factory=list)


def client_start(
    params: GroupParams,
    items,
    rng: random.Random | None = None,
    r_a: int | None = None,
) -> tuple[PsiCaClientState, Round1Msg]:
    """Mask the client's items with a fresh session exponent."""
    ordered = _check_items(items)
    if r_a is None:
        r_a = group.random_scalar(params, rng)
    masked = [
        group.element_pow(params, group.hash_to_group(params, item), r_a)
        for item in ordered
    ]
    return PsiCaClientState(params, r_a, len(ordered)), Round1Msg(masked)


def client_start_with_masks(
    params: GroupParams, r_a: int, masked_by_item: dict[bytes, int]
) -> tuple[PsiCaClientState, Round1Msg]:
    """Round-1 construction from pre-masked items (table-driven path).

    Produces bit-identical output to client_start given the same exponent,
    since items are emitted in the same canonical order.
    """
    ordered = _check_items(masked_by_item.keys())
    masked = [masked_by_item[item] for item in ordered]
    return PsiCaClientState(params, r_a, len(ordered)), Round1Msg(masked)


def server_precompute(
    params: GroupParams, items, rng: random.Random | None = None
) -> tuple[PsiCaServerState, list[bytes]]:
    """Fix the server exponent and item tags once, reusable across sessions."""
    ordered = _check_items(items)
    r_b = group.random_scalar(params, rng)
    shuffler = rng if rng is not None else random.SystemRandom()
    shuffler.shuffle(ordered)
    tags = [
        _tag(params, group.element_pow(params, group.hash_to_group(params, item), r_b))
        for item in ordered
    ]
    return PsiCaServerState(params, r_b, tags), tags


def server_respond(
    params: GroupParams,
    items,
    msg: Round1Msg,
    rng: random.Random | None = None,
    precomputed: PsiCaServerState | None = None,
) -> Round2Msg:
    """Blind, shuffle and tag. Validates every received element first."""
    for e in msg.masked_items:
        if not params.is_subgroup_element(e):
            raise ProtocolAbort("round 1 element outside the subgroup", "bad-element")

    if precomputed is not None:
        state = precomputed
    else:
        state, _ = server_precompute(params, items, rng)

    blinded = [group.element_pow(params, e, state.r_b) for e in msg.masked_items]
    shuffler = rng if rng is not None else random.SystemRandom()
    shuffler.shuffle(blinded)
    return Round2Msg(blinded, list(state.precomputed_tags))


def client_finish(state: PsiCaClientState, msg: Round2Msg) -> int:
    """Strip the client mask and count tag matches: the intersection size."""
    if not state.round1_sent:
        raise ProtocolAbort("client has not sent round 1", "out-of-order")
    if len(msg.blinded_items) != state.item_count:
        raise ProtocolAbort(
            f"expected {state.item_count} blinded items, got {len(msg.blinded_items)}",
            "length-mismatch",
        )
    r_inv = group.scalar_inv(state.params, state.r_a)
    server_tags = set(msg.server_tags)
    count = 0
    for e in msg.blinded_items:
        unblinded = group.element_pow(state.params, e, r_inv)
        if _tag(state.params, unblinded) in server_tags:
            count += 1
    return count


@dataclass(frozen=True)
class BitTableEntry:
    """Pre-masked encodings for one sampled position: bit 0, bit 1, filler."""

    index: int
    alpha_zero: int
    alpha_one: int
    alpha_rand: int
    rand_token: bytes


def bit_item(bit: int, index: int) -> bytes:
    """Canonical position-encoded item for a single bit value."""
    return indexed_item(bytes([bit]), index)


def precompute_bit_tables(
    params: GroupParams,
    r: int,
    indices,
    rng: random.Random | None = None,
) -> list[BitTableEntry]:
    """Client-side offline masking of per-position bit encodings.

    For every sampled position the table holds the masked encodings of bit 0,
    bit 1, and a fresh random filler token; online, the client just selects
    one of the three per position.
    """
    indices = list(indices)
    if len(set(indices)) != len(indices):
        raise ValueError("indices must be distinct")

    def mask(item: bytes) -> int:
        return group.element_pow(params, group.hash_to_group(params, item), r)

    entries = []
    for idx in indices:
        token = (
            rng.getrandbits(8 * RANDOM_TOKEN_BYTES).to_bytes(RANDOM_TOKEN_BYTES, "big")
            if rng is not None
            else secrets.token_bytes(RANDOM_TOKEN_BYTES)
        )
        entries.append(
            BitTableEntry(
                index=idx,
                alpha_zero=mask(bit_item(0, idx)),
                alpha_one=mask(bit_item(1, idx)),
                alpha_rand=mask(indexed_item(token, idx)),
                rand_token=token,
            )
        )
    return entries
