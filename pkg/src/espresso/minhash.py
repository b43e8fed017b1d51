"""Jaccard estimators: multi-hash and single-hash min-wise sketches plus
position sampling for fixed-length vectors.

Hash functions are linear transforms h(x) = a*x + b over the Mersenne prime
field 2^61 - 1; items enter the field as truncated 64-bit digests.
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass
from fractions import Fraction

from .encoding import Reader, indexed_item, pack_bytes, pack_u32
from .errors import DecodeError

FIELD_PRIME = (1 << 61) - 1
_FAMILY_PREFIX = b"ESPR:MF:"
_ITEM_PREFIX = b"ESPR:MI:"


def item_digest(item: bytes) -> int:
    """64-bit truncated digest of an item, reduced into the hash field."""
    h = hashlib.sha256(_ITEM_PREFIX + item).digest()
    return int.from_bytes(h[:8], "big") % FIELD_PRIME


@dataclass(frozen=True)
class HashFamily:
    k: int
    field_prime: int
    coefficients: tuple[tuple[int, int], ...]
    seed: bytes

    def apply(self, i: int, x: int) -> int:
        a, b = self.coefficients[i]
        return (a * x + b) % self.field_prime


def family_new(k: int, seed: bytes) -> HashFamily:
    """Derive k linear-transform hash functions deterministically from a seed."""
    if k < 1:
        raise ValueError("k must be at least 1")
    coeffs = []
    for i in range(k):
        h = hashlib.sha256(_FAMILY_PREFIX + seed + struct.pack(">I", i)).digest()
        a = 1 + int.from_bytes(h[:16], "big") % (FIELD_PRIME - 1)
        b = int.from_bytes(h[16:], "big") % FIELD_PRIME
        coeffs.append((a, b))
    return HashFamily(k=k, field_prime=FIELD_PRIME, coefficients=tuple(coeffs), seed=seed)


@dataclass(frozen=True)
class MinHashSketch:
    """Per-function minimum items; entry i carries implicit index i+1."""

    k: int
    entries: tuple[bytes, ...]

    def indexed_items(self) -> list[bytes]:
        """Position-encoded entries, the PSI-CA input representation."""
        return [indexed_item(item, i + 1) for i, item in enumerate(self.entries)]


def sketch_multi(family: HashFamily, items) -> MinHashSketch:
    """One minimum per hash function; ties broken by smaller item digest."""
    pool = [(item_digest(it), it) for it in sorted(set(items))]
    if not pool:
        raise ValueError("input set must be nonempty")
    entries = []
    for a, b in family.coefficients:
        p = family.field_prime
        best = min(pool, key=lambda dv: ((a * dv[0] + b) % p, dv[0], dv[1]))
        entries.append(best[1])
    return MinHashSketch(k=family.k, entries=tuple(entries))


def estimate_multi(sa: MinHashSketch, sb: MinHashSketch) -> Fraction:
    if sa.k != sb.k:
        raise ValueError("sketches were built with different k")
    matches = sum(1 for x, y in zip(sa.entries, sb.entries) if x == y)
    return Fraction(matches, sa.k)


@dataclass(frozen=True)
class SingleHashSketch:
    """Pre-images of the k smallest hash values under one shared function."""

    k: int
    survivors: frozenset[bytes]


def _smallest(family: HashFamily, items, k: int) -> list[bytes]:
    keyed = sorted(
        ((family.apply(0, item_digest(it)), item_digest(it), it) for it in items)
    )
    return [it for _, _, it in keyed[:k]]


def sketch_single(family: HashFamily, items, k: int) -> SingleHashSketch:
    items = set(items)
    if not items:
        raise ValueError("input set must be nonempty")
    if k < 1:
        raise ValueError("k must be at least 1")
    return SingleHashSketch(k=k, survivors=frozenset(_smallest(family, items, k)))


def estimate_single(
    family: HashFamily, sa: SingleHashSketch, sb: SingleHashSketch
) -> Fraction:
    if sa.k != sb.k:
        raise ValueError("sketches were built with different k")
    union_k = set(_smallest(family, sa.survivors | sb.survivors, sa.k))
    both = sa.survivors & sb.survivors
    return Fraction(len(union_k & both), len(union_k))


def vector_sample_estimate(
    a: list[bytes], b: list[bytes], k: int, rng: random.Random
) -> Fraction:
    """Estimate vector similarity by comparing k uniformly sampled positions."""
    if len(a) != len(b):
        raise ValueError("vectors must have equal length")
    if not a:
        raise ValueError("vectors must be nonempty")
    if k < 1:
        raise ValueError("k must be at least 1")
    n = len(a)
    matches = 0
    for _ in range(k):
        i = rng.randrange(n)
        if a[i] == b[i]:
            matches += 1
    return Fraction(matches, k)


def serialize_sketch(sketch: MinHashSketch) -> bytes:
    out = bytearray(pack_u32(sketch.k))
    for i, item in enumerate(sketch.entries):
        out += pack_bytes(item) + pack_u32(i + 1)
    return bytes(out)


def deserialize_sketch(data: bytes) -> MinHashSketch:
    r = Reader(data)
    k = r.u32()
    entries = []
    for i in range(k):
        entries.append(r.bytes_())
        if r.u32() != i + 1:
            raise DecodeError("sketch entry index out of sequence", "bad-index")
    r.done()
    return MinHashSketch(k=k, entries=tuple(entries))
