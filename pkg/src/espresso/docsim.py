"""Document similarity over n-gram sets (default trigrams)."""

from __future__ import annotations

import random
import unicodedata
from dataclasses import dataclass, field

from . import group, similarity
from .similarity import SimilarityResult

ALPHABET = set("abcdefghijklmnopqrstuvwxyz0123456789")


@dataclass(frozen=True)
class TrigramSet:
    n: int
    grams: frozenset[str]
    short_input: bool = field(default=False, compare=False)

    def as_items(self) -> set[bytes]:
        return {g.encode("ascii") for g in self.grams}

    def sorted_grams(self) -> list[str]:
        return sorted(self.grams)


def normalize(text: str) -> str:
    """Lowercase, NFC-normalize and keep only [a-z0-9]."""
    text = unicodedata.normalize("NFC", text).lower()
    return "".join(ch for ch in text if ch in ALPHABET)


def trigram_set(text: str, n: int = 3) -> TrigramSet:
    if n < 1:
        raise ValueError("gram length must be at least 1")
    norm = normalize(text)
    if len(norm) < n:
        return TrigramSet(n=n, grams=frozenset(), short_input=True)
    grams = frozenset(norm[i : i + n] for i in range(len(norm) - n + 1))
    return TrigramSet(n=n, grams=grams)


def doc_similarity(
    doc_a: str,
    doc_b: str,
    transport=None,
    client_rng: random.Random | None = None,
    server_rng: random.Random | None = None,
    params=None,
    n: int = 3,
) -> SimilarityResult:
    """Exact private Jaccard similarity of two documents' trigram sets."""
    a, b = trigram_set(doc_a, n), trigram_set(doc_b, n)
    if not a.grams or not b.grams:
        raise ValueError("both documents must yield nonempty trigram sets")
    return similarity.jaccard_exact(
        a.as_items(), b.as_items(), transport, client_rng, server_rng,
        params=params or group.DEFAULT_PARAMS,
    )


def doc_similarity_approx(
    doc_a: str,
    doc_b: str,
    k: int,
    transport=None,
    client_rng: random.Random | None = None,
    server_rng: random.Random | None = None,
    params=None,
    family_seed: bytes | None = None,
    n: int = 3,
) -> SimilarityResult:
    """Sketch-approximated private similarity of two documents."""
    a, b = trigram_set(doc_a, n), trigram_set(doc_b, n)
    if not a.grams or not b.grams:
        raise ValueError("both documents must yield nonempty trigram sets")
    return similarity.jaccard_minhash(
        a.as_items(), b.as_items(), k, family_seed, transport,
        client_rng, server_rng, params=params or group.DEFAULT_PARAMS,
    )
