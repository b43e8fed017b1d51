"""Two-party privacy-preserving set-similarity toolkit.

Exact and sketch-approximated Jaccard similarity over a blind-exponentiation
PSI-CA core, with adapters for documents, iris codes and image features,
usable as a library, over a framed byte-stream protocol, or from the CLI.
"""

from . import attack, bench, docsim, group, iris, media, minhash, psi_ca, similarity, wire
from .group import DEFAULT_PARAMS, TOY_PARAMS, GroupParams, generate_params
from .similarity import (
    SimilarityResult,
    approx_cardinality_size_hiding,
    intersection_from_jaccard,
    jaccard_exact,
    jaccard_minhash,
    oracle_intersection,
    oracle_jaccard,
)

__version__ = "0.1.0"

__all__ = [
    "attack",
    "bench",
    "docsim",
    "group",
    "iris",
    "media",
    "minhash",
    "psi_ca",
    "similarity",
    "wire",
    "DEFAULT_PARAMS",
    "TOY_PARAMS",
    "GroupParams",
    "generate_params",
    "SimilarityResult",
    "approx_cardinality_size_hiding",
    "intersection_from_jaccard",
    "jaccard_exact",
    "jaccard_minhash",
    "oracle_intersection",
    "oracle_jaccard",
]
