"""Image similarity via HSV color-histogram features.

Pixels are binned into 16 hue x 4 saturation x 4 value buckets; a bucket
becomes a feature when its share of pixels exceeds a threshold. Feature
sets then feed the private similarity protocols unchanged.
"""

from __future__ import annotations

import colorsys
import random
from dataclasses import dataclass
from fractions import Fraction

from . import group, similarity
from .similarity import SimilarityResult

HUE_BINS = 16
SAT_BINS = 4
VAL_BINS = 4
TOTAL_BINS = HUE_BINS * SAT_BINS * VAL_BINS

DEFAULT_THRESHOLD = Fraction(1, 512)


@dataclass(frozen=True)
class FeatureSet:
    features: frozenset[int]

    def __post_init__(self):
        if any(not 0 <= f < TOTAL_BINS for f in self.features):
            raise ValueError("feature identifiers must lie in [0, 255]")

    def as_items(self) -> set[bytes]:
        return {f.to_bytes(2, "big") for f in self.features}


def parse_ppm(data: bytes) -> tuple[int, int, list[tuple[int, int, int]]]:
    """Binary PPM (P6) with 8-bit samples."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PPM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if tokens[0] != b"P6":
        raise ValueError("only binary PPM (P6) is supported")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if width < 1 or height < 1:
        raise ValueError("image must be nonempty")
    if maxval != 255:
        raise ValueError("only 8-bit PPM samples are supported")
    raw = data[pos : pos + 3 * width * height]
    if len(raw) != 3 * width * height:
        raise ValueError("truncated PPM pixel data")
    pixels = [
        (raw[i], raw[i + 1], raw[i + 2]) for i in range(0, len(raw), 3)
    ]
    return width, height, pixels


def write_ppm(width: int, height: int, pixels) -> bytes:
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    body = bytes(c for px in pixels for c in px)
    return header + body


def pixel_bin(rgb: tuple[int, int, int]) -> int:
    r, g, b = (c / 255.0 for c in rgb)
    h, s, v = colorsys.rgb_to_hsv(r, g, b)
    hb = min(int(h * HUE_BINS), HUE_BINS - 1)
    sb = min(int(s * SAT_BINS), SAT_BINS - 1)
    vb = min(int(v * VAL_BINS), VAL_BINS - 1)
    return (hb * SAT_BINS + sb) * VAL_BINS + vb


def extract_features(pixels, threshold=DEFAULT_THRESHOLD) -> FeatureSet:
    """Histogram the pixels and keep the bins whose share exceeds threshold."""
    pixels = list(pixels)
    if not pixels:
        raise ValueError("image must contain at least one pixel")
    counts: dict[int, int] = {}
    for px in pixels:
        if len(px) != 3 or any(not 0 <= c <= 255 for c in px):
            raise ValueError(f"malformed pixel {px!r}")
        b = pixel_bin(px)
        counts[b] = counts.get(b, 0) + 1
    total = len(pixels)
    cutoff = Fraction(threshold)
    return FeatureSet(
        features=frozenset(b for b, c in counts.items() if Fraction(c, total) > cutoff)
    )


def features_from_ppm(data: bytes, threshold=DEFAULT_THRESHOLD) -> FeatureSet:
    _, _, pixels = parse_ppm(data)
    return extract_features(pixels, threshold)


def parse_feature_file(text: str) -> FeatureSet:
    """Newline-separated bin identifiers."""
    ids = {int(line) for line in text.split() if line.strip()}
    return FeatureSet(features=frozenset(ids))


def _checked(fs: FeatureSet) -> set[bytes]:
    items = fs.as_items()
    if not items:
        raise ValueError("feature set is empty (threshold too high?)")
    return items


def media_similarity(
    features_a: FeatureSet,
    features_b: FeatureSet,
    transport=None,
    client_rng: random.Random | None = None,
    server_rng: random.Random | None = None,
    params=None,
) -> SimilarityResult:
    params = params or group.DEFAULT_PARAMS
    result, _ = similarity.wire.loopback(
        "media",
        {"params": params, "items": _checked(features_a)},
        {"items": _checked(features_b)},
        channels=transport,
        client_rng=client_rng,
        server_rng=server_rng,
    )
    return result


def media_similarity_approx(
    features_a: FeatureSet,
    features_b: FeatureSet,
    k: int,
    transport=None,
    client_rng: random.Random | None = None,
    server_rng: random.Random | None = None,
    params=None,
    family_seed: bytes | None = None,
) -> SimilarityResult:
    return similarity.jaccard_minhash(
        _checked(features_a), _checked(features_b), k, family_seed,
        transport, client_rng, server_rng, params=params or group.DEFAULT_PARAMS,
    )
