import colorsys
import random
from fractions import Fraction

import pytest

from espresso import media, similarity


def solid_image(rgb, w=8, h=8):
    return media.write_ppm(w, h, [rgb] * (w * h))


def noisy_pixels(rng, n):
    return [(rng.randrange(256), rng.randrange(256), rng.randrange(256))
            for _ in range(n)]


def oracle_features(pixels, threshold):
    """Independent histogram computation straight from the definition."""
    counts = {}
    for r, g, b in pixels:
        h, s, v = colorsys.rgb_to_hsv(r / 255, g / 255, b / 255)
        key = (min(int(h * 16), 15) * 4 + min(int(s * 4), 3)) * 4 + min(int(v * 4), 3)
        counts[key] = counts.get(key, 0) + 1
    total = len(pixels)
    return frozenset(k for k, c in counts.items() if Fraction(c, total) > threshold)


def test_ppm_round_trip():
    rng = random.Random(0)
    pixels = noisy_pixels(rng, 12 * 5)
    data = media.write_ppm(12, 5, pixels)
    w, h, parsed = media.parse_ppm(data)
    assert (w, h) == (12, 5)
    assert parsed == pixels


def test_ppm_parser_handles_comments():
    data = b"P6\n# a comment\n2 1\n# another\n255\n" + bytes(6)
    w, h, px = media.parse_ppm(data)
    assert (w, h, px) == (2, 1, [(0, 0, 0), (0, 0, 0)])


def test_ppm_parser_rejects_garbage():
    with pytest.raises(ValueError):
        media.parse_ppm(b"P3\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(ValueError):
        media.parse_ppm(b"P6\n1 1\n65535\n\x00\x00")
    with pytest.raises(ValueError):
        media.parse_ppm(b"P6\n2 2\n255\n\x00\x00\x00")  # truncated pixels
    with pytest.raises(ValueError):
        media.parse_ppm(b"P6\n0 1\n255\n")


def test_pixel_bin_range_and_extremes():
    assert 0 <= media.pixel_bin((255, 0, 0)) < media.TOTAL_BINS
    # pure red: hue 0, full saturation, full value
    assert media.pixel_bin((255, 0, 0)) == (0 * 4 + 3) * 4 + 3
    # black: v = 0 bucket
    assert media.pixel_bin((0, 0, 0)) == 0


def test_features_match_oracle():
    rng = random.Random(1)
    pixels = noisy_pixels(rng, 4096)
    for thr in (Fraction(1, 512), Fraction(1, 64)):
        fs = media.extract_features(pixels, thr)
        assert fs.features == oracle_features(pixels, thr)


def test_features_from_ppm_equals_extract():
    rng = random.Random(2)
    pixels = noisy_pixels(rng, 64)
    data = media.write_ppm(8, 8, pixels)
    assert media.features_from_ppm(data) == media.extract_features(pixels)


def test_solid_image_has_one_feature():
    fs = media.features_from_ppm(solid_image((255, 0, 0)))
    assert len(fs.features) == 1


def test_threshold_monotonicity():
    rng = random.Random(3)
    pixels = noisy_pixels(rng, 1024)
    loose = media.extract_features(pixels, Fraction(1, 2048))
    tight = media.extract_features(pixels, Fraction(1, 32))
    assert tight.features <= loose.features


def test_feature_file_parsing():
    fs = media.parse_feature_file("1\n2\n255\n")
    assert fs.features == frozenset({1, 2, 255})
    with pytest.raises(ValueError):
        media.parse_feature_file("256\n")


def test_media_similarity_matches_oracle(toy):
    rng = random.Random(4)
    pixels = noisy_pixels(rng, 2048)
    variant = [(min(r + 8, 255), g, b) for r, g, b in pixels]
    fa = media.extract_features(pixels)
    fb = media.extract_features(variant)
    expected = similarity.oracle_jaccard(fa.as_items(), fb.as_items())
    res = media.media_similarity(
        fa, fb, client_rng=random.Random(5), server_rng=random.Random(6), params=toy
    )
    assert res.jaccard == expected
    assert expected > Fraction(1, 2)  # near-duplicates stay similar


def test_media_similarity_approx(toy):
    rng = random.Random(7)
    fa = media.extract_features(noisy_pixels(rng, 2048))
    res = media.media_similarity_approx(
        fa, fa, k=32, client_rng=random.Random(8), server_rng=random.Random(9),
        params=toy, family_seed=b"\x05" * 32,
    )
    assert res.jaccard == 1


def test_empty_feature_set_rejected(toy):
    rng = random.Random(10)
    fs = media.extract_features(noisy_pixels(rng, 1024), Fraction(2, 1))
    with pytest.raises(ValueError):
        media.media_similarity(fs, fs, params=toy)
