import random

import pytest

from espresso import group


@pytest.fixture(scope="session")
def toy():
    return group.TOY_PARAMS


@pytest.fixture(scope="session")
def prod():
    return group.DEFAULT_PARAMS


@pytest.fixture
def rng():
    return random.Random(0xBEEF)


def make_rng(seed: int) -> random.Random:
    return random.Random(seed)


def random_set(rng: random.Random, size: int, tag: bytes = b"") -> set[bytes]:
    out: set[bytes] = set()
    while len(out) < size:
        out.add(tag + rng.getrandbits(64).to_bytes(8, "big"))
    return out


def overlapping_sets(rng: random.Random, size_a: int, size_b: int, common: int):
    shared = random_set(rng, common, b"c")
    a = shared | random_set(rng, size_a - common, b"a")
    b = shared | random_set(rng, size_b - common, b"b")
    return a, b


def pytest_terminal_summary(terminalreporter):
    """Surface the acceptance-criterion verdicts in the run log."""
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
