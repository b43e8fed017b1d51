"""Timing and bandwidth measurements for the private protocols."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from . import group, minhash, psi_ca, similarity, wire


@dataclass
class BenchReport:
    protocol: str
    client_size: int
    server_size: int
    k: int | None
    offline_client_seconds: float
    offline_server_seconds: float
    online_seconds: float
    bytes_transferred: int
    oracle_seconds: float
    slowdown: float
    result: float = 0.0
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "client_size": self.client_size,
            "server_size": self.server_size,
            "k": self.k,
            "offline_client_seconds": self.offline_client_seconds,
            "offline_server_seconds": self.offline_server_seconds,
            "online_seconds": self.online_seconds,
            "bytes_transferred": self.bytes_transferred,
            "oracle_seconds": self.oracle_seconds,
            "slowdown": self.slowdown,
            "result": self.result,
            **self.extra,
        }


def make_sets(size: int, overlap: float, rng: random.Random) -> tuple[set[bytes], set[bytes]]:
    shared = int(size * overlap)
    common = {b"c" + rng.getrandbits(64).to_bytes(8, "big") for _ in range(shared)}
    while len(common) < shared:
        common.add(b"c" + rng.getrandbits(64).to_bytes(8, "big"))
    def only(tag: bytes) -> set[bytes]:
        out = set()
        while len(out) < size - shared:
            out.add(tag + rng.getrandbits(64).to_bytes(8, "big"))
        return out
    return common | only(b"a"), common | only(b"b")


def _time_oracle(fn, repeats: int = 50, rounds: int = 5) -> tuple[float, object]:
    """Best-of-rounds per-call time, insensitive to warm-up and scheduling."""
    best = float("inf")
    for _ in range(rounds):
        start = time.perf_counter()
        for _ in range(repeats):
            value = fn()
        best = min(best, (time.perf_counter() - start) / repeats)
    return best, value


def bench_jaccard_exact(
    size: int,
    params: group.GroupParams | None = None,
    seed: int = 0,
    oracle_repeats: int = 50,
) -> BenchReport:
    params = params or group.DEFAULT_PARAMS
    rng = random.Random(seed)
    a, b = make_sets(size, 0.5, rng)

    t0 = time.perf_counter()
    server_state, _ = psi_ca.server_precompute(params, b, random.Random(seed + 1))
    offline_server = time.perf_counter() - t0

    channels = wire.MemoryChannel.pair()
    t0 = time.perf_counter()
    result, _ = wire.loopback(
        "jaccard-exact",
        {"params": params, "items": a},
        {"items": b, "precomputed": server_state},
        channels=channels,
        client_rng=random.Random(seed + 2),
        server_rng=random.Random(seed + 3),
    )
    online = time.perf_counter() - t0
    nbytes = channels[0].bytes_sent + channels[1].bytes_sent

    oracle_seconds, oracle_value = _time_oracle(
        lambda: similarity.oracle_jaccard(a, b), oracle_repeats
    )
    return BenchReport(
        protocol="jaccard-exact",
        client_size=len(a),
        server_size=len(b),
        k=None,
        offline_client_seconds=0.0,
        offline_server_seconds=offline_server,
        online_seconds=online,
        bytes_transferred=nbytes,
        oracle_seconds=oracle_seconds,
        slowdown=online / oracle_seconds if oracle_seconds > 0 else float("inf"),
        result=float(result.jaccard),
        extra={"oracle_result": float(oracle_value), "agreement": float(result.jaccard) == float(oracle_value)},
    )


def bench_jaccard_minhash(
    size: int,
    k: int,
    params: group.GroupParams | None = None,
    seed: int = 0,
    oracle_repeats: int = 20,
) -> BenchReport:
    params = params or group.DEFAULT_PARAMS
    rng = random.Random(seed)
    a, b = make_sets(size, 0.5, rng)
    family_seed = rng.getrandbits(256).to_bytes(32, "big")
    family = minhash.family_new(k, family_seed)

    t0 = time.perf_counter()
    sketch_a = minhash.sketch_multi(family, a)
    offline_client = time.perf_counter() - t0
    t0 = time.perf_counter()
    sketch_b = minhash.sketch_multi(family, b)
    offline_server = time.perf_counter() - t0

    channels = wire.MemoryChannel.pair()
    t0 = time.perf_counter()
    result, _ = wire.loopback(
        "jaccard-minhash",
        {"params": params, "items": a, "k": k, "family_seed": family_seed, "sketch": sketch_a},
        {"items": b, "sketch": sketch_b},
        channels=channels,
        client_rng=random.Random(seed + 2),
        server_rng=random.Random(seed + 3),
    )
    online = time.perf_counter() - t0
    nbytes = channels[0].bytes_sent + channels[1].bytes_sent

    oracle_seconds, oracle_value = _time_oracle(
        lambda: minhash.estimate_multi(sketch_a, sketch_b), oracle_repeats
    )
    return BenchReport(
        protocol="jaccard-minhash",
        client_size=len(a),
        server_size=len(b),
        k=k,
        offline_client_seconds=offline_client,
        offline_server_seconds=offline_server,
        online_seconds=online,
        bytes_transferred=nbytes,
        oracle_seconds=oracle_seconds,
        slowdown=online / oracle_seconds if oracle_seconds > 0 else float("inf"),
        result=float(result.jaccard),
        extra={"oracle_result": float(oracle_value), "agreement": result.jaccard == oracle_value},
    )
