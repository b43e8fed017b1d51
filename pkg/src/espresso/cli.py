"""Command-line interface.

Every subcommand emits one JSON record per result line plus a short human
summary (suppressed by --json). Exit codes: 0 success, 2 usage error,
3 protocol abort, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import threading
from fractions import Fraction

from . import attack, bench, docsim, group, iris, media, similarity, wire
from .errors import EspressoError, ProtocolAbort, TransportError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ABORT = 3
EXIT_IO = 4

PARAMS_ENV = "ESPRESSO_PARAMS"


def load_params(path: str | None) -> group.GroupParams:
    path = path or os.environ.get(PARAMS_ENV)
    if path is None:
        return group.DEFAULT_PARAMS
    with open(path, "r", encoding="utf-8") as fh:
        blob = json.load(fh)
    return group.GroupParams(
        p=int(blob["p"], 16), q=int(blob["q"], 16), g=int(blob["g"], 16)
    )


def save_params(params: group.GroupParams, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"p": hex(params.p), "q": hex(params.q), "g": hex(params.g)}, fh)
        fh.write("\n")


def read_item_set(path: str) -> set[bytes]:
    """Newline-separated UTF-8 items, opaque bytes after trimming the newline."""
    with open(path, "rb") as fh:
        data = fh.read()
    return {line for line in data.split(b"\n") if line}


def read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


class Output:
    def __init__(self, json_only: bool):
        self.json_only = json_only

    def emit(self, record: dict, summary: str) -> None:
        print(json.dumps(record, default=str))
        if not self.json_only:
            print(summary, file=sys.stderr)


def _rng(seed: int | None) -> random.Random | None:
    return random.Random(seed) if seed is not None else None


def _parse_hostport(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    return host or "127.0.0.1", int(port)


def _run_networked(args, protocol: str, client_inputs, server_inputs, rng):
    """Run one role over TCP or a file pair."""
    if args.connect:
        host, port = _parse_hostport(args.connect)
        channel = wire.connect(host, port)
        try:
            return wire.run_session("client", protocol, client_inputs, channel, rng)
        finally:
            channel.close()
    if args.files:
        to_server, to_client = args.files
        role = args.role
        if role == "client":
            channel = wire.FilePairChannel(to_client, to_server)
            return wire.run_session("client", protocol, client_inputs, channel, rng)
        channel = wire.FilePairChannel(to_server, to_client)
        return wire.run_session("server", protocol, server_inputs, channel, rng)
    # TCP server
    wire.serve_forever(
        args.bind, args.port, protocol, server_inputs,
        rng_factory=(lambda: rng) if rng is not None else None,
        max_sessions=args.sessions,
    )
    return None


def _add_common(p, loopback_inputs=2):
    p.add_argument("--params-file", help="JSON group parameters (or $ESPRESSO_PARAMS)")
    p.add_argument("--json", action="store_true", help="machine-readable output only")
    p.add_argument("--rng-seed", type=int, help="deterministic session randomness (testing)")


def _add_net(p):
    p.add_argument("--role", choices=["client", "server"], help="networked role")
    p.add_argument("--connect", metavar="HOST:PORT", help="run as client against a server")
    p.add_argument("--port", type=int, default=0, help="TCP listen port (server role)")
    p.add_argument("--bind", default="127.0.0.1", help="TCP bind address")
    p.add_argument("--sessions", type=int, default=1, help="sessions to serve before exiting")
    p.add_argument("--files", nargs=2, metavar=("REQUEST", "RESPONSE"),
                   help="file-pair transport for offline two-step execution")
    p.add_argument("--loopback", action="store_true",
                   help="run both roles in-process (requires both inputs)")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="espresso", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-params", help="generate group parameters")
    p.add_argument("--p-bits", type=int, default=1024)
    p.add_argument("--q-bits", type=int, default=160)
    p.add_argument("--seed", help="hex seed for deterministic generation")
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("psi-ca", help="private set intersection cardinality")
    _add_common(p)
    _add_net(p)
    p.add_argument("--input", help="item file for the networked role")
    p.add_argument("--input-a", help="client item file (loopback)")
    p.add_argument("--input-b", help="server item file (loopback)")

    p = sub.add_parser("jaccard", help="private Jaccard similarity")
    p.add_argument("mode", choices=["exact", "minhash"])
    _add_common(p)
    _add_net(p)
    p.add_argument("--input", help="item file for the networked role")
    p.add_argument("--input-a")
    p.add_argument("--input-b")
    p.add_argument("--k", type=int, default=400, help="sketch size (minhash mode)")
    p.add_argument("--seed", help="hex hash-family seed (minhash mode)")

    p = sub.add_parser("approx-card", help="size-hiding approximate cardinality")
    _add_common(p)
    _add_net(p)
    p.add_argument("--input")
    p.add_argument("--input-a")
    p.add_argument("--input-b")
    p.add_argument("--k", type=int, default=400)
    p.add_argument("--seed", help="hex hash-family seed")

    p = sub.add_parser("doc-sim", help="private document similarity (trigram sets)")
    _add_common(p)
    _add_net(p)
    p.add_argument("--input", help="document for the networked role")
    p.add_argument("--input-a")
    p.add_argument("--input-b")
    p.add_argument("--k", type=int, help="approximate with this sketch size")
    p.add_argument("--seed", help="hex hash-family seed")

    p = sub.add_parser("trigrams", help="export a document's trigram set")
    p.add_argument("file")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("iris-match", help="private iris matching")
    _add_common(p)
    _add_net(p)
    p.add_argument("--input", help="iris file for the networked role")
    p.add_argument("--input-a")
    p.add_argument("--input-b")
    p.add_argument("--k", type=int, default=iris.DEFAULT_K)
    p.add_argument("--threshold", required=True, help="match threshold, e.g. 0.33")
    p.add_argument("--max-shift", type=int, default=iris.DEFAULT_MAX_SHIFT)
    p.add_argument("--paper-formula", action="store_true",
                   help="use the (n-c2)/c1 decision quantity")

    p = sub.add_parser("media-sim", help="private image similarity (HSV features)")
    _add_common(p)
    _add_net(p)
    p.add_argument("--input")
    p.add_argument("--input-a")
    p.add_argument("--input-b")
    p.add_argument("--k", type=int, help="approximate with this sketch size")
    p.add_argument("--threshold", default="1/512", help="histogram bin cutoff")

    p = sub.add_parser("oracle", help="plaintext reference computations")
    p.add_argument("metric", choices=["jaccard", "intersection"])
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("attack", help="trigram-space analysis toolkit")
    asub = p.add_subparsers(dest="attack_command", required=True)
    b = asub.add_parser("build-space", help="collect the trigram space of documents")
    b.add_argument("docs", nargs="+")
    b.add_argument("--out")
    b.add_argument("--json", action="store_true")
    c = asub.add_parser("check-word", help="membership verdict for a word")
    c.add_argument("--space", required=True)
    c.add_argument("word")
    c.add_argument("--json", action="store_true")
    e = asub.add_parser("extract", help="reconstruct text fragments")
    e.add_argument("--space", required=True)
    e.add_argument("--limit", type=int, default=100)
    e.add_argument("--max-len", type=int, default=64)
    e.add_argument("--dictionary", help="word list to filter fragments")
    e.add_argument("--json", action="store_true")

    p = sub.add_parser("bench", help="timing and bandwidth measurements")
    p.add_argument("--protocol", choices=["jaccard-exact", "jaccard-minhash"],
                   default="jaccard-exact")
    p.add_argument("--size", type=int, default=1000)
    p.add_argument("--k", type=int, default=400)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--bench-seed", type=int, default=0)
    p.add_argument("--params-file")
    p.add_argument("--json", action="store_true")

    return top


def _two_party(args, out, protocol, client_inputs, server_inputs, oracle_fn, describe):
    rng = _rng(args.rng_seed)
    if args.loopback or (not args.role and not args.connect):
        result, _ = wire.loopback(
            protocol, client_inputs, server_inputs,
            client_rng=rng, server_rng=_rng(args.rng_seed + 1 if args.rng_seed is not None else None),
        )
        record = describe(result)
        oracle_value = oracle_fn()
        if oracle_value is not None:
            record["oracle"] = str(oracle_value)
            exact = (record.get("mode") == "exact" or "cardinality" in record
                     or "best_distance" in record)
            protocol_value = record.get(
                "jaccard_float", record.get("cardinality", record.get("best_distance"))
            )
            if exact and isinstance(protocol_value, (int, float)):
                record["agreement"] = abs(float(protocol_value) - float(oracle_value)) < 1e-9
        out.emit(record, f"{protocol}: {record}")
        return EXIT_OK
    result = _run_networked(args, protocol, client_inputs, server_inputs, rng)
    if result is not None:
        record = describe(result)
        out.emit(record, f"{protocol}: {record}")
    return EXIT_OK


def _similarity_record(result) -> dict:
    return {
        "jaccard": str(result.jaccard),
        "jaccard_float": float(result.jaccard),
        "mode": result.mode,
        "k": result.k,
    }


def run(args) -> int:
    out = Output(getattr(args, "json", False))

    if args.command == "gen-params":
        seed = bytes.fromhex(args.seed) if args.seed else None
        params = group.generate_params(args.p_bits, args.q_bits, seed)
        save_params(params, args.out)
        out.emit(
            {"p_bits": params.p.bit_length(), "q_bits": params.q.bit_length(), "out": args.out},
            f"wrote {params.p.bit_length()}/{params.q.bit_length()}-bit parameters to {args.out}",
        )
        return EXIT_OK

    if args.command == "oracle":
        a, b = read_item_set(args.file_a), read_item_set(args.file_b)
        if args.metric == "jaccard":
            value = similarity.oracle_jaccard(a, b)
            out.emit({"jaccard": str(value), "jaccard_float": float(value)},
                     f"jaccard = {float(value):.6f}")
        else:
            value = similarity.oracle_intersection(a, b)
            out.emit({"intersection": value}, f"intersection = {value}")
        return EXIT_OK

    if args.command == "trigrams":
        ts = docsim.trigram_set(read_text(args.file), args.n)
        for g in ts.sorted_grams():
            print(g)
        if ts.short_input:
            print("warning: normalized text shorter than n", file=sys.stderr)
        return EXIT_OK

    if args.command == "attack":
        return run_attack(args, out)

    if args.command == "bench":
        params = load_params(args.params_file)
        for i in range(args.runs):
            if args.protocol == "jaccard-exact":
                report = bench.bench_jaccard_exact(args.size, params, seed=args.bench_seed + i)
            else:
                report = bench.bench_jaccard_minhash(args.size, args.k, params, seed=args.bench_seed + i)
            out.emit(report.as_dict(),
                     f"{report.protocol} n={args.size}: online {report.online_seconds:.3f}s, "
                     f"{report.bytes_transferred} bytes, slowdown x{report.slowdown:.1f}")
        return EXIT_OK

    params = load_params(args.params_file)

    if args.command == "psi-ca":
        client_items = read_item_set(args.input_a) if args.input_a else None
        server_items = read_item_set(args.input_b) if args.input_b else None
        if args.role or args.connect:
            items = read_item_set(args.input)
            if args.connect or args.role == "client":
                client_items = items
            else:
                server_items = items
        return _two_party(
            args, out, "psi-ca",
            {"params": params, "items": client_items},
            {"items": server_items},
            lambda: similarity.oracle_intersection(client_items, server_items)
            if client_items and server_items else None,
            lambda c: {"cardinality": c},
        )

    if args.command in ("jaccard", "approx-card", "doc-sim", "media-sim"):
        return run_similarity(args, out, params)

    if args.command == "iris-match":
        return run_iris(args, out, params)

    raise AssertionError(f"unhandled command {args.command}")


def run_similarity(args, out, params) -> int:
    seed = bytes.fromhex(args.seed) if getattr(args, "seed", None) else None

    def load(path):
        if args.command == "doc-sim":
            ts = docsim.trigram_set(read_text(path))
            return ts.as_items()
        if args.command == "media-sim":
            if path.endswith(".ppm"):
                with open(path, "rb") as fh:
                    fs = media.features_from_ppm(fh.read(), Fraction(args.threshold))
            else:
                fs = media.parse_feature_file(read_text(path))
            return fs.as_items()
        return read_item_set(path)

    client_items = load(args.input_a) if args.input_a else None
    server_items = load(args.input_b) if args.input_b else None
    if args.role or args.connect:
        items = load(args.input)
        if args.connect or args.role == "client":
            client_items = items
        else:
            server_items = items

    approx = args.command == "approx-card" or getattr(args, "k", None) is not None \
        and getattr(args, "mode", None) != "exact"
    if args.command == "jaccard":
        approx = args.mode == "minhash"

    if args.command == "approx-card":
        protocol = "approx-card"
        client_inputs = {"params": params, "items": client_items, "k": args.k, "family_seed": seed}
        oracle_fn = (lambda: similarity.oracle_intersection(client_items, server_items)) \
            if client_items and server_items else (lambda: None)
        describe = lambda r: {"cardinality_estimate": float(r), "k": args.k}
    elif approx:
        protocol = "jaccard-minhash"
        client_inputs = {"params": params, "items": client_items, "k": args.k, "family_seed": seed}
        oracle_fn = (lambda: float(similarity.oracle_jaccard(client_items, server_items))) \
            if client_items and server_items else (lambda: None)
        describe = _similarity_record
    else:
        protocol = "media" if args.command == "media-sim" else "jaccard-exact"
        client_inputs = {"params": params, "items": client_items}
        oracle_fn = (lambda: float(similarity.oracle_jaccard(client_items, server_items))) \
            if client_items and server_items else (lambda: None)
        describe = _similarity_record

    server_inputs = {"items": server_items}
    return _two_party(args, out, protocol, client_inputs, server_inputs, oracle_fn, describe)


def run_iris(args, out, params) -> int:
    threshold = Fraction(args.threshold)

    def load(path):
        return iris.parse_iris_file(read_text(path))

    code_a = load(args.input_a) if args.input_a else None
    code_b = load(args.input_b) if args.input_b else None
    if args.role or args.connect:
        code = load(args.input)
        if args.connect or args.role == "client":
            code_a = code
        else:
            code_b = code

    def describe(result):
        return {
            "matched": result.matched,
            "best_distance": float(result.best_distance),
            "threshold": float(threshold),
            "rotations": [
                {"shift": r.shift, "c1": r.c1, "c2": r.c2,
                 "distance": None if r.distance is None else float(r.distance)}
                for r in result.rotations
            ],
        }

    def oracle_fn():
        if code_a is None or code_b is None:
            return None
        best = min(
            float(iris.whd(iris.rotate(code_a, s), code_b))
            for s in range(-args.max_shift, args.max_shift + 1)
        )
        return best

    client_inputs = {
        "params": params, "iris": code_a, "k": args.k, "threshold": threshold,
        "max_shift": args.max_shift, "paper_formula": args.paper_formula,
    }
    return _two_party(args, out, "iris", client_inputs, {"iris": code_b}, oracle_fn, describe)


def run_attack(args, out) -> int:
    if args.attack_command == "build-space":
        grams = set()
        for path in args.docs:
            grams |= docsim.trigram_set(read_text(path)).grams
        listing = sorted(grams)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write("\n".join(listing) + "\n")
        out.emit({"trigrams": len(listing), "out": args.out},
                 f"collected {len(listing)} trigrams")
        if not args.out:
            for g in listing:
                print(g)
        return EXIT_OK

    space = {line.strip() for line in read_text(args.space).splitlines() if line.strip()}

    if args.attack_command == "check-word":
        verdict = attack.word_in_space(space, args.word)
        out.emit({"word": args.word, "verdict": verdict}, f"{args.word}: {verdict}")
        return EXIT_OK

    if args.attack_command == "extract":
        graph = attack.build_graph(space)
        dictionary = None
        if args.dictionary:
            dictionary = read_text(args.dictionary).split()
        fragments = attack.extract_fragments(graph, args.max_len, args.limit, dictionary)
        out.emit({"fragments": len(fragments)}, f"extracted {len(fragments)} fragments")
        for f in fragments:
            print(f)
        return EXIT_OK

    raise AssertionError


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except (ProtocolAbort, TransportError) as exc:
        print(f"protocol abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EspressoError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
