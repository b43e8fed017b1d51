import json
import random
import subprocess
import sys
import threading

import pytest

from espresso import cli, group, iris, media, wire


@pytest.fixture
def toy_params_file(tmp_path):
    path = tmp_path / "params.json"
    cli.save_params(group.TOY_PARAMS, str(path))
    return str(path)


@pytest.fixture
def set_files(tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    a.write_bytes(b"apple\nbanana\ncherry\n")
    b.write_bytes(b"banana\ncherry\ndate\n")
    return str(a), str(b)


def run_cli(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    records = [json.loads(line) for line in captured.out.splitlines()
               if line.startswith("{")]
    return code, records, captured


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as e:
        cli.main(["jaccard"])  # missing mode
    assert e.value.code == 2


def test_oracle_jaccard(capsys, set_files):
    a, b = set_files
    code, records, _ = run_cli(capsys, ["oracle", "jaccard", a, b])
    assert code == 0
    assert records[0]["jaccard_float"] == 0.5


def test_oracle_intersection(capsys, set_files):
    a, b = set_files
    code, records, _ = run_cli(capsys, ["oracle", "intersection", a, b])
    assert code == 0
    assert records[0]["intersection"] == 2


def test_io_error_exit_code(capsys):
    code = cli.main(["oracle", "jaccard", "/no/such/file", "/no/such/other"])
    assert code == cli.EXIT_IO


def test_gen_params(capsys, tmp_path):
    out = str(tmp_path / "p.json")
    code, records, _ = run_cli(
        capsys, ["gen-params", "--p-bits", "80", "--q-bits", "40",
                 "--seed", "ab12", "--out", out, "--json"])
    assert code == 0
    loaded = cli.load_params(out)
    loaded.validate()
    assert loaded.p.bit_length() == 80


def test_jaccard_exact_loopback(capsys, set_files, toy_params_file):
    a, b = set_files
    code, records, _ = run_cli(
        capsys, ["jaccard", "exact", "--input-a", a, "--input-b", b,
                 "--params-file", toy_params_file, "--rng-seed", "1", "--json"])
    assert code == 0
    rec = records[0]
    assert rec["jaccard_float"] == 0.5
    assert rec["agreement"] is True


def test_psi_ca_loopback(capsys, set_files, toy_params_file):
    a, b = set_files
    code, records, _ = run_cli(
        capsys, ["psi-ca", "--input-a", a, "--input-b", b,
                 "--params-file", toy_params_file, "--rng-seed", "2", "--json"])
    assert code == 0
    assert records[0]["cardinality"] == 2
    assert records[0]["agreement"] is True


def test_jaccard_minhash_loopback(capsys, set_files, toy_params_file):
    a, b = set_files
    code, records, _ = run_cli(
        capsys, ["jaccard", "minhash", "--input-a", a, "--input-b", b, "--k", "16",
                 "--seed", "aa" * 32, "--params-file", toy_params_file,
                 "--rng-seed", "3", "--json"])
    assert code == 0
    assert 0 <= records[0]["jaccard_float"] <= 1
    assert records[0]["k"] == 16


def test_approx_card_loopback(capsys, set_files, toy_params_file):
    a, b = set_files
    code, records, _ = run_cli(
        capsys, ["approx-card", "--input-a", a, "--input-b", b, "--k", "16",
                 "--params-file", toy_params_file, "--rng-seed", "4", "--json"])
    assert code == 0
    assert records[0]["cardinality_estimate"] >= 0


def test_doc_sim_loopback(capsys, tmp_path, toy_params_file):
    da = tmp_path / "a.doc"
    db = tmp_path / "b.doc"
    da.write_text("the quick brown fox jumps over the lazy dog")
    db.write_text("the quick brown dog sits under the lazy fox")
    code, records, _ = run_cli(
        capsys, ["doc-sim", "--input-a", str(da), "--input-b", str(db),
                 "--params-file", toy_params_file, "--rng-seed", "5", "--json"])
    assert code == 0
    assert 0 < records[0]["jaccard_float"] < 1
    assert records[0]["agreement"] is True


def test_trigrams_export(capsys, tmp_path):
    doc = tmp_path / "x.doc"
    doc.write_text("abcd")
    code = cli.main(["trigrams", str(doc)])
    out = capsys.readouterr().out.split()
    assert code == 0
    assert out == ["abc", "bcd"]


def test_iris_match_loopback(capsys, tmp_path, toy_params_file):
    rng = random.Random(0)
    n = 48
    bits = [rng.randrange(2) for _ in range(n)]
    mask = [1] * n
    code_a = iris.IrisCode(tuple(bits), tuple(mask))
    flipped = [b ^ (rng.random() < 0.1) for b in bits]
    code_b = iris.IrisCode(tuple(flipped), tuple(mask))
    fa, fb = tmp_path / "a.iris", tmp_path / "b.iris"
    fa.write_text(iris.format_iris_file(code_a))
    fb.write_text(iris.format_iris_file(code_b))
    code, records, _ = run_cli(
        capsys, ["iris-match", "--input-a", str(fa), "--input-b", str(fb),
                 "--k", str(n), "--threshold", "1/3", "--max-shift", "1",
                 "--params-file", toy_params_file, "--rng-seed", "6", "--json"])
    assert code == 0
    rec = records[0]
    assert rec["matched"] is True
    assert len(rec["rotations"]) == 3
    assert rec["agreement"] is True  # k = n, full masks: distance is exact


def test_media_sim_loopback(capsys, tmp_path, toy_params_file):
    rng = random.Random(1)
    pixels = [(rng.randrange(256), rng.randrange(256), rng.randrange(256))
              for _ in range(64)]
    variant = [(min(r + 4, 255), g, b) for r, g, b in pixels]
    fa, fb = tmp_path / "a.ppm", tmp_path / "b.ppm"
    fa.write_bytes(media.write_ppm(8, 8, pixels))
    fb.write_bytes(media.write_ppm(8, 8, variant))
    code, records, _ = run_cli(
        capsys, ["media-sim", "--input-a", str(fa), "--input-b", str(fb),
                 "--params-file", toy_params_file, "--rng-seed", "7", "--json"])
    assert code == 0
    assert 0 < records[0]["jaccard_float"] <= 1
    assert records[0]["agreement"] is True


def test_attack_subcommands(capsys, tmp_path):
    doc = tmp_path / "doc.txt"
    doc.write_text("the quick brown fox jumps over the lazy dog")
    space = tmp_path / "space.txt"
    code, records, _ = run_cli(
        capsys, ["attack", "build-space", str(doc), "--out", str(space), "--json"])
    assert code == 0
    assert records[0]["trigrams"] == 32

    code, records, _ = run_cli(
        capsys, ["attack", "check-word", "--space", str(space), "fox", "--json"])
    assert code == 0
    assert records[0]["verdict"] == "possibly-present"

    code, records, _ = run_cli(
        capsys, ["attack", "check-word", "--space", str(space), "cat", "--json"])
    assert records[0]["verdict"] == "absent"

    code, records, captured = run_cli(
        capsys, ["attack", "extract", "--space", str(space), "--limit", "50",
                 "--json"])
    assert code == 0
    assert records[0]["fragments"] == 50


def test_bench_subcommand(capsys, toy_params_file):
    code, records, _ = run_cli(
        capsys, ["bench", "--protocol", "jaccard-exact", "--size", "30",
                 "--params-file", toy_params_file, "--json"])
    assert code == 0
    rec = records[0]
    assert rec["agreement"] is True
    assert rec["bytes_transferred"] > 0
    assert rec["slowdown"] > 0


def test_tcp_client_server_roles(tmp_path, toy_params_file, set_files, capsys):
    a, b = set_files
    port_holder = {}

    def server():
        ready = threading.Event()
        thread = threading.Thread(
            target=wire.serve_forever,
            args=("127.0.0.1", 0, "jaccard-exact",
                  {"items": {b"banana", b"cherry", b"date"}}),
            kwargs={"max_sessions": 1, "ready_event": ready,
                    "rng_factory": lambda: random.Random(9)},
            daemon=True,
        )
        thread.start()
        ready.wait(5.0)
        port_holder["port"] = ready.port
        return thread

    thread = server()
    code, records, _ = run_cli(
        capsys, ["jaccard", "exact", "--connect",
                 "127.0.0.1:%d" % port_holder["port"], "--input", a,
                 "--params-file", toy_params_file, "--rng-seed", "8", "--json"])
    thread.join(5.0)
    assert code == 0
    assert records[0]["jaccard_float"] == 0.5


def test_protocol_abort_exit_code(capsys):
    code = cli.main(["jaccard", "exact", "--connect", "127.0.0.1:1",
                     "--input", "/dev/null"])
    assert code in (cli.EXIT_ABORT, cli.EXIT_USAGE)


def test_console_script_installed():
    out = subprocess.run([sys.executable, "-m", "espresso.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "gen-params" in out.stdout
