import json
import random
import subprocess
import sys

import pytest

from simtsel.cli import EXIT_CODES, main
from simtsel.sampling import read_selection
from simtsel.scoring import read_scores

from conftest import write


@pytest.fixture
def toy(tmp_path):
    rng = random.Random(1)
    src, tgt, ali = [], [], []
    for n in range(40):
        m = rng.randint(1, 9)
        src.append(" ".join(f"s{rng.randrange(15)}" for _ in range(m)))
        tgt.append(" ".join(f"t{rng.randrange(15)}" for _ in range(m)))
        links = {(rng.randrange(m), rng.randrange(m)) for _ in range(rng.randint(0, m + 2))}
        ali.append(" ".join(f"{i}-{j}" for i, j in sorted(links)))
    return {"src": write(tmp_path / "c.src", src), "tgt": write(tmp_path / "c.tgt", tgt),
            "align": write(tmp_path / "c.align", ali), "dir": tmp_path}


def run(*argv):
    return main([str(a) for a in argv])


def test_train_and_score_chunk_lm(tmp_path, capsys):
    corpus = write(tmp_path / "x", ["a b c", "a b", "c a b d"])
    assert run("train-lm", "--corpus", corpus, "--out", tmp_path / "m.lm") == 0
    assert run("score", "--metric", "chunk-lm", "--source", corpus, "--lm", tmp_path / "m.lm",
               "--out", tmp_path / "s") == 0
    header, recs = read_scores(tmp_path / "s")
    assert len(recs) == 3 and header["alpha"] == 0.5 and header["metric"] == "chunk-lm"
    assert header["direction"] == "lower"
    assert len((tmp_path / "s").read_text().splitlines()) == 4


def test_sample_combined_provenance(toy):
    d = toy["dir"]
    assert run("sample", "--combined", "--chunk-metric", "align", "--align", toy["align"],
               "--n", 5, "--ratio", 1.6, "--out", d / "sel") == 0
    sel = read_selection(d / "sel")
    assert len(sel.indices) == 5 and sel.provenance["stage1_size"] == 8


def test_combined_from_score_files(toy):
    d = toy["dir"]
    run("score", "--metric", "chunk-align", "--align", toy["align"], "--out", d / "ca")
    run("score", "--metric", "mono", "--align", toy["align"], "--out", d / "mo")
    assert run("sample", "--combined", "--chunk-scores", d / "ca", "--mono-scores", d / "mo",
               "--n", 5, "--out", d / "sel2") == 0
    assert run("sample", "--combined", "--chunk-metric", "align", "--align", toy["align"],
               "--n", 5, "--out", d / "sel1") == 0
    assert read_selection(d / "sel1").indices == read_selection(d / "sel2").indices


def test_diagnose_diagonal(tmp_path):
    lines = ["a b c", "d e", "f"]
    src = write(tmp_path / "s", lines)
    ali = write(tmp_path / "a", ["0-0 1-1 2-2", "0-0 1-1", "0-0"])
    assert run("diagnose", "--train-align", ali, "--gen-source", src, "--gen-hyp", src,
               "--gen-align", ali, "--out", tmp_path / "r.json") == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["t_anti"] == 0 and rep["t_cnk"] == 1.0 and rep["g_cnk"] == 1.0
    assert rep["g_hall"] == {str(k): 0.0 for k in (1, 3, 5, 7, 9)}
    assert rep["counts"]["train"]["links"] == 6


def test_build_tables_and_uncertainty(toy):
    d = toy["dir"]
    assert run("build-tables", "--source", toy["src"], "--target", toy["tgt"], "--align", toy["align"],
               "--out-table", d / "tt", "--out-entropy", d / "ent") == 0
    assert run("score", "--metric", "uncertainty", "--source", toy["src"], "--entropy", d / "ent",
               "--out", d / "u") == 0
    _, recs = read_scores(d / "u")
    assert len(recs) == 40 and all(r.score is not None and r.score >= 0 for r in recs)


def test_chunks_and_correlate(toy, capsys):
    d = toy["dir"]
    assert run("chunks", "--align", toy["align"], "--verbose", "--out", d / "ch") == 0
    rows = [json.loads(l) for l in (d / "ch").read_text().splitlines()]
    assert len(rows) == 40 and all(len(r["groups"]) == r["c"] for r in rows)
    run("score", "--metric", "chunk-align", "--align", toy["align"], "--out", d / "ca")
    run("score", "--metric", "mono", "--k", 1, "--align", toy["align"], "--out", d / "mo")
    assert run("correlate", d / "ca", d / "mo", "--out-json", d / "c.json") == 0
    payload = json.loads((d / "c.json").read_text())
    assert payload["metrics"] == ["chunk-align", "mono"]
    assert payload["matrix"][0][0] == 1.0


def test_byte_identical_and_worker_independent(toy):
    d = toy["dir"]
    outs = []
    for w in (1, 2, 1):
        out = d / f"s{w}_{len(outs)}"
        assert run("score", "--metric", "chunk-align", "--align", toy["align"], "--workers", w,
                   "--block-lines", 7, "--out", out) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_random_sample_cli(toy):
    d = toy["dir"]
    assert run("sample", "--random", "--source", toy["src"], "--n", 10, "--seed", 3, "--out", d / "r",
               "--emit-text", d / "pick", "--target", toy["tgt"]) == 0
    sel = read_selection(d / "r")
    assert len(sel.indices) == 10 and sel.provenance["corpus_size"] == 40
    src_lines = toy["src"].read_text().splitlines()
    assert (d / "pick.src").read_text().splitlines() == [src_lines[i] for i in sel.indices]


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.mark.parametrize("case, category", [
    ("missing_dep", "dependency"), ("missing_file", "input"), ("parse", "parse"),
    ("mismatch", "mismatch"), ("bounds", "bounds"), ("shortfall", "shortfall"), ("usage", "usage"),
])
def test_error_categories(case, category, tmp_path, capsys):
    ok = write(tmp_path / "ok", ["a b", "c"])
    argv = {
        "missing_dep": ["score", "--metric", "mono", "--out", tmp_path / "o"],
        "missing_file": ["score", "--metric", "mono", "--align", tmp_path / "nope", "--out", tmp_path / "o"],
        "parse": ["score", "--metric", "mono", "--align", write(tmp_path / "bad", ["0-0", "0:1"]),
                  "--out", tmp_path / "o"],
        "mismatch": ["build-tables", "--source", ok, "--target", write(tmp_path / "t", ["a"]),
                     "--align", write(tmp_path / "a", ["0-0"]), "--out-table", tmp_path / "x",
                     "--out-entropy", tmp_path / "y"],
        "bounds": ["build-tables", "--source", ok, "--target", ok,
                   "--align", write(tmp_path / "a2", ["0-0 5-1", ""]), "--out-table", tmp_path / "x",
                   "--out-entropy", tmp_path / "y"],
        "shortfall": ["sample", "--random", "--corpus-size", 3, "--n", 4, "--out", tmp_path / "o"],
        "usage": ["score", "--metric", "mono", "--align", ok, "--alpha", 2, "--out", tmp_path / "o"],
    }[case]
    assert run(*argv) == EXIT_CODES[category]
    err = _err(capsys)
    assert err["error"] == category and err["message"]


def test_parse_error_names_line(tmp_path, capsys):
    bad = write(tmp_path / "bad", ["0-0", "1-1", "x"])
    assert run("score", "--metric", "chunk-align", "--align", bad, "--out", tmp_path / "o") == 4
    # line indices are 0-based, like score and selection files
    assert _err(capsys)["message"].startswith(f"{bad}:2:")


def test_argparse_usage_exit():
    assert main(["score"]) == 2
    assert main(["--version"]) == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "simtsel", "sample", "--random", "--corpus-size", "5",
                           "--n", "2", "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_numpy_fallback_env_flag_same_output(toy):
    import os
    d = toy["dir"]
    outs = {}
    for flag in ("0", "1"):
        env = dict(os.environ, SIMTSEL_DISABLE_NUMBA=flag)
        out = d / f"s{flag}"
        proc = subprocess.run([sys.executable, "-m", "simtsel", "score", "--metric", "chunk-align",
                               "--align", str(toy["align"]), "--out", str(out)], env=env,
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        version = subprocess.run([sys.executable, "-m", "simtsel", "--version"], env=env,
                                 capture_output=True, text=True).stdout
        outs[flag] = (out.read_bytes(), version)
    assert outs["0"][0] == outs["1"][0]
    assert "numpy" in outs["1"][1]
