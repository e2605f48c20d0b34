"""``simtsel`` command line.

Every subcommand writes its resolved configuration into the header of its
primary output, and nothing time-dependent unless ``--stamp`` is given, so
identical inputs give byte-identical outputs.

Errors go to stderr as one JSON object ``{"error": <category>, "message": ...}``
with a category-specific exit code (see ``EXIT_CODES``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from . import align_stats, ngram_lm, sampling, scoring
from ._accel import backend_name
from .chunking import segment_lm, segment_logscores
from .corpus_io import CorpusError, count_lines, iter_lines, read_sentences, zip_parallel
from .diagnostics import (DEFAULT_KS, AnticipationStats, ChunkLengthStats, anticipation_stats_csr,
                          chunk_length_stats_csr, hallucination_stats, mean_rate, metric_correlations)
from .pipeline import DEFAULT_BLOCK_LINES, iter_alignment_csr, iter_line_blocks, score_corpus
from . import kernels

EXIT_CODES = {
    "usage": 2,
    "input": 3,
    "parse": 4,
    "mismatch": 5,
    "bounds": 6,
    "shortfall": 7,
    "dependency": 8,
    "internal": 70,
}


class MissingDependency(ValueError):
    category = "dependency"


def _fingerprint(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def _header(args, **extra) -> dict:
    head = {"tool": "simtsel", "version": __version__, "command": args.command}
    head.update(extra)
    if getattr(args, "stamp", False):
        head["time"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return head


def _progress(args, n):
    if getattr(args, "progress", False):
        print(f"\r{n} lines", end="", file=sys.stderr, flush=True)


def _require(args, metric, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = "--" + name.replace("_", "-")
            raise MissingDependency(f"metric {metric} needs {flag}")


# ---------------------------------------------------------------- train-lm

def cmd_train_lm(args):
    model = ngram_lm.train_ngram(read_sentences(args.corpus, args.max_line_bytes),
                                 order=args.order, backoff=args.backoff)
    ngram_lm.save(model, args.out)
    sizes = {f"{k}-grams": len(model.counts[k]) for k in range(1, model.order + 1)}
    print(json.dumps({"vocab_size": model.unigram.vocab_size, "tokens": model.unigram.total, **sizes},
                     sort_keys=True))


# ---------------------------------------------------------------- build-tables

def cmd_build_tables(args):
    records = zip_parallel(args.source, args.target, args.align, args.max_line_bytes)
    table = align_stats.build_translation_table(records)
    entropies = align_stats.compute_entropy(table)
    align_stats.save_translation_table(table, args.out_table)
    align_stats.save_entropy(entropies, args.out_entropy)
    print(json.dumps({"source_types": len(table.table),
                      "pairs": sum(len(r) for r in table.table.values()),
                      "links": sum(table.marginals.values())}, sort_keys=True))


# ---------------------------------------------------------------- score

def _score_stream(args, metric, k):
    """(header fields, iterator of (index, score)) for one metric."""
    alpha = scoring.check_alpha(args.alpha)
    fields = {"metric": metric, "alpha": alpha}
    if metric == "mono":
        fields["k"] = k
    if metric in ("chunk-align", "mono"):
        _require(args, metric, "align")
        fields["align"] = _fingerprint(args.align)
    elif metric == "chunk-lm":
        if args.external_lm_scores is not None:
            fields["external_lm_scores"] = _fingerprint(args.external_lm_scores)
        else:
            _require(args, metric, "source", "lm")
            fields["lm"] = _fingerprint(args.lm)
            fields["source"] = _fingerprint(args.source)
    elif metric == "rarity":
        _require(args, metric, "source", "lm")
        fields["lm"] = _fingerprint(args.lm)
        fields["source"] = _fingerprint(args.source)
    elif metric == "uncertainty":
        _require(args, metric, "source", "entropy")
        fields["entropy"] = _fingerprint(args.entropy)
        fields["source"] = _fingerprint(args.source)
        fields["unknown_entropy"] = args.unknown_entropy
    stream = score_corpus(metric, alpha=alpha, k=k, align_path=args.align, source_path=args.source,
                          lm_path=args.lm, entropy_path=args.entropy,
                          entropy_default=args.unknown_entropy,
                          external_scores_path=args.external_lm_scores,
                          workers=args.workers, block_lines=args.block_lines,
                          max_line_bytes=args.max_line_bytes)
    return fields, stream


def cmd_score(args):
    kind = scoring.MetricKind(args.metric, args.k if args.metric == "mono" else None)
    fields, stream = _score_stream(args, kind.name, kind.k)
    fields["direction"] = args.direction or kind.preferred_direction

    def ticking():
        for n, rec in enumerate(stream):
            if n % 100000 == 0:
                _progress(args, n)
            yield rec

    n = scoring.write_scores(args.out, _header(args, **fields), ticking())
    _progress(args, n)


# ---------------------------------------------------------------- sample

def _scores_from_file(path):
    header, records = scoring.read_scores(path)
    return header, [(r.index, r.score) for r in records]


def _emit_text(args, indices):
    wanted = set(indices)
    outputs = [(args.source, ".src"), (args.target, ".tgt"), (args.align, ".align")]
    for path, suffix in outputs:
        if path is None:
            continue
        with open(args.emit_text + suffix, "w", encoding="utf-8", newline="\n") as fh:
            for n, line in enumerate(iter_lines(path, args.max_line_bytes)):
                if n in wanted:
                    fh.write(line + "\n")


def cmd_sample(args):
    if args.random:
        size = args.corpus_size
        if size is None:
            if args.source is None:
                raise MissingDependency("--random needs --corpus-size or --source")
            size = count_lines(args.source)
        result = sampling.random_sample(size, args.n, args.seed)
    elif args.combined:
        meta = {"k": args.k, "alpha": args.alpha}
        if args.chunk_scores and args.mono_scores:
            ch_head, chunk = _scores_from_file(args.chunk_scores)
            mo_head, mono = _scores_from_file(args.mono_scores)
            meta.update(k=mo_head.get("k"), alpha=mo_head.get("alpha"), chunk_metric=ch_head.get("metric"),
                        chunk_scores=_fingerprint(args.chunk_scores),
                        mono_scores=_fingerprint(args.mono_scores))
        else:
            chunk_metric = "chunk-" + args.chunk_metric
            meta["chunk_metric"] = chunk_metric
            ch_fields, ch_stream = _score_stream(args, chunk_metric, args.k)
            chunk = list(ch_stream)
            mo_fields, mo_stream = _score_stream(args, "mono", args.k)
            mono = list(mo_stream)
            meta.update({f"chunk_{k}": v for k, v in ch_fields.items() if k not in ("metric", "alpha")})
            meta["align"] = mo_fields["align"]
        result = sampling.combined_sample(chunk, mono, args.n, args.ratio, meta)
    else:
        if args.scores is None:
            raise MissingDependency("sample needs --scores, --combined or --random")
        header, records = _scores_from_file(args.scores)
        direction = args.direction or header.get("direction") or \
            scoring.MetricKind(header.get("metric", "chunk-align")).preferred_direction
        result = sampling.select_top(records, args.n, direction)
        result.provenance.update({"metric": header.get("metric"), "scores": _fingerprint(args.scores)})
    prov = dict(result.provenance)
    prov.update(_header(args))
    sampling.write_selection(args.out, sampling.SelectionResult(result.indices, prov))
    if args.emit_text:
        _emit_text(args, result.indices)


# ---------------------------------------------------------------- diagnose

def cmd_diagnose(args):
    ks = tuple(args.ks)
    report = _header(args, ks=list(ks), aggregation={"anticipation": "micro (pooled links)",
                                                      "g_hall": "macro (mean of sentence rates)",
                                                      "chunk_length": "mean of |A|/c over sentences with links"})
    if args.train_align is None and args.gen_align is None:
        raise MissingDependency("diagnose needs --train-align and/or --gen-align")
    report.update(t_anti=None, t_anti_by_k=None, t_cnk=None, g_hall=None, g_cnk=None)
    counts = {}
    if args.train_align is not None:
        anti = AnticipationStats(0, {k: 0 for k in ks})
        cnk = ChunkLengthStats()
        n_sent = 0
        for _, src, tgt, offsets in iter_alignment_csr(args.train_align, args.block_lines,
                                                       args.max_line_bytes):
            anti = anti + anticipation_stats_csr(src, tgt, offsets, ks)
            cnk = cnk + chunk_length_stats_csr(src, tgt, offsets)
            n_sent += offsets.size - 1
        report["t_anti"] = mean_rate(anti, ks)
        report["t_anti_by_k"] = {str(k): anti.rate(k) for k in ks}
        report["t_cnk"] = cnk.value
        counts["train"] = {"sentences": n_sent, "links": anti.links,
                           "chunk_sentences": cnk.sentences, "empty_alignments": cnk.skipped_empty}
    if args.gen_align is not None:
        _require(args, "g_hall", "gen_source", "gen_hyp")
        recs = list(zip_parallel(args.gen_source, args.gen_hyp, args.gen_align, args.max_line_bytes))
        hall = hallucination_stats(recs, ks)
        src, tgt, offsets = kernels.pack_alignments(r.alignment for r in recs)
        cnk = chunk_length_stats_csr(src, tgt, offsets)
        report["g_hall"] = {str(k): hall.rate(k) for k in ks}
        report["g_cnk"] = cnk.value
        counts["generation"] = {"sentences": len(recs), "links": int(src.size),
                                "target_tokens": sum(len(r.target) for r in recs),
                                "hall_sentences": hall.sentences, "empty_hypotheses": hall.skipped_empty,
                                "chunk_sentences": cnk.sentences, "empty_alignments": cnk.skipped_empty}
    report["counts"] = counts
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- chunks

def _chunk_rows_align(args):
    for start, src, tgt, offsets in iter_alignment_csr(args.align, args.block_lines, args.max_line_bytes):
        labels, counts = kernels.chunk_labels(src, tgt, offsets)
        for s in range(offsets.size - 1):
            a, b = offsets[s], offsets[s + 1]
            row = {"index": start + s, "c": int(counts[s]), "links": int(b - a)}
            if args.verbose:
                groups = [[None, None, None, None] for _ in range(int(counts[s]))]
                for i, j, g in zip(src[a:b].tolist(), tgt[a:b].tolist(), labels[a:b].tolist()):
                    box = groups[g]
                    box[0] = i if box[0] is None else min(box[0], i)
                    box[1] = i if box[1] is None else max(box[1], i)
                    box[2] = j if box[2] is None else min(box[2], j)
                    box[3] = j if box[3] is None else max(box[3], j)
                row["groups"] = [[[b0, b1], [b2, b3]] for b0, b1, b2, b3 in sorted(groups)]
            yield row


def _chunk_rows_lm(args):
    if args.external_lm_scores is not None:
        for start, lines in iter_line_blocks(args.external_lm_scores, args.block_lines, args.max_line_bytes):
            for n, line in enumerate(lines):
                values = [float(v) for v in line.split()]
                yield _lm_row(start + n, segment_logscores(values) if values else None, args.verbose)
        return
    model = ngram_lm.load(args.lm)
    for n, sent in enumerate(read_sentences(args.source, args.max_line_bytes)):
        yield _lm_row(n, segment_lm(sent, model) if sent else None, args.verbose)


def _lm_row(index, seg, verbose):
    row = {"index": index, "c": seg.c if seg else 0}
    if verbose:
        row["spans"] = [list(s) for s in seg.spans] if seg else []
    return row


def cmd_chunks(args):
    if args.align is not None:
        rows = _chunk_rows_align(args)
    elif args.external_lm_scores is not None or (args.source is not None and args.lm is not None):
        rows = _chunk_rows_lm(args)
    else:
        raise MissingDependency("chunks needs --align, or --source with --lm, or --external-lm-scores")
    out = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    try:
        for row in rows:
            out.write(json.dumps(row, sort_keys=True) + "\n")
    finally:
        if args.out:
            out.close()


# ---------------------------------------------------------------- correlate

def cmd_correlate(args):
    vectors = {}
    index_sets = []
    for path in args.scores:
        header, records = scoring.read_scores(path)
        name = header.get("metric", Path(path).stem)
        if name in vectors:
            name = f"{name}:{Path(path).stem}"
        vectors[name] = {r.index: r.score for r in records}
        index_sets.append(set(vectors[name]))
    common = sorted(set.intersection(*index_sets))
    aligned = {name: [v.get(i) for i in common] for name, v in vectors.items()}
    matrix = metric_correlations(aligned)
    payload = matrix.to_dict()
    payload.update(_header(args))
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out_json:
        Path(args.out_json).write_text(text, encoding="utf-8")
    table = matrix.to_text()
    if args.out_table:
        Path(args.out_table).write_text(table, encoding="utf-8")
    if not args.out_json and not args.out_table:
        sys.stdout.write(table)


# ---------------------------------------------------------------- parser

def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _k_list(text):
    return [_positive_int(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simtsel", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"simtsel {__version__} ({backend_name()})")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-line-bytes", type=_positive_int, default=1 << 20)
    common.add_argument("--block-lines", type=_positive_int, default=DEFAULT_BLOCK_LINES)
    common.add_argument("--stamp", action="store_true", help="add a UTC timestamp to output headers")
    common.add_argument("--progress", action="store_true", help="line counter on stderr")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--source", help="tokenized source corpus")
    inputs.add_argument("--target", help="tokenized target / pseudo-target corpus")
    inputs.add_argument("--align", help="Pharaoh alignment file (i-j, 0-based)")
    inputs.add_argument("--lm", help="model file from train-lm")
    inputs.add_argument("--entropy", help="entropy table from build-tables")
    inputs.add_argument("--unknown-entropy", type=float, default=0.0,
                        help="entropy for source tokens missing from the table (default 0)")
    inputs.add_argument("--external-lm-scores",
                        help="per-token LM log scores, one line per sentence; replaces --lm for chunk-lm")
    inputs.add_argument("--alpha", type=float, default=scoring.DEFAULT_ALPHA)
    inputs.add_argument("--k", type=_positive_int, default=scoring.DEFAULT_K)
    inputs.add_argument("--workers", type=_positive_int, default=1)
    inputs.add_argument("--direction", choices=[scoring.LOWER, scoring.HIGHER],
                        help="override the metric's preferred direction")

    s = sub.add_parser("train-lm", parents=[common], help="train the source-side n-gram model")
    s.add_argument("--corpus", required=True)
    s.add_argument("--order", type=_positive_int, default=3)
    s.add_argument("--backoff", type=float, default=0.4)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_lm)

    s = sub.add_parser("build-tables", parents=[common], help="translation counts and entropies")
    s.add_argument("--source", required=True)
    s.add_argument("--target", required=True)
    s.add_argument("--align", required=True)
    s.add_argument("--out-table", required=True)
    s.add_argument("--out-entropy", required=True)
    s.set_defaults(func=cmd_build_tables)

    s = sub.add_parser("score", parents=[common, inputs], help="score every line with one metric")
    s.add_argument("--metric", required=True, choices=scoring.METRICS)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("sample", parents=[common, inputs], help="select sentences")
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--combined", action="store_true", help="chunk oversample, then monotonicity rerank")
    mode.add_argument("--random", action="store_true", help="seeded uniform baseline")
    s.add_argument("--scores", help="score file for single-metric selection")
    s.add_argument("--chunk-scores")
    s.add_argument("--mono-scores")
    s.add_argument("--chunk-metric", choices=["align", "lm"], default="lm")
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--ratio", type=float, default=sampling.DEFAULT_RATIO)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--corpus-size", type=int)
    s.add_argument("--emit-text", metavar="PREFIX", help="write selected lines to PREFIX.src/.tgt/.align")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("diagnose", parents=[common], help="TAnti/TCnk/GHall/GCnk report")
    s.add_argument("--train-align")
    s.add_argument("--gen-source")
    s.add_argument("--gen-hyp")
    s.add_argument("--gen-align")
    s.add_argument("--ks", type=_k_list, default=list(DEFAULT_KS))
    s.add_argument("--out")
    s.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("chunks", parents=[common], help="dump per-line chunk counts as JSON lines")
    s.add_argument("--align")
    s.add_argument("--source")
    s.add_argument("--lm")
    s.add_argument("--external-lm-scores")
    s.add_argument("--verbose", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_chunks)

    s = sub.add_parser("correlate", parents=[common], help="Pearson matrix between score files")
    s.add_argument("scores", nargs="+")
    s.add_argument("--out-json")
    s.add_argument("--out-table")
    s.set_defaults(func=cmd_correlate)
    return p


def _fail(category, message):
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return EXIT_CODES.get(category, EXIT_CODES["internal"])


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (CorpusError, MissingDependency, sampling.ShortfallError, ngram_lm.EmptyCorpusError,
            align_stats.MissingAlignmentError) as exc:
        return _fail(exc.category, str(exc))
    except FileNotFoundError as exc:
        return _fail("input", f"{exc.filename}: file not found")
    except ValueError as exc:
        return _fail("usage", str(exc))
    finally:
        if getattr(args, "progress", False):
            print(file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
