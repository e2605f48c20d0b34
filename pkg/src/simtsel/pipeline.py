"""Block-wise corpus processing with optional worker processes.

Files are cut into fixed-size blocks of lines. Block boundaries never depend
on the worker count and results are always consumed in block order, so the
output of a run is identical for any ``workers`` value.
"""

from __future__ import annotations

import itertools
import os
from collections import deque
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import kernels
from .corpus_io import (DEFAULT_MAX_LINE_BYTES, AlignmentParseError, CorpusError, LineTooLong,
                        parse_alignment_line, parse_sentence)

DEFAULT_BLOCK_LINES = 20000


def iter_raw_blocks(path, block_lines: int = DEFAULT_BLOCK_LINES,
                    max_line_bytes: int = DEFAULT_MAX_LINE_BYTES):
    """Yield ``(first_line_index, bytes)``; every block ends with a newline."""
    start = 0
    with open(path, "rb") as fh:
        while True:
            lines = list(itertools.islice(fh, block_lines))
            if not lines:
                return
            for n, raw in enumerate(lines):
                if len(raw) > max_line_bytes + 1:
                    raise LineTooLong(f"line exceeds {max_line_bytes} bytes", line=start + n, path=path)
            if not lines[-1].endswith(b"\n"):
                lines[-1] += b"\n"
            yield start, b"".join(lines)
            start += len(lines)


def iter_line_blocks(path, block_lines: int = DEFAULT_BLOCK_LINES,
                     max_line_bytes: int = DEFAULT_MAX_LINE_BYTES):
    """Yield ``(first_line_index, [decoded lines])``."""
    for start, buf in iter_raw_blocks(path, block_lines, max_line_bytes):
        try:
            text = buf.decode("utf-8")
        except UnicodeDecodeError as exc:
            line = start + buf[:exc.start].count(b"\n")
            raise CorpusError(f"invalid UTF-8 ({exc.reason})", line=line, path=path) from None
        yield start, [ln.rstrip("\r") for ln in text.split("\n")[:-1]]


def parse_alignment_block(start: int, buf: bytes, path=None):
    """CSR arrays for one block of Pharaoh lines.

    Uses the fast kernel and falls back to the strict per-line parser when the
    kernel meets anything unusual, which either raises a precise
    :class:`AlignmentParseError` or handles exotic whitespace correctly.
    """
    src, tgt, offsets, bad = kernels.parse_pharaoh(buf)
    if bad < 0:
        return src, tgt, offsets
    try:
        lines = buf.decode("utf-8").split("\n")[:-1]
    except UnicodeDecodeError as exc:
        line = start + buf[:exc.start].count(b"\n")
        raise CorpusError(f"invalid UTF-8 ({exc.reason})", line=line, path=path) from None
    links = []
    for n, line in enumerate(lines):
        try:
            links.append(parse_alignment_line(line, start + n))
        except AlignmentParseError as exc:
            raise AlignmentParseError(exc.detail, line=start + n, path=path) from None
    return kernels.pack_alignments(links)


def ordered_map(fn, items, workers: int = 1, initializer=None, initargs=()):
    """``map(fn, items)`` in input order, with at most ``2 * workers`` blocks in flight."""
    if workers <= 1:
        if initializer is not None:
            initializer(*initargs)
        yield from map(fn, items)
        return
    with ProcessPoolExecutor(max_workers=workers, initializer=initializer, initargs=initargs) as pool:
        pending = deque()
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= 2 * workers:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))


# ---------------------------------------------------------------- worker state

_STATE = {}


def _init_worker(state: dict):
    _STATE.clear()
    _STATE.update(state)
    if "lm_path" in state and state["lm_path"]:
        from .ngram_lm import load
        _STATE["model"] = load(state["lm_path"])
    if state.get("entropy_path"):
        from .align_stats import load_entropy
        _STATE["entropies"] = load_entropy(state["entropy_path"], state.get("entropy_default", 0.0))


def _score_alignment_block(job):
    from .scoring import chunk_align_scores, mono_scores
    start, buf = job
    src, tgt, offsets = parse_alignment_block(start, buf, _STATE.get("path"))
    metric = _STATE["metric"]
    if metric == "chunk-align":
        scores = chunk_align_scores(src, tgt, offsets, _STATE["alpha"])
    else:
        scores = mono_scores(src, tgt, offsets, _STATE["k"], _STATE["alpha"])
    return start, scores


def _score_sentence_block(job):
    from .scoring import score_chunk_lm, score_rarity, score_uncertainty
    start, lines = job
    metric = _STATE["metric"]
    alpha = _STATE["alpha"]
    out = np.full(len(lines), np.nan)
    for n, line in enumerate(lines):
        sent = parse_sentence(line)
        if metric == "chunk-lm":
            s = score_chunk_lm(sent, _STATE["model"], alpha)
        elif metric == "rarity":
            s = score_rarity(sent, _STATE["model"].unigram, alpha)
        else:
            s = score_uncertainty(sent, _STATE["entropies"], alpha)
        if s is not None:
            out[n] = s
    return start, out


def _score_external_block(job):
    from .scoring import score_chunk_lm_external
    start, lines = job
    out = np.full(len(lines), np.nan)
    for n, line in enumerate(lines):
        try:
            values = [float(v) for v in line.split()]
        except ValueError:
            raise CorpusError("external LM scores must be floats", line=start + n,
                              path=_STATE.get("path")) from None
        s = score_chunk_lm_external(values, _STATE["alpha"])
        if s is not None:
            out[n] = s
    return start, out


def score_corpus(metric: str, *, alpha: float, k: int = 3, align_path=None, source_path=None,
                 lm_path=None, entropy_path=None, entropy_default: float = 0.0,
                 external_scores_path=None, workers: int = 1,
                 block_lines: int = DEFAULT_BLOCK_LINES,
                 max_line_bytes: int = DEFAULT_MAX_LINE_BYTES):
    """Yield ``(index, score)`` for every line; unscorable lines give NaN."""
    state = {"metric": metric, "alpha": alpha, "k": k, "entropy_default": entropy_default}
    if metric in ("chunk-align", "mono"):
        state["path"] = str(align_path)
        fn = _score_alignment_block
        jobs = iter_raw_blocks(align_path, block_lines, max_line_bytes)
    elif metric == "chunk-lm" and external_scores_path is not None:
        state["path"] = str(external_scores_path)
        fn = _score_external_block
        jobs = iter_line_blocks(external_scores_path, block_lines, max_line_bytes)
    else:
        state["path"] = str(source_path)
        state["lm_path"] = str(lm_path) if lm_path else None
        state["entropy_path"] = str(entropy_path) if entropy_path else None
        fn = _score_sentence_block
        jobs = iter_line_blocks(source_path, block_lines, max_line_bytes)
    for start, scores in ordered_map(fn, jobs, workers, _init_worker, (state,)):
        for n, s in enumerate(scores.tolist()):
            yield start + n, s


def iter_alignment_csr(path, block_lines: int = DEFAULT_BLOCK_LINES,
                       max_line_bytes: int = DEFAULT_MAX_LINE_BYTES):
    """Yield ``(first_line_index, src, tgt, offsets)`` per block of an alignment file."""
    for start, buf in iter_raw_blocks(path, block_lines, max_line_bytes):
        yield (start,) + tuple(parse_alignment_block(start, buf, path))
