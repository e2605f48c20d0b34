"""Chunk extraction.

Two ways of cutting a sentence into chunks:

* from a word alignment: the chunks are the finest partition of the link set
  in which every group is *closed*, i.e. no link outside the group has its
  source index inside the group's source span or its target index inside the
  group's target span;
* from a source-side language model: a running span is closed as soon as
  appending the next token strictly lowers the span's mean log score.

The batch path for alignment files lives in :mod:`simtsel.kernels`; the
functions here work on one sentence at a time.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .ngram_lm import BOS, NgramModel


@dataclass(frozen=True)
class ChunkPartition:
    groups: tuple  # of frozensets of (i, j), ordered by their smallest link

    @property
    def c(self) -> int:
        return len(self.groups)

    def ranges(self) -> list:
        """``((i_min, i_max), (j_min, j_max))`` per group."""
        out = []
        for g in self.groups:
            src = [i for i, _ in g]
            tgt = [j for _, j in g]
            out.append(((min(src), max(src)), (min(tgt), max(tgt))))
        return out


def _canonical(groups) -> ChunkPartition:
    return ChunkPartition(tuple(sorted((frozenset(g) for g in groups), key=min)))


def is_closed(group, alignment) -> bool:
    """True if no link outside ``group`` falls into its source or target span."""
    i_lo = min(i for i, _ in group)
    i_hi = max(i for i, _ in group)
    j_lo = min(j for _, j in group)
    j_hi = max(j for _, j in group)
    for i, j in alignment:
        if (i, j) in group:
            continue
        if i_lo <= i <= i_hi or j_lo <= j <= j_hi:
            return False
    return True


def extract_chunks_align(alignment) -> ChunkPartition:
    """Minimal closed chunks of an alignment.

    Starts from singleton groups and repeatedly merges groups whose source
    spans overlap, then groups whose target spans overlap, until neither
    axis changes. The result does not depend on link order.
    """
    links = sorted(set(alignment))
    if not links:
        return ChunkPartition(())
    groups = [[link] for link in links]
    while True:
        merged = False
        for axis in (0, 1):
            spans = sorted(
                (min(l[axis] for l in g), max(l[axis] for l in g), g) for g in groups)
            out = []
            cur_lo, cur_hi, cur = spans[0]
            for lo, hi, g in spans[1:]:
                if lo <= cur_hi:
                    cur = cur + g
                    cur_hi = max(cur_hi, hi)
                    merged = True
                else:
                    out.append(cur)
                    cur_hi, cur = hi, g
            out.append(cur)
            groups = out
        if not merged:
            break
    return _canonical(groups)


def chunk_count(alignment) -> int:
    return extract_chunks_align(alignment).c


# ---------------------------------------------------------------- exhaustive oracle

class OracleTooLarge(ValueError):
    pass


def oracle_minimal_blocks(alignment, max_links: int = 12, max_span: int = 8) -> ChunkPartition:
    """Brute-force chunking straight from the block definition.

    A candidate block is a pair of contiguous index ranges ``(Rx, Ry)`` such
    that

    1. every link leaving a source position in ``Rx`` lands in ``Ry``, and
       the first and last positions of ``Rx`` are aligned;
    2. the same with source and target swapped;
    3. no link joins a position inside ``Rx`` to one outside ``Ry``;
    4. no link joins a position outside ``Rx`` to one inside ``Ry``.

    Minimality is decided over whole tilings: every way of covering the link
    set with disjoint candidate blocks is enumerated and the tiling with the
    most blocks is returned. Candidate link sets are closed under
    intersection, so that tiling is unique and refines every other; this is
    asserted rather than assumed.

    Only meant for small inputs: raises :class:`OracleTooLarge` past
    ``max_links`` links or a source/target index range wider than
    ``max_span``.
    """
    links = sorted(set(alignment))
    if not links:
        return ChunkPartition(())
    if len(links) > max_links:
        raise OracleTooLarge(f"{len(links)} links exceeds the oracle bound of {max_links}")
    i_lo = min(i for i, _ in links)
    i_hi = max(i for i, _ in links)
    j_lo = min(j for _, j in links)
    j_hi = max(j for _, j in links)
    if i_hi - i_lo + 1 > max_span or j_hi - j_lo + 1 > max_span:
        raise OracleTooLarge(f"index span exceeds the oracle bound of {max_span}")

    bit = {link: 1 << n for n, link in enumerate(links)}
    row = {}
    col = {}
    for (i, j), b in bit.items():
        row[i] = row.get(i, 0) | b
        col[j] = col.get(j, 0) | b
    full = (1 << len(links)) - 1

    def band(masks, lo, hi):
        m = 0
        for p in range(lo, hi + 1):
            m |= masks.get(p, 0)
        return m

    candidates = set()
    for a, b in itertools.combinations_with_replacement(range(i_lo, i_hi + 1), 2):
        rows = band(row, a, b)
        if not (row.get(a) and row.get(b)):
            continue
        for c, d in itertools.combinations_with_replacement(range(j_lo, j_hi + 1), 2):
            if not (col.get(c) and col.get(d)):
                continue
            cols = band(col, c, d)
            inside = rows & cols
            if not inside:
                continue
            # condition 1 and 3: everything touching Rx stays inside Ry
            if rows & ~inside:
                continue
            # condition 2 and 4: everything touching Ry stays inside Rx
            if cols & ~inside:
                continue
            candidates.add(inside)

    best = []
    best_size = [0]

    def search(covered, chosen):
        if covered == full:
            if len(chosen) > best_size[0]:
                best_size[0] = len(chosen)
                best[:] = [tuple(chosen)]
            elif len(chosen) == best_size[0]:
                best.append(tuple(chosen))
            return
        low = (~covered & full) & -(~covered & full)
        for cand in candidates:
            if cand & low and not cand & covered:
                chosen.append(cand)
                search(covered | cand, chosen)
                chosen.pop()

    search(0, [])
    distinct = {frozenset(t) for t in best}
    assert len(distinct) == 1, "finest tiling is not unique"
    masks = next(iter(distinct))
    groups = [[link for link, b in bit.items() if b & m] for m in masks]
    return _canonical(groups)


# ---------------------------------------------------------------- LM segmentation

@dataclass(frozen=True)
class LmSegmentation:
    spans: tuple  # half-open (start, end) token ranges

    @property
    def c(self) -> int:
        return len(self.spans)


def _segment(n: int, token_score: Callable[[int, int], float]) -> LmSegmentation:
    # token_score(start, t): log score of token t inside a span opened at start.
    # Appending lowers the mean exactly when the new token scores below the
    # current mean, i.e. len * lp < sum; both sides are correctly rounded
    # (fsum, one multiply) so equal-score runs never split on rounding noise.
    if n < 1:
        raise ValueError("cannot segment an empty sentence")
    spans = []
    start = 0
    scores = [token_score(0, 0)]
    for t in range(1, n):
        lp = token_score(start, t)
        if len(scores) * lp < math.fsum(scores):
            spans.append((start, t))
            start = t
            scores = [token_score(t, t)]
        else:
            scores.append(lp)
    spans.append((start, n))
    return LmSegmentation(tuple(spans))


def segment_lm(sentence: Sequence[str], model: NgramModel) -> LmSegmentation:
    """Split ``sentence`` where the running span's mean LM score drops.

    A freshly opened span is scored as if it began a sentence. Ties do not
    split, and the last span always counts, so ``1 <= c <= len(sentence)``.
    """
    tokens = list(sentence)
    ctx_len = model.order - 1

    def token_score(start, t):
        history = [BOS] + tokens[start:t]
        return model.logscore(tokens[t], history[max(0, len(history) - ctx_len):] if ctx_len else ())

    return _segment(len(tokens), token_score)


def segment_logscores(logscores: Sequence[float]) -> LmSegmentation:
    """Same segmentation rule driven by precomputed per-token log scores.

    Used with externally computed LM scores; a restarted span keeps each
    token's original score instead of rescoring it from sentence start.
    """
    values = [float(v) for v in logscores]
    return _segment(len(values), lambda start, t: values[t])
