"""Training-data and generation diagnostics under a wait-k policy.

* anticipation rate (k-AR): pooled share of links with ``i >= j + k``;
* TAnti: k-AR averaged over ``ks`` (default 1, 3, 5, 7, 9);
* TCnk / GCnk: mean links-per-chunk ``|A| / c`` over sentences with links;
* GHall: share of hypothesis words with no link to a source word that is
  visible when the word is emitted, averaged over sentences.

Indices in alignments are 0-based; target positions passed to
:func:`visible_prefix_len` are 1-based like the wait-k schedule itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import kernels

DEFAULT_KS = (1, 3, 5, 7, 9)


def visible_prefix_len(t: int, k: int, src_len: int) -> int:
    """Number of source tokens read before target word ``t`` (1-based) is written."""
    if t < 1 or k < 1 or src_len < 1:
        raise ValueError("t, k and src_len must be >= 1")
    return min(k + t - 1, src_len)


# ---------------------------------------------------------------- accumulators

@dataclass
class AnticipationStats:
    """Pooled link counts; shards combine with ``+``."""

    links: int
    hits: dict  # k -> anticipating links

    def __add__(self, other):
        return AnticipationStats(self.links + other.links,
                                 {k: self.hits[k] + other.hits.get(k, 0) for k in self.hits})

    def rate(self, k: int) -> Optional[float]:
        return self.hits[k] / self.links if self.links else None


def anticipation_stats_csr(src, tgt, offsets, ks=DEFAULT_KS) -> AnticipationStats:
    return AnticipationStats(int(src.size),
                             {k: int(kernels.anticipation_counts(src, tgt, offsets, k).sum()) for k in ks})


def anticipation_stats(alignments: Iterable, ks=DEFAULT_KS) -> AnticipationStats:
    links = 0
    hits = {k: 0 for k in ks}
    for alignment in alignments:
        alignment = set(alignment)
        links += len(alignment)
        for k in ks:
            hits[k] += sum(1 for i, j in alignment if i >= j + k)
    return AnticipationStats(links, hits)


def anticipation_rate(alignments: Iterable, k: int) -> Optional[float]:
    """Pooled k-anticipation rate; ``None`` when the corpus has no links."""
    return anticipation_stats(alignments, (k,)).rate(k)


def t_anti(alignments: Iterable, ks=DEFAULT_KS) -> Optional[float]:
    stats = anticipation_stats(alignments, ks)
    return mean_rate(stats, ks)


def mean_rate(stats: AnticipationStats, ks) -> Optional[float]:
    if not stats.links:
        return None
    return math.fsum(stats.rate(k) for k in ks) / len(ks)


@dataclass
class ChunkLengthStats:
    total: float = 0.0   # sum of per-sentence |A| / c
    sentences: int = 0
    skipped_empty: int = 0

    def __add__(self, other):
        return ChunkLengthStats(self.total + other.total, self.sentences + other.sentences,
                                self.skipped_empty + other.skipped_empty)

    @property
    def value(self) -> Optional[float]:
        return self.total / self.sentences if self.sentences else None


def chunk_length_stats_csr(src, tgt, offsets, use_numba=None) -> ChunkLengthStats:
    n_links = np.diff(offsets)
    c = kernels.chunk_counts(src, tgt, offsets, use_numba)
    ok = c > 0
    return ChunkLengthStats(math.fsum((n_links[ok] / c[ok]).tolist()), int(ok.sum()), int((~ok).sum()))


def avg_chunk_len(alignments: Iterable) -> Optional[float]:
    """Mean ``|A| / c`` over sentences with at least one link."""
    src, tgt, offsets = kernels.pack_alignments(alignments)
    return chunk_length_stats_csr(src, tgt, offsets).value


# ---------------------------------------------------------------- hallucination

def hallucinated_words(src_len: int, hyp_len: int, alignment, k: int) -> int:
    """Count hypothesis words with no link to a currently visible source word."""
    best = {}
    for i, j in alignment:
        if i < best.get(j, i + 1):
            best[j] = i
    count = 0
    for j in range(hyp_len):
        first = best.get(j)
        if first is None or first >= visible_prefix_len(j + 1, k, src_len):
            count += 1
    return count


@dataclass
class HallucinationStats:
    sums: dict      # k -> sum of per-sentence rates
    sentences: int = 0
    skipped_empty: int = 0

    def __add__(self, other):
        return HallucinationStats({k: self.sums[k] + other.sums.get(k, 0.0) for k in self.sums},
                                  self.sentences + other.sentences,
                                  self.skipped_empty + other.skipped_empty)

    def rate(self, k: int) -> Optional[float]:
        return self.sums[k] / self.sentences if self.sentences else None


def hallucination_stats(records: Iterable, ks=DEFAULT_KS) -> HallucinationStats:
    """Per-sentence rates summed per k. Records need source, target and alignment;
    the target is the system hypothesis. Empty hypotheses are skipped and counted."""
    stats = HallucinationStats({k: 0.0 for k in ks})
    for rec in records:
        if rec.alignment is None or rec.target is None:
            raise ValueError(f"record {rec.index} has no hypothesis alignment")
        hyp_len = len(rec.target)
        if hyp_len == 0 or len(rec.source) == 0:
            stats.skipped_empty += 1
            continue
        for k in ks:
            stats.sums[k] += hallucinated_words(len(rec.source), hyp_len, rec.alignment, k) / hyp_len
        stats.sentences += 1
    return stats


def g_hall(records: Iterable, k: int) -> Optional[float]:
    """Macro-averaged hallucination rate of hypotheses under wait-k."""
    return hallucination_stats(records, (k,)).rate(k)


# ---------------------------------------------------------------- correlations

@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple
    matrix: tuple       # rows of floats, None where undefined
    rows_used: int
    rows_dropped: int

    def to_dict(self) -> dict:
        return {"metrics": list(self.names), "matrix": [list(r) for r in self.matrix],
                "rows_used": self.rows_used, "rows_dropped": self.rows_dropped}

    def to_text(self, digits: int = 4) -> str:
        cells = [[""] + list(self.names)]
        for name, row in zip(self.names, self.matrix):
            cells.append([name] + ["NA" if v is None else f"{v:.{digits}f}" for v in row])
        widths = [max(len(r[c]) for r in cells) for c in range(len(cells[0]))]
        return "\n".join("  ".join(v.rjust(w) for v, w in zip(r, widths)).rstrip() for r in cells) + "\n"


def metric_correlations(score_vectors: Mapping[str, Sequence]) -> CorrelationMatrix:
    """Pearson correlation between every pair of aligned score vectors.

    Rows where any metric is missing (``None``/NaN) are dropped first. A
    metric with zero variance gets ``None`` entries, including its diagonal.
    """
    names = tuple(score_vectors)
    if not names:
        raise ValueError("no score vectors given")
    if len({len(score_vectors[n]) for n in names}) != 1:
        raise ValueError("score vectors must have equal length")
    data = np.array([[np.nan if v is None else float(v) for v in score_vectors[n]] for n in names],
                    dtype=np.float64).reshape(len(names), -1)
    keep = ~np.isnan(data).any(axis=0)
    data = data[:, keep]
    used = int(keep.sum())
    if used < 2:
        raise ValueError(f"need at least 2 complete rows, have {used}")
    centred = data - data.mean(axis=1, keepdims=True)
    norms = np.sqrt((centred ** 2).sum(axis=1))
    flat = norms == 0
    if flat.any():
        warnings.warn(f"zero-variance scores for {[n for n, f in zip(names, flat) if f]}", RuntimeWarning)
    m = len(names)
    out = [[None] * m for _ in range(m)]
    for a in range(m):
        for b in range(a, m):
            if flat[a] or flat[b]:
                continue
            r = 1.0 if a == b else float(np.dot(centred[a], centred[b]) / (norms[a] * norms[b]))
            r = min(1.0, max(-1.0, r))
            out[a][b] = out[b][a] = r
    return CorrelationMatrix(names, tuple(tuple(r) for r in out), used, int((~keep).sum()))
