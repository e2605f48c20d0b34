"""Sentence selection metrics.

Every metric carries a length bias ``alpha`` in (0, 1]: length-like terms
``L`` become ``L**alpha`` (or ``L**(1/alpha)`` in the monotonicity
denominator) so that, at equal per-token quality, longer sentences win.

==============  =====================================  =========
metric          score                                  preferred
==============  =====================================  =========
chunk-align     ``|A|**alpha / c``                     lower
chunk-lm        ``|x|**alpha / c``                     lower
mono            ``#{i >= j + k} / |A|**(1/alpha)``     lower
rarity          ``-sum(log p(x_t)) / |x|**alpha``      higher
uncertainty     ``sum(H(x_t)) / |x|**alpha``           higher
==============  =====================================  =========

``None`` (or NaN in array form) marks an unscorable sentence: an empty
alignment for the alignment metrics, an empty sentence for the others.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

import numpy as np

from . import kernels
from .chunking import chunk_count, segment_lm, segment_logscores

DEFAULT_ALPHA = 0.5
DEFAULT_K = 3

LOWER = "lower"
HIGHER = "higher"

_DIRECTIONS = {
    "chunk-align": LOWER,
    "chunk-lm": LOWER,
    "mono": LOWER,
    "rarity": HIGHER,
    "uncertainty": HIGHER,
}
METRICS = tuple(_DIRECTIONS)


@dataclass(frozen=True)
class MetricKind:
    name: str
    k: Optional[int] = None

    def __post_init__(self):
        if self.name not in _DIRECTIONS:
            raise ValueError(f"unknown metric {self.name!r}; expected one of {', '.join(METRICS)}")
        if self.name == "mono":
            if self.k is None:
                object.__setattr__(self, "k", DEFAULT_K)
            if self.k < 1:
                raise ValueError("k must be >= 1")

    @property
    def preferred_direction(self) -> str:
        return _DIRECTIONS[self.name]


class ScoreRecord(NamedTuple):
    index: int
    score: Optional[float]


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    return alpha


# ---------------------------------------------------------------- per sentence

def score_chunk_align(alignment, alpha: float = DEFAULT_ALPHA) -> Optional[float]:
    c = chunk_count(alignment)
    if c == 0:
        return None
    return len(set(alignment)) ** alpha / c


def score_chunk_lm(sentence, model, alpha: float = DEFAULT_ALPHA) -> Optional[float]:
    if not sentence:
        return None
    return len(sentence) ** alpha / segment_lm(sentence, model).c


def score_chunk_lm_external(logscores, alpha: float = DEFAULT_ALPHA) -> Optional[float]:
    if not logscores:
        return None
    return len(logscores) ** alpha / segment_logscores(logscores).c


def score_mono(alignment, k: int = DEFAULT_K, alpha: float = DEFAULT_ALPHA) -> Optional[float]:
    links = set(alignment)
    if not links:
        return None
    hits = sum(1 for i, j in links if i >= j + k)
    return hits / len(links) ** (1.0 / alpha)


def score_rarity(sentence, unigram, alpha: float = DEFAULT_ALPHA) -> Optional[float]:
    if not sentence:
        return None
    return -math.fsum(unigram.logprob(tok) for tok in sentence) / len(sentence) ** alpha


def score_uncertainty(sentence, entropies, alpha: float = DEFAULT_ALPHA) -> Optional[float]:
    if not sentence:
        return None
    return math.fsum(entropies.get(tok) for tok in sentence) / len(sentence) ** alpha


# ---------------------------------------------------------------- batch (CSR arrays)

def chunk_align_scores(src, tgt, offsets, alpha: float = DEFAULT_ALPHA, use_numba=None):
    """Vector of chunk-align scores, NaN where the alignment is empty."""
    n_links = np.diff(offsets).astype(np.float64)
    c = kernels.chunk_counts(src, tgt, offsets, use_numba).astype(np.float64)
    out = np.full(n_links.size, np.nan)
    ok = c > 0
    out[ok] = np.power(n_links[ok], alpha) / c[ok]
    return out


def mono_scores(src, tgt, offsets, k: int = DEFAULT_K, alpha: float = DEFAULT_ALPHA):
    n_links = np.diff(offsets).astype(np.float64)
    hits = kernels.anticipation_counts(src, tgt, offsets, k).astype(np.float64)
    out = np.full(n_links.size, np.nan)
    ok = n_links > 0
    out[ok] = hits[ok] / np.power(n_links[ok], 1.0 / alpha)
    return out


# ---------------------------------------------------------------- score files

def format_score(score) -> str:
    if score is None or (isinstance(score, float) and math.isnan(score)):
        return "NA"
    return repr(float(score))


def write_scores(path, header: dict, scores: Iterable) -> int:
    """Write ``#<json header>`` then ``index<TAB>score`` lines; returns the count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("#" + json.dumps(header, sort_keys=True) + "\n")
        for index, score in scores:
            fh.write(f"{index}\t{format_score(score)}\n")
            n += 1
    return n


def read_scores(path):
    """Returns ``(header, [ScoreRecord, ...])`` with ``None`` for NA."""
    header = {}
    records = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                if n == 0:
                    header = json.loads(line[1:])
                continue
            try:
                idx, val = line.split("\t")
                records.append(ScoreRecord(int(idx), None if val == "NA" else float(val)))
            except ValueError:
                raise ValueError(f"{path}:{n}: expected 'index<TAB>score'") from None
    return header, records
