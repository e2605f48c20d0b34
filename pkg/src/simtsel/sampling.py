"""Turning scores into selected line sets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .scoring import HIGHER, LOWER

DEFAULT_RATIO = 1.6


class ShortfallError(ValueError):
    category = "shortfall"

    def __init__(self, message, available=None, stage=None):
        super().__init__(message)
        self.available = available
        self.stage = stage


@dataclass(frozen=True)
class SelectionResult:
    indices: tuple
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.indices)


def _scorable_arrays(scores: Iterable):
    idx, val = [], []
    for index, score in scores:
        if score is None or math.isnan(score):
            continue
        idx.append(index)
        val.append(score)
    return np.asarray(idx, np.int64), np.asarray(val, np.float64)


def _top(idx, val, n, direction):
    if direction == LOWER:
        key = val
    elif direction == HIGHER:
        key = -val
    else:
        raise ValueError(f"direction must be {LOWER!r} or {HIGHER!r}")
    order = np.lexsort((idx, key))[:n]
    return np.sort(idx[order])


def select_top(scores: Iterable, n: int, direction: str = LOWER, stage: str = "select") -> SelectionResult:
    """The ``n`` best scorable records; ties go to the smaller line index.

    ``scores`` yields ``(index, score)`` pairs; ``None``/NaN scores are never
    selected. Indices come back in corpus order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    idx, val = _scorable_arrays(scores)
    if idx.size < n:
        raise ShortfallError(
            f"{stage}: requested {n} sentences but only {idx.size} are scorable",
            available=int(idx.size), stage=stage)
    chosen = _top(idx, val, n, direction)
    return SelectionResult(tuple(int(i) for i in chosen),
                           {"mode": "top", "direction": direction, "n": n, "scorable": int(idx.size)})


def oversample_size(n: int, ratio: float) -> int:
    """``ceil(ratio * n)`` evaluated on the decimal value of ``ratio``.

    Plain float multiplication turns 1.1 * 10 into 11.000000000000002.
    """
    return math.ceil(Fraction(repr(float(ratio))) * n)


def combined_sample(chunk_scores: Sequence, mono_scores: Sequence, n: int,
                    ratio: float = DEFAULT_RATIO, meta: dict | None = None) -> SelectionResult:
    """Two-stage selection: oversample by a chunk metric, rerank by monotonicity.

    Stage 1 keeps the ``ceil(ratio * n)`` lowest chunk scores, stage 2 keeps
    the ``n`` lowest monotonicity scores among them. Both inputs are
    ``(index, score)`` pairs over the same corpus.
    """
    if not ratio > 1.0:
        raise ValueError("ratio must be > 1")
    stage1_size = oversample_size(n, ratio)
    stage1 = select_top(chunk_scores, stage1_size, LOWER, stage="stage 1 (chunk)")
    keep = set(stage1.indices)
    restricted = [(i, s) for i, s in mono_scores if i in keep]
    stage2 = select_top(restricted, n, LOWER, stage="stage 2 (monotonicity)")
    prov = {"mode": "combined", "n": n, "ratio": ratio,
            "stage1_size": stage1_size, "stage2_size": len(stage2.indices)}
    if meta:
        prov.update(meta)
    return SelectionResult(stage2.indices, prov)


# ---------------------------------------------------------------- random baseline

class _RawStream:
    """Unsigned 64-bit words from numpy's Philox-4x64 counter generator.

    Only ``random_raw`` is used, whose output is fixed by the Philox
    algorithm and numpy's SeedSequence, so selections reproduce across
    platforms and numpy releases (unlike ``Generator.choice``).
    """

    def __init__(self, seed: int, batch: int = 4096):
        self._bits = np.random.Philox(seed)
        self._batch = batch
        self._buf = []

    def next(self) -> int:
        if not self._buf:
            self._buf = self._bits.random_raw(self._batch).tolist()[::-1]
        return self._buf.pop()

    def below(self, bound: int) -> int:
        # rejection keeps the draw exactly uniform on [0, bound)
        limit = (1 << 64) - (1 << 64) % bound
        while True:
            r = self.next()
            if r < limit:
                return r % bound


def random_sample(corpus_size: int, n: int, seed: int = 0) -> SelectionResult:
    """Uniform sample of ``n`` line indices without replacement (Floyd's method)."""
    if n > corpus_size:
        raise ShortfallError(f"cannot sample {n} lines from a corpus of {corpus_size}",
                             available=corpus_size, stage="random")
    if n < 0:
        raise ValueError("n must be non-negative")
    stream = _RawStream(seed)
    chosen = set()
    for upper in range(corpus_size - n, corpus_size):
        t = stream.below(upper + 1)
        chosen.add(upper if t in chosen else t)
    return SelectionResult(tuple(sorted(chosen)),
                           {"mode": "random", "n": n, "corpus_size": corpus_size, "seed": seed,
                            "prng": "philox4x64/floyd"})


# ---------------------------------------------------------------- selection files

def write_selection(path, result: SelectionResult) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("#" + json.dumps(result.provenance, sort_keys=True) + "\n")
        for i in result.indices:
            fh.write(f"{i}\n")


def read_selection(path) -> SelectionResult:
    prov = {}
    idx = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                prov = json.loads(line[1:])
                continue
            idx.append(int(line))
    return SelectionResult(tuple(idx), prov)
