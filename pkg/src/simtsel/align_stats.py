"""Lexical translation counts and per-token translation entropy.

Counts come straight from alignment links: every link ``(i, j)`` adds one to
``table[source[i]][target[j]]``. Entropies use natural logs.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable


class MissingAlignmentError(ValueError):
    category = "input"


@dataclass(frozen=True)
class TranslationTable:
    table: dict      # source token -> {target token: link count}
    marginals: dict  # source token -> total link count

    def merge(self, other: "TranslationTable") -> "TranslationTable":
        """Count-wise sum; used to combine shards built independently."""
        merged = defaultdict(Counter)
        for src in (self.table, other.table):
            for x, row in src.items():
                merged[x].update(row)
        return _freeze(merged)


def _freeze(counts) -> TranslationTable:
    table = {x: dict(row) for x, row in counts.items() if row}
    return TranslationTable(table, {x: sum(row.values()) for x, row in table.items()})


def build_translation_table(records: Iterable) -> TranslationTable:
    counts = defaultdict(Counter)
    for rec in records:
        if rec.alignment is None or rec.target is None:
            raise MissingAlignmentError(f"record {rec.index} has no target/alignment")
        src, tgt = rec.source, rec.target
        for i, j in rec.alignment:
            counts[src[i]][tgt[j]] += 1
    return _freeze(counts)


@dataclass(frozen=True)
class EntropyTable:
    entropy: dict
    default: float = 0.0

    def get(self, token: str) -> float:
        return self.entropy.get(token, self.default)


def token_entropy(row: dict) -> float:
    total = sum(row.values())
    h = 0.0
    for c in row.values():
        p = c / total
        h -= p * math.log(p)
    # a single outcome gives -1*log(1) = -0.0
    return h + 0.0


def compute_entropy(table: TranslationTable, default: float = 0.0) -> EntropyTable:
    """Entropy of ``p(y | x) = count(x, y) / count(x)`` for every source token.

    ``default`` is what unseen tokens get at lookup time; 0 treats a token
    never aligned in the bilingual data as carrying no translation ambiguity.
    """
    if not table.table:
        raise ValueError("translation table is empty")
    return EntropyTable({x: token_entropy(row) for x, row in table.table.items()}, default)


# ---------------------------------------------------------------- text formats

def save_translation_table(table: TranslationTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x in sorted(table.table):
            row = table.table[x]
            for y in sorted(row):
                fh.write(f"{x}\t{y}\t{row[y]}\n")


def load_translation_table(path) -> TranslationTable:
    counts = defaultdict(Counter)
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                x, y, c = line.split("\t")
                counts[x][y] += int(c)
            except ValueError:
                raise ValueError(f"{path}:{n}: expected 'source<TAB>target<TAB>count'") from None
    return _freeze(counts)


def save_entropy(entropies: EntropyTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for x in sorted(entropies.entropy):
            fh.write(f"{x}\t{entropies.entropy[x]!r}\n")


def load_entropy(path, default: float = 0.0) -> EntropyTable:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                x, h = line.split("\t")
                out[x] = float(h)
            except ValueError:
                raise ValueError(f"{path}:{n}: expected 'token<TAB>entropy'") from None
    return EntropyTable(out, default)
