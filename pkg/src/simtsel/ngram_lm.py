"""Source-side unigram table and stupid-backoff n-gram model.

All log probabilities are natural logs. The unigram floor uses add-one
smoothing with one extra slot reserved for unseen tokens::

    p(x) = (count(x) + 1) / (total + vocab_size + 1)

so that the probabilities of the vocabulary plus a single OOV bucket sum to 1.

Higher orders use stupid backoff: a seen n-gram scores
``count(context + w) / continuation(context)``, an unseen one scores
``backoff * score(w | shorter context)``, and the empty context bottoms out
at the smoothed unigram. Scores above order 1 are therefore not normalised
probabilities, which is fine for ranking.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

# corpus tokens spelled "<s>" are indistinguishable from the sentence-start marker
BOS = "<s>"
FORMAT_VERSION = 1
_MAGIC = "#simtsel-ngram"


class EmptyCorpusError(ValueError):
    category = "input"


@dataclass(frozen=True)
class UnigramTable:
    counts: dict
    total: int
    vocab_size: int

    @classmethod
    def from_counts(cls, counts) -> "UnigramTable":
        counts = {tok: int(c) for tok, c in counts.items() if c > 0}
        return cls(counts, sum(counts.values()), len(counts))

    @property
    def denominator(self) -> int:
        return self.total + self.vocab_size + 1

    def prob(self, token: str) -> float:
        return (self.counts.get(token, 0) + 1) / self.denominator

    def logprob(self, token: str) -> float:
        return math.log(self.counts.get(token, 0) + 1) - math.log(self.denominator)


def train_unigram(corpus: Iterable[Sequence[str]]) -> UnigramTable:
    counts = Counter()
    for sentence in corpus:
        counts.update(sentence)
    if not counts:
        raise EmptyCorpusError("cannot train a unigram table on an empty corpus")
    return UnigramTable.from_counts(counts)


@dataclass(frozen=True)
class NgramModel:
    """Counts for orders 1..n keyed by token tuples.

    ``counts[k]`` maps k-tuples to occurrence counts; contexts may start with
    :data:`BOS`. ``continuations[k - 1]`` maps a k-token context to the number of
    times any token followed it, which is the backoff denominator.
    """

    order: int
    counts: tuple
    continuations: tuple
    unigram: UnigramTable
    backoff: float = 0.4

    def logscore(self, token: str, context: Sequence[str]) -> float:
        """log of the stupid-backoff score of ``token`` after ``context``.

        Only the last ``order - 1`` context tokens are used.
        """
        context = tuple(context[max(0, len(context) - self.order + 1):]) if self.order > 1 else ()
        penalty = 0.0
        log_backoff = math.log(self.backoff)
        while context:
            k = len(context)
            c = self.counts[k + 1].get(context + (token,))
            if c:
                return penalty + math.log(c / self.continuations[k - 1][context])
            penalty += log_backoff
            context = context[1:]
        return penalty + self.unigram.logprob(token)

    def token_logscores(self, tokens: Sequence[str]) -> list:
        """Per-token log scores of ``tokens`` read as a fresh sentence."""
        history = [BOS] + list(tokens)
        out = []
        for t, tok in enumerate(tokens):
            lo = max(0, t + 1 - (self.order - 1))
            out.append(self.logscore(tok, history[lo:t + 1]))
        return out

    def fingerprint(self) -> str:
        return hashlib.sha256(dumps(self).encode("utf-8")).hexdigest()[:16]


def train_ngram(corpus: Iterable[Sequence[str]], order: int = 3, backoff: float = 0.4) -> NgramModel:
    if order < 1:
        raise ValueError("order must be >= 1")
    if not 0.0 < backoff <= 1.0:
        raise ValueError("backoff must lie in (0, 1]")
    counts = [Counter() for _ in range(order + 1)]
    for sentence in corpus:
        if not sentence:
            continue
        padded = (BOS,) + tuple(sentence)
        for t in range(1, len(padded)):
            for k in range(1, order + 1):
                lo = t + 1 - k
                if lo < 0:
                    break
                counts[k][padded[lo:t + 1]] += 1
    if not counts[1]:
        raise EmptyCorpusError("cannot train an n-gram model on an empty corpus")
    return _build(order, counts, backoff)


def _build(order, counts, backoff) -> NgramModel:
    continuations = []
    for k in range(1, order):
        cont = Counter()
        for gram, c in counts[k + 1].items():
            cont[gram[:-1]] += c
        continuations.append(dict(cont))
    unigram = UnigramTable.from_counts({g[0]: c for g, c in counts[1].items()})
    frozen = tuple(dict(c) for c in counts)
    return NgramModel(order, frozen, tuple(continuations), unigram, backoff)


def prefix_avg_logprob(model: NgramModel, prefix: Sequence[str]) -> float:
    """Mean per-token log score of ``prefix``, scored from sentence start.

    The mean (not the total) is what the LM chunker compares, since a total
    can only fall as tokens are appended.
    """
    if not prefix:
        raise ValueError("prefix must be non-empty")
    return math.fsum(model.token_logscores(prefix)) / len(prefix)


# ---------------------------------------------------------------- serialisation

def dumps(model: NgramModel) -> str:
    lines = [f"{_MAGIC} v{FORMAT_VERSION}",
             f"order\t{model.order}",
             f"backoff\t{model.backoff!r}"]
    for k in range(1, model.order + 1):
        grams = model.counts[k]
        lines.append(f"\\{k}-grams\t{len(grams)}")
        for gram in sorted(grams):
            lines.append(f"{grams[gram]}\t{' '.join(gram)}")
    lines.append("\\end")
    return "\n".join(lines) + "\n"


def loads(text: str) -> NgramModel:
    rows = text.split("\n")
    if not rows or not rows[0].startswith(_MAGIC):
        raise ValueError("not a simtsel n-gram model file")
    version = rows[0].split()[-1]
    if version != f"v{FORMAT_VERSION}":
        raise ValueError(f"unsupported model format {version}")
    order = int(rows[1].split("\t")[1])
    backoff = float(rows[2].split("\t")[1])
    counts = [Counter() for _ in range(order + 1)]
    pos = 3
    for k in range(1, order + 1):
        head, n = rows[pos].split("\t")
        if head != f"\\{k}-grams":
            raise ValueError(f"expected section {k}-grams, found {head!r}")
        n = int(n)
        for row in rows[pos + 1:pos + 1 + n]:
            c, gram = row.split("\t")
            counts[k][tuple(gram.split(" "))] = int(c)
        pos += n + 1
    if rows[pos] != "\\end":
        raise ValueError("truncated model file")
    return _build(order, counts, backoff)


def save(model: NgramModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def load(path) -> NgramModel:
    with open(path, encoding="utf-8", newline="\n") as fh:
        return loads(fh.read())
