import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from simtsel.chunking import (OracleTooLarge, extract_chunks_align, is_closed, oracle_minimal_blocks,
                              segment_lm, segment_logscores)
from simtsel.ngram_lm import train_ngram

from conftest import alignments


def groups_of(p):
    return {frozenset(g) for g in p.groups}


@pytest.mark.parametrize("links, c", [
    ({(0, 0), (1, 1), (2, 2)}, 3),
    ({(0, 0), (0, 1), (1, 1)}, 1),
    ({(0, 2), (1, 1), (2, 0)}, 3),
    (set(), 0),
    ({(0, 0), (2, 0)}, 1),
    ({(0, 0), (1, 1), (2, 0)}, 1),
    ({(0, 1), (1, 0), (2, 2)}, 3),
    ({(0, 1), (1, 0), (1, 1), (2, 2)}, 2),
])
def test_examples(links, c):
    assert extract_chunks_align(links).c == c
    assert oracle_minimal_blocks(links).c == c


def test_oracle_small_cases():
    assert oracle_minimal_blocks({(0, 0)}).c == 1
    assert oracle_minimal_blocks({(0, 0), (1, 1)}).c == 2


def test_oracle_bounds():
    with pytest.raises(OracleTooLarge):
        oracle_minimal_blocks({(i, i) for i in range(13)})
    with pytest.raises(OracleTooLarge):
        oracle_minimal_blocks({(0, 0), (9, 9)})


def test_ranges():
    p = extract_chunks_align({(0, 1), (1, 0), (3, 2)})
    assert p.ranges() == [((0, 0), (1, 1)), ((1, 1), (0, 0)), ((3, 3), (2, 2))]


def _removal_variant(order):
    # links removed as soon as they are grouped, closure taken over what is left
    remaining = list(order)
    c = 0
    while remaining:
        group = [remaining.pop(0)]
        changed = True
        while changed:
            changed = False
            ilo, ihi = min(i for i, _ in group), max(i for i, _ in group)
            jlo, jhi = min(j for _, j in group), max(j for _, j in group)
            for link in remaining:
                if ilo <= link[0] <= ihi or jlo <= link[1] <= jhi:
                    remaining.remove(link)
                    group.append(link)
                    changed = True
                    break
        c += 1
    return c


def test_removal_variant_is_order_dependent():
    links = [(0, 0), (1, 1), (2, 0)]
    counts = {_removal_variant(p) for p in itertools.permutations(links)}
    assert counts == {1, 2}
    assert {extract_chunks_align(p).c for p in itertools.permutations(links)} == {1}


def test_oracle_exhaustive_3x3():
    cells = [(i, j) for i in range(3) for j in range(3)]
    for mask in range(1 << 9):
        links = {cells[b] for b in range(9) if mask >> b & 1}
        assert groups_of(extract_chunks_align(links)) == groups_of(oracle_minimal_blocks(links))


@given(alignments(max_index=6, max_links=8))
def test_oracle_agrees_random(links):
    assert groups_of(extract_chunks_align(links)) == groups_of(oracle_minimal_blocks(links))


@given(alignments())
def test_partition_and_closure(links):
    p = extract_chunks_align(links)
    assert sum(len(g) for g in p.groups) == len(links)
    assert frozenset().union(*p.groups) == links
    for g in p.groups:
        assert is_closed(g, links)


@given(alignments(max_links=10))
def test_minimality(links):
    for g in extract_chunks_align(links).groups:
        g = sorted(g)
        for r in range(1, len(g)):
            for part in itertools.combinations(g, r):
                rest = set(g) - set(part)
                assert not (is_closed(set(part), links) and is_closed(rest, links))


@given(alignments(), st.randoms())
def test_link_order_invariance(links, rnd):
    order = sorted(links)
    rnd.shuffle(order)
    assert extract_chunks_align(order) == extract_chunks_align(links)


# ---------------------------------------------------------------- LM segmentation

def test_uniform_model_one_chunk():
    m = train_ngram([tuple("abcd")], order=1)
    for sent in ("a", "abcd", "dcbaabcd", "a" * 16):
        seg = segment_lm(tuple(sent), m)
        assert seg.c == 1
        assert seg.spans == ((0, len(sent)),)


def test_single_token():
    m = train_ngram([("a", "b")], order=3)
    assert segment_lm(("zzz",), m).c == 1


def test_decreasing_scores_split_everywhere():
    # unigram counts 4 > 3 > 2 > 1 give strictly falling scores
    m = train_ngram([tuple("aaaabbbccd")], order=1)
    seg = segment_lm(tuple("abcd"), m)
    assert seg.c == 4
    assert seg.spans == ((0, 1), (1, 2), (2, 3), (3, 4))
    assert segment_logscores([-1.0, -2.0, -3.0, -4.0]).c == 4


def test_external_scores_rule():
    # mean of span [-1, -1] is -1; -1.5 is lower -> split; -0.5 raises -> joins
    seg = segment_logscores([-1.0, -1.0, -1.5, -0.5, -0.5])
    assert seg.spans == ((0, 2), (2, 5))
    assert segment_logscores([-2.0, -1.0, -1.5]).c == 1
    assert segment_logscores([0.1, 0.1, 0.1, 0.1]).c == 1


def test_restart_is_rescored_from_sentence_start():
    # after a split the new span begins with a BOS context
    m = train_ngram([("a", "b"), ("c", "d"), ("c", "d")], order=2)
    seg = segment_lm(("a", "b", "c", "d"), m)
    # a:0, b|a:0, c|b unseen -> split; c|BOS seen, d|c seen
    assert seg.spans == ((0, 2), (2, 4))


@settings(max_examples=200)
@given(st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=20),
       st.lists(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=8), min_size=1, max_size=6),
       st.integers(1, 4))
def test_segment_bounds(sentence, corpus, order):
    m = train_ngram(corpus, order=order)
    seg = segment_lm(sentence, m)
    assert 1 <= seg.c <= len(sentence)
    assert seg.spans[0][0] == 0 and seg.spans[-1][1] == len(sentence)
    for (a, b), (c, d) in zip(seg.spans, seg.spans[1:]):
        assert a < b == c < d


def test_empty_sentence_rejected():
    m = train_ngram([("a",)])
    with pytest.raises(ValueError):
        segment_lm((), m)
