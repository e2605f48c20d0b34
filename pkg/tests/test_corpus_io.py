import pytest
from hypothesis import given

from simtsel.corpus_io import (AlignmentBoundsError, AlignmentParseError, LineCountMismatch,
                               LineTooLong, format_alignment, format_sentence, is_scorable,
                               iter_lines, parse_alignment_line, parse_sentence, zip_parallel)

from conftest import alignments, write


def test_parse_sentence():
    assert parse_sentence("the cat sat") == ("the", "cat", "sat")
    assert parse_sentence("a  b") == ("a", "b")
    assert parse_sentence("") == ()
    assert not is_scorable(parse_sentence(""))


def test_sentence_round_trip():
    toks = parse_sentence("  x\ty  z ")
    assert parse_sentence(format_sentence(toks)) == toks


@pytest.mark.parametrize("line, expected", [
    ("0-0 1-2", {(0, 0), (1, 2)}),
    ("", set()),
    ("2-0 0-1 2-0", {(2, 0), (0, 1)}),
])
def test_parse_alignment_line(line, expected):
    assert parse_alignment_line(line) == frozenset(expected)


@pytest.mark.parametrize("bad", ["0-", "-1", "01", "a-1", "1-2-3", "1-x"])
def test_parse_alignment_line_rejects(bad):
    with pytest.raises(AlignmentParseError) as err:
        parse_alignment_line(f"0-0 {bad}", lineno=7)
    assert err.value.line == 7
    assert repr(bad) in str(err.value)


@given(alignments())
def test_alignment_round_trip(links):
    assert parse_alignment_line(format_alignment(links)) == links


def test_format_alignment_sorted():
    assert format_alignment({(2, 0), (0, 1), (0, 0)}) == "0-0 0-1 2-0"


def test_zip_parallel(tmp_path):
    src = write(tmp_path / "s", ["a b", "c", ""])
    tgt = write(tmp_path / "t", ["A B", "C", "D"])
    al = write(tmp_path / "a", ["0-0 1-1", "0-0", ""])
    recs = list(zip_parallel(src, tgt, al))
    assert [r.index for r in recs] == [0, 1, 2]
    assert recs[0].alignment == {(0, 0), (1, 1)}
    assert recs[2].source == ()


def test_zip_parallel_mismatch(tmp_path):
    src = write(tmp_path / "s", ["a", "b", "c"])
    tgt = write(tmp_path / "t", ["A", "B"])
    with pytest.raises(LineCountMismatch) as err:
        list(zip_parallel(src, tgt))
    assert err.value.line == 2


def test_zip_parallel_bounds(tmp_path):
    src = write(tmp_path / "s", ["a b", "c"])
    tgt = write(tmp_path / "t", ["A", "C"])
    al = write(tmp_path / "a", ["0-0", "0-1"])
    with pytest.raises(AlignmentBoundsError) as err:
        list(zip_parallel(src, tgt, al))
    assert err.value.line == 1


def test_alignment_needs_target(tmp_path):
    src = write(tmp_path / "s", ["a"])
    with pytest.raises(ValueError):
        list(zip_parallel(src, None, src))


def test_line_cap(tmp_path):
    p = write(tmp_path / "s", ["short", "x" * 100])
    assert next(iter_lines(p, max_line_bytes=10)) == "short"
    with pytest.raises(LineTooLong):
        list(iter_lines(p, max_line_bytes=10))


def test_crlf_is_stripped(tmp_path):
    p = tmp_path / "s"
    p.write_bytes(b"a b\r\nc\r\n")
    assert list(iter_lines(p)) == ["a b", "c"]
