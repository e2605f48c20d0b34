"""Streaming readers and writers for tokenized corpora and Pharaoh alignments.

Sentences are plain tuples of tokens and alignments are frozensets of
``(i, j)`` pairs, both 0-based. Everything here streams line by line so a
corpus never has to fit in memory.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

DEFAULT_MAX_LINE_BYTES = 1 << 20

Sentence = tuple
AlignmentSet = frozenset


class CorpusError(ValueError):
    """Malformed or inconsistent corpus input."""

    category = "input"

    def __init__(self, message: str, line: Optional[int] = None, path=None):
        self.detail = message
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f"{':' if where else 'line '}{line}"
        super().__init__(f"{where}: {message}" if where else message)


class AlignmentParseError(CorpusError):
    category = "parse"


class LineCountMismatch(CorpusError):
    category = "mismatch"


class AlignmentBoundsError(CorpusError):
    category = "bounds"


class LineTooLong(CorpusError):
    category = "input"


def parse_sentence(line: str) -> tuple:
    """Whitespace-split a tokenized line. An empty result is allowed here;
    callers decide what to do with it (see :func:`is_scorable`)."""
    return tuple(line.split())


def is_scorable(sentence) -> bool:
    return len(sentence) > 0


def format_sentence(sentence) -> str:
    return " ".join(sentence)


def parse_alignment_line(line: str, lineno: Optional[int] = None) -> frozenset:
    """Parse ``"0-0 1-2 ..."`` into a frozenset of ``(i, j)`` links.

    ``lineno`` (0-based) is only used in error messages.
    """
    links = set()
    for item in line.split():
        src, dash, tgt = item.partition("-")
        if not dash or not src.isdecimal() or not tgt.isdecimal() or not src.isascii() or not tgt.isascii():
            raise AlignmentParseError(f"malformed alignment item {item!r}", line=lineno)
        links.add((int(src), int(tgt)))
    return frozenset(links)


def format_alignment(alignment: Iterable) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(alignment))


def iter_lines(path, max_line_bytes: int = DEFAULT_MAX_LINE_BYTES) -> Iterator[str]:
    """Yield decoded lines without their terminator.

    Lines longer than ``max_line_bytes`` are rejected, never truncated.
    """
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh):
            if len(raw) > max_line_bytes + 1:
                raise LineTooLong(f"line exceeds {max_line_bytes} bytes", line=lineno, path=path)
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusError(f"invalid UTF-8 ({exc.reason})", line=lineno, path=path) from None
            yield text.rstrip("\r\n")


def read_sentences(path, max_line_bytes: int = DEFAULT_MAX_LINE_BYTES) -> Iterator[tuple]:
    for line in iter_lines(path, max_line_bytes):
        yield parse_sentence(line)


def read_alignments(path, max_line_bytes: int = DEFAULT_MAX_LINE_BYTES) -> Iterator[frozenset]:
    for lineno, line in enumerate(iter_lines(path, max_line_bytes)):
        try:
            yield parse_alignment_line(line, lineno)
        except AlignmentParseError as exc:
            raise AlignmentParseError(exc.detail, line=lineno, path=path) from None


def count_lines(path) -> int:
    n = 0
    with open(path, "rb") as fh:
        for _ in fh:
            n += 1
    return n


@dataclass(frozen=True, slots=True)
class ParallelRecord:
    index: int
    source: tuple
    target: Optional[tuple] = None
    alignment: Optional[frozenset] = None

    def __post_init__(self):
        if self.alignment is not None and self.target is None:
            raise ValueError("alignment requires a target sentence")


def check_bounds(alignment, src_len: int, tgt_len: int, index: Optional[int] = None,
                 path=None) -> None:
    for i, j in alignment:
        if i >= src_len or j >= tgt_len:
            raise AlignmentBoundsError(
                f"link {i}-{j} out of bounds for source length {src_len}, target length {tgt_len}",
                line=index, path=path)


_MISSING = object()


def zip_parallel(source_path, target_path=None, align_path=None,
                 max_line_bytes: int = DEFAULT_MAX_LINE_BYTES) -> Iterator[ParallelRecord]:
    """Iterate source/target/alignment files in lock step.

    Raises :class:`LineCountMismatch` at the first line where one file ends
    before the others, and :class:`AlignmentBoundsError` for links that point
    past either sentence.
    """
    if align_path is not None and target_path is None:
        raise ValueError("an alignment file requires a target file")
    streams = [read_sentences(source_path, max_line_bytes)]
    names = [source_path]
    if target_path is not None:
        streams.append(read_sentences(target_path, max_line_bytes))
        names.append(target_path)
    if align_path is not None:
        streams.append(read_alignments(align_path, max_line_bytes))
        names.append(align_path)

    for index, row in enumerate(itertools.zip_longest(*streams, fillvalue=_MISSING)):
        if any(x is _MISSING for x in row):
            short = [str(n) for n, x in zip(names, row) if x is _MISSING]
            raise LineCountMismatch(f"{', '.join(short)} ended early", line=index)
        source = row[0]
        target = row[1] if target_path is not None else None
        alignment = row[2] if align_path is not None else None
        if alignment is not None:
            check_bounds(alignment, len(source), len(target), index, align_path)
        yield ParallelRecord(index, source, target, alignment)


def write_lines(path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
