"""Batch kernels over flat link arrays.

A batch of alignment lines is stored CSR-style: ``src`` and ``tgt`` hold the
link indices of every sentence back to back, and sentence ``s`` owns the slice
``offsets[s]:offsets[s + 1]``. After :func:`parse_pharaoh` each slice is
sorted by ``(i, j)`` and free of duplicates.

Each hot kernel exists twice: an ``@njit`` loop and a vectorised numpy
version. The public wrappers pick one according to :mod:`simtsel._accel`;
both are always importable so tests and the benchmark can compare them.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

_DIGIT0 = 48
_DASH = 45
_MAX_DIGITS = 18


# ---------------------------------------------------------------- parsing

@njit(cache=True, nogil=True)
def _parse_pharaoh_nb(buf):
    cap = 0
    n_lines = 0
    for p in range(buf.shape[0]):
        if buf[p] == _DASH:
            cap += 1
        elif buf[p] == 10:
            n_lines += 1
    src = np.empty(cap, np.int64)
    tgt = np.empty(cap, np.int64)
    line_of = np.empty(cap, np.int64)
    n = 0
    line = 0
    state = 0  # 0 between items, 1 in source digits, 2 after dash, 3 in target digits
    val = 0
    ndig = 0
    ival = 0
    for p in range(buf.shape[0]):
        ch = buf[p]
        if 48 <= ch <= 57:
            if state == 0 or state == 2:
                state = state + 1
                val = ch - _DIGIT0
                ndig = 1
            else:
                val = val * 10 + (ch - _DIGIT0)
                ndig += 1
                if ndig > _MAX_DIGITS:
                    return src[:0], tgt[:0], line_of[:0], n_lines, line
        elif ch == _DASH:
            if state != 1:
                return src[:0], tgt[:0], line_of[:0], n_lines, line
            ival = val
            state = 2
        elif ch == 32 or ch == 9 or ch == 13 or ch == 10:
            if state == 3:
                src[n] = ival
                tgt[n] = val
                line_of[n] = line
                n += 1
                state = 0
            elif state != 0:
                return src[:0], tgt[:0], line_of[:0], n_lines, line
            if ch == 10:
                line += 1
        else:
            return src[:0], tgt[:0], line_of[:0], n_lines, line
    return src[:n], tgt[:n], line_of[:n], n_lines, -1


def _parse_pharaoh_np(buf):
    n_lines = int(np.count_nonzero(buf == 10))
    empty = np.zeros(0, np.int64)
    newlines = np.flatnonzero(buf == 10)
    is_digit = (buf >= 48) & (buf <= 57)
    is_dash = buf == _DASH
    is_sep = (buf == 32) | (buf == 9) | (buf == 13) | (buf == 10)

    def fail(pos):
        return empty, empty, empty, n_lines, int(np.searchsorted(newlines, pos, side="left"))

    bad = ~(is_digit | is_dash | is_sep)
    prev_digit = np.zeros_like(is_digit)
    prev_digit[1:] = is_digit[:-1]
    next_digit = np.zeros_like(is_digit)
    next_digit[:-1] = is_digit[1:]
    bad |= is_dash & ~(prev_digit & next_digit)
    # each whitespace-delimited item must hold exactly one dash
    nonsep = ~is_sep
    item_start = nonsep.copy()
    item_start[1:] &= is_sep[:-1]
    item_id = np.cumsum(item_start) - 1
    n_items = int(item_start.sum())
    dashes = np.bincount(item_id[is_dash], minlength=n_items)
    bad_items = np.flatnonzero(dashes != 1)
    if bad_items.size:
        bad[np.flatnonzero(item_start)[bad_items[0]]] = True

    run_start = is_digit.copy()
    run_start[1:] &= ~is_digit[:-1]
    run_end = is_digit.copy()
    run_end[:-1] &= ~is_digit[1:]
    starts = np.flatnonzero(run_start)
    ends = np.flatnonzero(run_end)
    too_long = np.flatnonzero(ends - starts + 1 > _MAX_DIGITS)
    if too_long.size:
        bad[starts[too_long[0]]] = True
    bad_pos = np.flatnonzero(bad)
    if bad_pos.size:
        return fail(bad_pos[0])
    if starts.size == 0:
        return empty, empty, empty, n_lines, -1

    digit_pos = np.flatnonzero(is_digit)
    run_of_digit = np.cumsum(run_start)[digit_pos] - 1
    power = ends[run_of_digit] - digit_pos
    digits = buf[digit_pos].astype(np.int64) - _DIGIT0
    weighted = digits * (10 ** power.astype(np.int64))
    first_digit_of_run = np.searchsorted(digit_pos, starts)
    values = np.add.reduceat(weighted, first_digit_of_run)
    src = values[0::2]
    tgt = values[1::2]
    line_of = np.searchsorted(newlines, starts[0::2], side="left").astype(np.int64)
    return src, tgt, line_of, n_lines, -1


def sort_dedupe(src, tgt, line_of, n_lines):
    """Sort links by (line, i, j), drop duplicates, build offsets."""
    if src.size:
        order = np.lexsort((tgt, src, line_of))
        src, tgt, line_of = src[order], tgt[order], line_of[order]
        keep = np.ones(src.size, dtype=bool)
        keep[1:] = (src[1:] != src[:-1]) | (tgt[1:] != tgt[:-1]) | (line_of[1:] != line_of[:-1])
        src, tgt, line_of = src[keep], tgt[keep], line_of[keep]
    offsets = np.zeros(n_lines + 1, np.int64)
    np.cumsum(np.bincount(line_of, minlength=n_lines), out=offsets[1:])
    return src, tgt, offsets


def parse_pharaoh(buf, use_numba=None):
    """Parse a buffer of Pharaoh lines; a final line without ``\\n`` still counts.

    Returns ``(src, tgt, offsets, bad_line)``. ``bad_line`` is -1 on success,
    otherwise the 0-based line inside the buffer where the fast parser gave up;
    the arrays are then empty and the caller should fall back to the strict
    per-line parser for a precise diagnosis.
    """
    buf = np.frombuffer(buf, dtype=np.uint8) if not isinstance(buf, np.ndarray) else buf
    if buf.size and buf[-1] != 10:
        buf = np.append(buf, np.uint8(10))
    if use_numba is None:
        use_numba = HAVE_NUMBA
    fn = _parse_pharaoh_nb if use_numba else _parse_pharaoh_np
    src, tgt, line_of, n_lines, bad = fn(buf)
    if bad >= 0:
        return src, tgt, np.zeros(n_lines + 1, np.int64), int(bad)
    src, tgt, offsets = sort_dedupe(src, tgt, line_of, int(n_lines))
    return src, tgt, offsets, -1


def pack_alignments(alignments):
    """CSR arrays from an iterable of link sets (Python-side helper)."""
    src, tgt, counts = [], [], []
    for links in alignments:
        ordered = sorted(links)
        counts.append(len(ordered))
        for i, j in ordered:
            src.append(i)
            tgt.append(j)
    offsets = np.zeros(len(counts) + 1, np.int64)
    np.cumsum(counts, out=offsets[1:])
    return np.asarray(src, np.int64), np.asarray(tgt, np.int64), offsets


# ---------------------------------------------------------------- chunk counting

@njit(cache=True, nogil=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, nogil=True)
def _sweep(parent, lo, hi, roots, n_roots):
    # merge blocks whose [lo, hi] intervals overlap; returns True if anything merged
    keys = np.empty(n_roots, np.int64)
    for r in range(n_roots):
        keys[r] = lo[roots[r]]
    order = np.argsort(keys, kind="mergesort")
    merged = False
    cur = roots[order[0]]
    cur_hi = hi[cur]
    for q in range(1, n_roots):
        r = roots[order[q]]
        if lo[r] <= cur_hi:
            parent[r] = cur
            if hi[r] > cur_hi:
                cur_hi = hi[r]
            merged = True
        else:
            cur = r
            cur_hi = hi[r]
    return merged


@njit(cache=True, nogil=True)
def _collect(parent, src, tgt, a, m, imin, imax, jmin, jmax, roots):
    for t in range(m):
        imin[t] = 1 << 62
        imax[t] = -1
        jmin[t] = 1 << 62
        jmax[t] = -1
    for t in range(m):
        r = _find(parent, t)
        i = src[a + t]
        j = tgt[a + t]
        if i < imin[r]:
            imin[r] = i
        if i > imax[r]:
            imax[r] = i
        if j < jmin[r]:
            jmin[r] = j
        if j > jmax[r]:
            jmax[r] = j
    n_roots = 0
    for t in range(m):
        if parent[t] == t:
            roots[n_roots] = t
            n_roots += 1
    return n_roots


@njit(cache=True, nogil=True)
def _chunk_labels_nb(src, tgt, offsets):
    total = src.shape[0]
    labels = np.empty(total, np.int64)
    counts = np.zeros(offsets.shape[0] - 1, np.int64)
    for s in range(offsets.shape[0] - 1):
        a = offsets[s]
        m = offsets[s + 1] - a
        if m == 0:
            continue
        parent = np.arange(m)
        imin = np.empty(m, np.int64)
        imax = np.empty(m, np.int64)
        jmin = np.empty(m, np.int64)
        jmax = np.empty(m, np.int64)
        roots = np.empty(m, np.int64)
        while True:
            n_roots = _collect(parent, src, tgt, a, m, imin, imax, jmin, jmax, roots)
            merged_i = _sweep(parent, imin, imax, roots, n_roots)
            if merged_i:
                n_roots = _collect(parent, src, tgt, a, m, imin, imax, jmin, jmax, roots)
            merged_j = _sweep(parent, jmin, jmax, roots, n_roots)
            if not merged_i and not merged_j:
                break
        # relabel roots densely by first appearance
        dense = np.full(m, -1, np.int64)
        nxt = 0
        for t in range(m):
            r = _find(parent, t)
            if dense[r] < 0:
                dense[r] = nxt
                nxt += 1
            labels[a + t] = dense[r]
        counts[s] = nxt
    return labels, counts


def _merge_axis_np(labels, sent, vals, big):
    blocks, inv = np.unique(labels, return_inverse=True)
    nb = blocks.size
    order = np.argsort(inv, kind="stable")
    seg = np.flatnonzero(np.r_[True, inv[order][1:] != inv[order][:-1]])
    lo = np.minimum.reduceat(vals[order], seg)
    hi = np.maximum.reduceat(vals[order], seg)
    bsent = sent[order][seg]
    start = bsent * big + lo
    end = bsent * big + hi
    border = np.argsort(start, kind="stable")
    run_max = np.maximum.accumulate(end[border])
    new = np.ones(nb, dtype=bool)
    new[1:] = start[border][1:] > run_max[:-1]
    gid = np.empty(nb, np.int64)
    gid[border] = np.cumsum(new) - 1
    n_groups = int(new.sum())
    return gid[inv], n_groups < nb


def _chunk_labels_np(src, tgt, offsets):
    n = offsets.size - 1
    total = src.size
    counts = np.zeros(n, np.int64)
    if total == 0:
        return np.zeros(0, np.int64), counts
    sent = np.repeat(np.arange(n, dtype=np.int64), np.diff(offsets))
    big = int(max(src.max(), tgt.max())) + 2
    labels = np.arange(total, dtype=np.int64)
    while True:
        labels, merged_i = _merge_axis_np(labels, sent, src, big)
        labels, merged_j = _merge_axis_np(labels, sent, tgt, big)
        if not merged_i and not merged_j:
            break
    # labels are global group ids ordered by (sentence, start); make them per-sentence
    uniq, first = np.unique(labels, return_index=True)
    counts = np.bincount(sent[first], minlength=n).astype(np.int64)
    dense_global = np.searchsorted(uniq, labels)
    base = np.zeros(n, np.int64)
    np.cumsum(counts[:-1], out=base[1:])
    # order groups within a sentence by first appearance, like the numba kernel
    key_order = np.lexsort((first, sent[first]))
    rank = np.empty(uniq.size, np.int64)
    rank[key_order] = np.arange(uniq.size)
    local = rank[dense_global] - base[sent]
    return local.astype(np.int64), counts


def _check_csr(src, tgt, offsets):
    src = np.ascontiguousarray(src, np.int64)
    tgt = np.ascontiguousarray(tgt, np.int64)
    offsets = np.ascontiguousarray(offsets, np.int64)
    if (offsets.ndim != 1 or offsets.size == 0 or offsets[0] != 0 or offsets[-1] != src.size
            or tgt.size != src.size or (np.diff(offsets) < 0).any()):
        raise ValueError("inconsistent CSR arrays: need offsets[0] == 0, "
                         "non-decreasing offsets and offsets[-1] == len(src) == len(tgt)")
    if src.size and (src.min() < 0 or tgt.min() < 0):
        raise ValueError("link indices must be non-negative")
    return src, tgt, offsets


def chunk_labels(src, tgt, offsets, use_numba=None):
    """Chunk id of every link (dense per sentence) and chunk count per sentence.

    Links must be deduplicated within each sentence, as produced by
    :func:`parse_pharaoh` and :func:`pack_alignments`.
    """
    if use_numba is None:
        use_numba = HAVE_NUMBA
    src, tgt, offsets = _check_csr(src, tgt, offsets)
    if use_numba:
        return _chunk_labels_nb(src, tgt, offsets)
    return _chunk_labels_np(src, tgt, offsets)


def chunk_counts(src, tgt, offsets, use_numba=None):
    return chunk_labels(src, tgt, offsets, use_numba)[1]


# ---------------------------------------------------------------- anticipation

def anticipation_counts(src, tgt, offsets, k):
    """Per-sentence number of links with ``i >= j + k``."""
    src, tgt, offsets = _check_csr(src, tgt, offsets)
    n = offsets.size - 1
    if src.size == 0:
        return np.zeros(n, np.int64)
    sent = np.repeat(np.arange(n), np.diff(offsets))
    hits = (src >= tgt + k)
    return np.bincount(sent[hits], minlength=n).astype(np.int64)
