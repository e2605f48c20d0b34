import random

import pytest
from hypothesis import settings, strategies as st

from simtsel._accel import HAVE_NUMBA

# first calls may include numba compilation
settings.register_profile("default", deadline=None)
settings.load_profile("default")

BACKENDS = [False, True] if HAVE_NUMBA else [False]


@pytest.fixture(params=BACKENDS, ids=lambda b: "numba" if b else "numpy")
def use_numba(request):
    return request.param


def alignments(max_index=10, max_links=15):
    return st.frozensets(
        st.tuples(st.integers(0, max_index - 1), st.integers(0, max_index - 1)),
        max_size=max_links)


def random_alignment(rng: random.Random, max_index=10, max_links=15):
    n = rng.randint(0, max_links)
    return frozenset((rng.randrange(max_index), rng.randrange(max_index)) for _ in range(n))


def write(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


# ---------------------------------------------------------------- acceptance report

_CRITERIA = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or (call.when != "call" and call.excinfo is None):
        return
    num, title = mark.args
    if call.when == "call" or num not in _CRITERIA:
        detail = dict(item.user_properties).get("detail", "")
        _CRITERIA[num] = (title, call.excinfo is None, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[num]
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
