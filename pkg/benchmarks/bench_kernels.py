"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--sentences 200000] [--repeat 3]

Both backends are imported in one process and selected per call, so the
comparison is on identical data. Setting SIMTSEL_DISABLE_NUMBA=1 makes the
package default to numpy; this script ignores the default.
"""

import argparse
import time

import numpy as np

from simtsel import kernels
from simtsel._accel import HAVE_NUMBA


def synthetic_buffer(n, seed=0, mean_len=20):
    rng = np.random.default_rng(seed)
    lengths = np.clip(rng.poisson(mean_len, n), 1, 80)
    cells = [[f"{i}-{j}" for j in range(80)] for i in range(80)]
    jitter = rng.choice([-2, -1, 0, 0, 0, 0, 1, 3], size=int(lengths.sum()))
    lines, pos = [], 0
    for m in lengths.tolist():
        items = []
        for i in range(m):
            items.append(cells[i][min(max(i + int(jitter[pos]), 0), m - 1)])
            pos += 1
        lines.append(" ".join(items))
    return ("\n".join(lines) + "\n").encode()


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sentences", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    buf = synthetic_buffer(args.sentences)
    src, tgt, offsets, bad = kernels.parse_pharaoh(buf, use_numba=False)
    assert bad == -1
    backends = [("numpy", False)] + ([("numba", True)] if HAVE_NUMBA else [])
    for _, flag in backends:  # warm-up, includes JIT compilation
        kernels.parse_pharaoh(buf[:10000], use_numba=flag)
        kernels.chunk_labels(src[:offsets[50]], tgt[:offsets[50]], offsets[:51], use_numba=flag)

    print(f"{args.sentences} sentences, {src.size} links, {len(buf) / 2**20:.1f} MiB")
    print(f"{'kernel':<14}{'backend':<8}{'seconds':>10}{'sent/s':>14}")
    results = {}
    for name, flag in backends:
        results["parse", name] = best_of(lambda: kernels.parse_pharaoh(buf, use_numba=flag), args.repeat)
        results["chunk", name] = best_of(lambda: kernels.chunk_labels(src, tgt, offsets, use_numba=flag),
                                         args.repeat)
    for (kernel, name), t in results.items():
        print(f"{kernel:<14}{name:<8}{t:>10.3f}{args.sentences / t:>14,.0f}")
    if HAVE_NUMBA:
        a = kernels.chunk_labels(src, tgt, offsets, use_numba=False)
        b = kernels.chunk_labels(src, tgt, offsets, use_numba=True)
        assert all(np.array_equal(x, y) for x, y in zip(a, b)), "backends disagree"
        for kernel in ("parse", "chunk"):
            print(f"{kernel} speed-up (numba / numpy): {results[kernel, 'numpy'] / results[kernel, 'numba']:.1f}x")


if __name__ == "__main__":
    main()
