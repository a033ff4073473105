#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the primitive kernels on training-shaped inputs and one epoch of the
multiplicative-variant training loop, which is the hot path the compiled
backend exists for.  Run after `pip install -e . --no-build-isolation`:

    python benchmarks/bench_kernels.py
"""

import argparse
import time

import numpy as np

from thermofuse.kernels import available_backends, get_backend


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_primitives(backend, inner=200):
    rng = np.random.default_rng(0)
    d_f, d_a, d_in, L = 64, 64, 32, 7
    Wp = rng.standard_normal((d_f, d_in))
    bp = rng.standard_normal(d_f)
    X = rng.standard_normal((d_in, L))
    Wv = rng.standard_normal((d_a, d_f))
    bv = rng.standard_normal(d_a)
    Wa = rng.standard_normal((d_a, d_f))
    ba = rng.standard_normal(d_a)
    dout = rng.standard_normal(2 * d_a)
    p = rng.standard_normal(d_f * d_in)
    g = rng.standard_normal(d_f * d_in)
    m, v = np.zeros_like(p), np.zeros_like(p)

    results = {}

    def proj():
        for _ in range(inner):
            backend.project_cols(Wp, bp, X)

    results["project_cols"] = time_fn(proj, 5) / inner

    def attention_pair():
        E = backend.project_cols(Wp, bp, X)
        for _ in range(inner):
            out, V, alpha, amax = backend.la_fwd(Wv, bv, Wa, ba, E)
            backend.la_bwd(Wv, Wa, E, V, alpha, amax, dout)

    results["attention fwd+bwd"] = time_fn(attention_pair, 5) / inner

    def adam():
        for step in range(1, inner + 1):
            backend.adam_update(p, g, m, v, step, 1e-3, 0.9, 0.999, 1e-8, 0.0)

    results["adam_update"] = time_fn(adam, 5) / inner
    return results


def bench_training_epoch(backend_name, n=512, d=16):
    """One epoch of the multiplicative variant on synthetic interaction data."""
    # the backend is chosen at import time; re-select explicitly for the loop
    from thermofuse import kernels
    from thermofuse.embeddings import EmbeddingSet
    from thermofuse.training import MutationRecord, Sample, TrainConfig, fit_model

    saved = (kernels.dense_fwd, kernels.dense_bwd, kernels.project_cols,
             kernels.project_cols_bwd, kernels.la_fwd, kernels.la_bwd,
             kernels.adam_update)
    impl = get_backend(backend_name)
    kernels.dense_fwd = impl.dense_fwd
    kernels.dense_bwd = impl.dense_bwd
    kernels.project_cols = impl.project_cols
    kernels.project_cols_bwd = impl.project_cols_bwd
    kernels.la_fwd = impl.la_fwd
    kernels.la_bwd = impl.la_bwd
    kernels.adam_update = impl.adam_update
    try:
        rng = np.random.default_rng(1)
        w = rng.standard_normal(d)
        samples = []
        for i in range(n):
            a = rng.standard_normal(d)
            b = rng.standard_normal(d)
            split = "train" if i < int(0.9 * n) else "val"
            samples.append(Sample(
                MutationRecord(f"s{i}", "A", 1, "A", "V",
                               float(w @ (a * b)), split),
                EmbeddingSet(f"s{i}", a[None, :]),
                EmbeddingSet(f"s{i}", b[None, :]), None))
        cfg = TrainConfig(variant=3, epochs=1, batch_size=32, lr=1e-2,
                          d_f=16, d_a=16, window=1, seed=0, hidden=(32,))
        tr = [s for s in samples if s.record.split == "train"]
        va = [s for s in samples if s.record.split == "val"]
        t0 = time.perf_counter()
        fit_model(cfg, tr, va)
        return time.perf_counter() - t0
    finally:
        (kernels.dense_fwd, kernels.dense_bwd, kernels.project_cols,
         kernels.project_cols_bwd, kernels.la_fwd, kernels.la_bwd,
         kernels.adam_update) = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--inner", type=int, default=200,
                        help="iterations per primitive timing")
    args = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}\n")
    primitive_rows = {name: bench_primitives(get_backend(name), args.inner)
                      for name in backends}
    ops = list(next(iter(primitive_rows.values())))
    print(f"{'kernel':<20}" + "".join(f"{b:>14}" for b in backends)
          + ("      speedup" if len(backends) == 2 else ""))
    for op in ops:
        row = f"{op:<20}"
        for b in backends:
            row += f"{primitive_rows[b][op] * 1e6:>12.2f}us"
        if len(backends) == 2:
            ratio = primitive_rows["python"][op] / primitive_rows["c"][op]
            row += f"{ratio:>11.2f}x"
        print(row)

    print()
    epoch_times = {b: bench_training_epoch(b) for b in backends}
    row = f"{'training epoch':<20}"
    for b in backends:
        row += f"{epoch_times[b] * 1e3:>12.1f}ms"
    if len(backends) == 2:
        row += f"{epoch_times['python'] / epoch_times['c']:>11.2f}x"
    print(row)


if __name__ == "__main__":
    main()
