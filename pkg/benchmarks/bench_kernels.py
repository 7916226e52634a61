"""Timing harness for the hot kernels: numpy fallback vs numba-jitted path.

Run as a script; sizes are chosen so each call sits in the microsecond to
millisecond range where the dispatch overhead difference matters. The jitted
functions are warmed once before timing so compilation never lands in the
measured window, and both paths are cross-checked for agreement first.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --csr-rows 500000 --repeats 9
"""

import argparse
import timeit

import numpy as np

from berrkit._kernels import IMPLEMENTATIONS


def csr_inputs(rows, per_row, rng):
    cols_idx = rng.integers(0, rows, size=(rows, per_row), dtype=np.int64)
    indices = np.sort(cols_idx, axis=1).ravel()
    data = rng.standard_normal(rows * per_row)
    indptr = np.arange(0, rows * per_row + 1, per_row, dtype=np.int64)
    x = rng.standard_normal(rows)
    return data, indices, indptr, x


def householder_inputs(reflectors, n, rng):
    vecs = rng.standard_normal((reflectors, n))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return vecs, rng.standard_normal(n), True


def band_inputs(k, rng):
    diag = np.abs(rng.standard_normal(k)) + 1.0
    sup1 = 0.3 * rng.standard_normal(k - 1)
    sup2 = 0.3 * rng.standard_normal(k - 2)
    rhs = rng.standard_normal(k)
    return diag, sup1, sup2, rhs


def best_seconds(fn, args, repeats):
    timer = timeit.Timer(lambda: fn(*args))
    loops, _ = timer.autorange()
    return min(timer.repeat(repeats, loops)) / loops


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--csr-rows", type=int, default=200_000)
    parser.add_argument("--csr-per-row", type=int, default=8)
    parser.add_argument("--reflectors", type=int, default=64)
    parser.add_argument("--vector-size", type=int, default=4096)
    parser.add_argument("--band-size", type=int, default=10_000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    cases = {
        "csr_matvec": csr_inputs(args.csr_rows, args.csr_per_row, rng),
        "householder_chain": householder_inputs(args.reflectors, args.vector_size, rng),
        "band_solve_upper": band_inputs(args.band_size, rng),
        "band_solve_upper_t": band_inputs(args.band_size, rng),
    }

    header = f"{'kernel':<20} {'numpy':>12} {'numba':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, inputs in cases.items():
        np_impl, nb_impl = IMPLEMENTATIONS[name]
        t_np = best_seconds(np_impl, inputs, args.repeats)
        if nb_impl is None:
            print(f"{name:<20} {t_np * 1e6:>10.1f}us {'n/a':>12} {'n/a':>9}")
            continue
        got = nb_impl(*inputs)
        np.testing.assert_allclose(got, np_impl(*inputs), rtol=1e-12, atol=1e-14)
        t_nb = best_seconds(nb_impl, inputs, args.repeats)
        print(f"{name:<20} {t_np * 1e6:>10.1f}us {t_nb * 1e6:>10.1f}us {t_np / t_nb:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
