"""Numba vs numpy timings for the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called once first (JIT compile, not timed), then timed as the
best of ``--repeat`` runs. Outputs agree between the two bodies; the script
checks that before reporting.
"""

import argparse
from timeit import default_timer as timer

import numpy as np

from mifkit import kernels as K
from mifkit._jit import HAS_NUMBA


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = timer()
        fn()
        times.append(timer() - t0)
    return min(times)


def cases(rng):
    p = 1_000_000_007
    A = rng.integers(0, p, size=(200_000, 2, 2), dtype=np.int64)
    B = rng.integers(0, p, size=(200_000, 2, 2), dtype=np.int64)
    yield "batch_matmul_mod 2e5x2x2", (K._batch_matmul_mod_nb, (A, B, np.int64(p))), (K._batch_matmul_mod_np, (A, B, p))
    mats = rng.integers(0, p, size=(2000, 2, 2), dtype=np.int64)
    yield "chain_product_mod 2000", (K._chain_product_mod_nb, (mats, np.int64(p))), (K._chain_product_mod_np, (mats, p))
    n = 29_760  # |SL_2(F_31)|
    perms = np.stack([rng.permutation(n) for _ in range(4)]).astype(np.int64)
    x = rng.random(n)
    yield "markov_apply n=29760", (K._markov_apply_nb, (perms, x)), (K._markov_apply_np, (perms, x))
    yield "push_forward n=29760", (K._push_forward_nb, (perms, x)), (K._push_forward_np, (perms, x))
    coeffs = rng.integers(0, 101, size=6, dtype=np.int64)
    exps = rng.integers(0, 6, size=(6, 2), dtype=np.int64)
    yield "count_zeros p=101 t=2", (K._count_zeros_nb, (coeffs, exps, np.int64(101), 2)), (K._count_zeros_np, (coeffs, exps, 101, 2))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba unavailable (or MIFKIT_NO_NUMBA set): only the numpy column is meaningful")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<28}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for name, (nb_fn, nb_args), (np_fn, np_args) in cases(rng):
        a, b = nb_fn(*nb_args), np_fn(*np_args)
        if not np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float)):
            raise SystemExit(f"{name}: numba and numpy bodies disagree")
        t_nb = best_of(lambda: nb_fn(*nb_args), args.repeat) if HAS_NUMBA else float("nan")
        t_np = best_of(lambda: np_fn(*np_args), args.repeat)
        print(f"{name:<28}{t_nb:>12.4g}{t_np:>12.4g}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
