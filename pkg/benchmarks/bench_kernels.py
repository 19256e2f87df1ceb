"""Compare the numba and numpy transfer-matrix kernels.

    python benchmarks/bench_kernels.py [--points N] [--pieces P] [--repeat R]

Both paths are timed on the same batch and checked against each other.
Set QGRAPH_PURE_NUMPY=1 to confirm the fallback is selected by the library.
"""
import argparse
import time

import numpy as np

from qgraph import _kernels


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--pieces", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    lams = rng.uniform(-50, 400, args.points) + 1j * rng.uniform(-5, 5, args.points)
    widths = rng.uniform(0.05, 0.3, args.pieces)
    values = rng.uniform(-5, 5, args.pieces)

    print(f"library backend: {_kernels.backend()}")
    print(f"batch: {args.points} points x {args.pieces} pieces, best of {args.repeat}")
    t_np = best_of(lambda: _kernels.transfer_batch_numpy(lams, widths, values), args.repeat)
    print(f"numpy  {t_np * 1e3:9.2f} ms")
    if not _kernels.HAVE_NUMBA:
        print("numba  unavailable")
        return
    _kernels.transfer_batch_numba(lams[:4], widths, values)  # compile
    t_nb = best_of(lambda: _kernels.transfer_batch_numba(lams, widths, values), args.repeat)
    print(f"numba  {t_nb * 1e3:9.2f} ms   speedup x{t_np / t_nb:.1f}")
    diff = np.max(np.abs(_kernels.transfer_batch_numpy(lams, widths, values)
                         - _kernels.transfer_batch_numba(lams, widths, values)))
    print(f"max |numpy - numba| = {diff:.3e}")


if __name__ == "__main__":
    main()
