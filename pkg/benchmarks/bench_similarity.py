"""Similarity-row throughput: numba kernel vs. numpy fallback.

    python benchmarks/bench_similarity.py --users 610 --items 2000 --density 0.05

Times one full user x user pass (every user as the target) per repeat and
checks that both backends agree to 1e-12.
"""

import argparse
import timeit

import numpy as np

from tonerec import _kernels
from tonerec.corpus import RatingEvent
from tonerec.matrices import build_user_item


def random_matrix(n_users, n_items, density, seed):
    rng = np.random.default_rng(seed)
    events = []
    for u in range(1, n_users + 1):
        n = max(2, rng.binomial(n_items, density))
        for m in rng.choice(n_items, size=n, replace=False):
            events.append(RatingEvent(u, int(m) + 1, float(rng.integers(2, 11)) / 2))
    return build_user_item(events)


def full_pass(matrix, backend, co_rated):
    if backend == "numba":
        run = lambda t: _kernels.pcc_row_numba(matrix.indptr, matrix.indices, matrix.data, matrix.means, t, co_rated)
    else:
        dense, mask = matrix.dense()
        run = lambda t: _kernels.pcc_row_numpy(dense, mask, matrix.means, t, co_rated)
    return [run(t)[0] for t in range(len(matrix))]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--users", type=int, default=610)
    p.add_argument("--items", type=int, default=2000)
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scope", choices=["all-rated", "co-rated"], default="all-rated")
    args = p.parse_args()

    m = random_matrix(args.users, args.items, args.density, args.seed)
    co_rated = args.scope == "co-rated"
    print(f"{len(m)} users x {len(m.column_ids)} items, {m.n_cells} ratings, scope={args.scope}")

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    rows = {}
    for b in backends:
        rows[b] = full_pass(m, b, co_rated)  # warm-up: JIT compile / dense cache
        best = min(timeit.repeat(lambda: full_pass(m, b, co_rated), number=1, repeat=args.repeats))
        print(f"  {b:<6} {best * 1e3:9.1f} ms/pass  {best / len(m) * 1e6:8.1f} us/row")
        rows[b + "_time"] = best
    if "numba" in rows:
        diff = max(float(np.nanmax(np.abs(a - b), initial=0.0)) for a, b in zip(rows["numba"], rows["numpy"]))
        print(f"  speedup {rows['numpy_time'] / rows['numba_time']:.1f}x, max |numba - numpy| {diff:.1e}")
        assert diff <= 1e-12


if __name__ == "__main__":
    main()
