"""Compare the numba and numpy prediction backends on synthetic data.

    python benchmarks/bench_kernels.py --scale 0.1 --records 5000
"""

import argparse
import time

import numpy as np

from bcrec import kernels
from bcrec.data import split_folds, train_test_views
from bcrec.predict import TrustIndex
from bcrec.similarity import build_histograms, build_user_profiles
from bcrec.synthetic import synthetic_dataset

# full-size targets: users, items, ratings, trust lines
EPINIONS_SHAPE = (49290, 139738, 664824, 487181)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--scale", type=float, default=0.1, help="fraction of the Epinions-sized shape")
    ap.add_argument("--records", type=int, default=5000, help="test records per timing")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    shape = [max(10, int(x * args.scale)) for x in EPINIONS_SHAPE]
    table, trust = synthetic_dataset(*shape, seed=args.seed)
    split = split_folds(table, 5, args.seed)
    train, test = train_test_views(table, split, 0)
    test = test.sample(args.records, args.seed)

    t0 = time.perf_counter()
    hist = build_histograms(train)
    profiles = build_user_profiles(train, hist)
    index = TrustIndex.from_graph(trust, train)
    arrays = kernels.kernel_arrays(train, profiles, index)
    print(f"{table!r}, trust edges {trust.n_edges}; build {time.perf_counter() - t0:.2f}s")

    backends = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    for method in "AB":
        for social in (False, True):
            res = {}
            for be in backends:
                kernels.predict_batch(test.users[:2], test.items[:2], arrays, method, social, backend=be)
                t0 = time.perf_counter()
                raw, code = kernels.predict_batch(test.users, test.items, arrays, method, social,
                                                  backend=be, jobs=args.jobs)
                dt = time.perf_counter() - t0
                res[be] = raw
                print(f"method {method} social={social!s:5} {be:6} {dt:8.3f}s "
                      f"{len(test) / dt:10.0f} rec/s  covered {np.mean(code == 0):.3f}")
            if len(res) == 2:
                diff = np.nanmax(np.abs(res["numpy"] - res["numba"]))
                print(f"    max |numpy - numba| = {diff:.2e}")


if __name__ == "__main__":
    main()
