"""Compare the compiled and numpy split-scan backends.

    python3 benchmarks/bench_split.py [--sizes 50 200 1000] [--features 3] [--repeats 5]

For each sample count the script times one root split search and one
50-tree random forest fit per backend, checks that both backends return the
same split, and prints the best-of-``repeats`` wall time with the speed-up
over the numpy backend.
"""
import argparse
import timeit

import numpy as np

from thermoforge import splitting
from thermoforge.ensembles import ForestConfig, fit_random_forest


def problem(n, p, seed=0):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.normal(size=(n, p)))
    y = np.sin(X[:, 0]) + X[:, 1 % p] ** 2 + rng.normal(scale=0.1, size=n)
    return X, y


def time_backend(backend, X, y, repeats):
    stats = np.ascontiguousarray(y[:, None])
    denom = np.ones(len(y))
    rows = np.arange(len(y))
    features = np.arange(X.shape[1])
    cfg = ForestConfig(n_trees=50, max_depth=6)
    with splitting.use_backend(backend):
        split = splitting.best_split(X, rows, stats, denom, features)
        t_split = min(timeit.repeat(lambda: splitting.best_split(X, rows, stats, denom, features),
                                    number=20, repeat=repeats)) / 20
        t_forest = min(timeit.repeat(lambda: fit_random_forest(X, y, cfg), number=1, repeat=repeats))
    return split, t_split, t_forest


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 200, 1000])
    ap.add_argument("--features", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    backends = splitting.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the numpy backend only")
    print(f"{'n':>6} {'backend':>9} {'split (ms)':>11} {'x':>6} {'forest (s)':>11} {'x':>6}")
    for n in args.sizes:
        X, y = problem(n, args.features)
        results = {b: time_backend(b, X, y, args.repeats) for b in backends}
        splits = {r[0] for r in results.values()}
        if len(splits) != 1:
            raise SystemExit(f"backends disagree at n={n}: {results}")
        _, base_s, base_f = results["python"]
        for b in backends:
            _, ts, tf = results[b]
            print(f"{n:>6} {b:>9} {ts * 1e3:>11.3f} {base_s / ts:>6.1f} {tf:>11.3f} {base_f / tf:>6.1f}")


if __name__ == "__main__":
    main()
