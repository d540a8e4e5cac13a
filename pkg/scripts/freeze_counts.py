"""Count passing tuples by direct evaluation, independently of the enumerator's join.

Small grids run check_naive on every tuple. At (2,2) the 16^6 tuples are too
many for a per-tuple Python loop, so each side's value vector is evaluated
directly on sign tuples (no packed tables) and all 4096 x 4096 side pairs are
compared with numpy broadcasting. The printed numbers are the frozen regression
constants used in tests/test_acceptance.py.

    python3 scripts/freeze_counts.py [--quick]
"""
import argparse
import itertools
import json
import time

import numpy as np

from genpoly.boolean_fn import BooleanFunction
from genpoly.polymorphism import PolymorphismInstance, check_naive


def all_functions(arity):
    return [BooleanFunction(arity, t) for t in range(1 << (1 << arity))]


def naive_count(n, m):
    passing = 0
    for f0 in all_functions(n):
        for fs in itertools.product(all_functions(n), repeat=m):
            for g0 in all_functions(m):
                for gs in itertools.product(all_functions(m), repeat=n):
                    passing += check_naive(PolymorphismInstance(n, m, f0, fs, g0, gs))
    return passing


def grid_points(n, m):
    for z in range(1 << (n * m)):
        yield [[-1 if (z >> (i * m + j)) & 1 else 1 for j in range(m)] for i in range(n)]


def side_values(n, m):
    grids = list(grid_points(n, m))
    left, right = [], []
    for f0 in all_functions(n):
        for gs in itertools.product(all_functions(m), repeat=n):
            left.append([f0.eval_signs([gs[i].eval_signs(g[i]) for i in range(n)]) for g in grids])
    for g0 in all_functions(m):
        for fs in itertools.product(all_functions(n), repeat=m):
            cols = [[[g[i][j] for i in range(n)] for j in range(m)] for g in grids]
            right.append([g0.eval_signs([fs[j].eval_signs(c[j]) for j in range(m)]) for c in cols])
    return np.array(left, dtype=np.int8), np.array(right, dtype=np.int8)


def pair_count(n, m):
    left, right = side_values(n, m)
    total = 0
    for row in left:
        total += int(np.count_nonzero(np.all(right == row, axis=1)))
    return total


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="skip (2,2)")
    args = ap.parse_args()
    counts = {}
    for n, m in [(0, 0), (1, 0), (0, 1), (1, 1), (1, 2), (2, 1)]:
        t = time.perf_counter()
        counts[f"{n}x{m}"] = naive_count(n, m)
        # the side-pair method must agree where both are feasible
        assert pair_count(n, m) == counts[f"{n}x{m}"]
        print(f"({n},{m}) {counts[f'{n}x{m}']} passing  [{time.perf_counter() - t:.1f}s]")
    if not args.quick:
        t = time.perf_counter()
        counts["2x2"] = pair_count(2, 2)
        print(f"(2,2) {counts['2x2']} passing  [{time.perf_counter() - t:.1f}s]")
    print(json.dumps(counts))


if __name__ == "__main__":
    main()
