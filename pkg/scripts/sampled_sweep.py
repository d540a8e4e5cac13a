"""Sampled sweep beyond exhaustive reach: random tuples plus generated ones.

Random tuples at (3,3) almost never pass, so the generated share is what
exercises the classifier. Prints the report as JSON.

    python3 scripts/sampled_sweep.py --n 3 --m 3 --count 1000000 --generated 10000
"""
import argparse
import json

from genpoly.enumerator import enumerate_sampled


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--count", type=int, default=100_000)
    ap.add_argument("--generated", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--catalogue")
    args = ap.parse_args()
    report = enumerate_sampled(
        args.n, args.m, args.count, seed=args.seed, generated=args.generated, catalogue=args.catalogue,
    )
    out = report.to_json()
    out["ok"] = report.ok()
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
