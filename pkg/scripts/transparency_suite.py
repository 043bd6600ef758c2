#!/usr/bin/env python3
"""Exhaustive known-algorithm attack on random tiny tables.

For each algorithm, every possible output on each table is attacked over all
possible instances; a table is a violation when some individual's
disclosure risk exceeds 1/l.

    python3 scripts/transparency_suite.py --tables 100 --algos tailor,ace,hybrid,opt_gen,mondrian
"""
import argparse
import random
import sys
import time
from fractions import Fraction

from transparent_anon import verify_transparency
from transparent_anon.model import AttributeSchema, MicrodataTable, QIAttribute, Record, is_l_eligible

VALUES = ("a", "b", "c", "d", "e")


def random_table(rng, l, n_max=8):
    d = rng.randint(1, 2)
    widths = [rng.randint(0, 6) for _ in range(d)]
    values = VALUES[:rng.randint(l, len(VALUES))]
    schema = AttributeSchema(tuple(QIAttribute(f"q{i}", 0, w) for i, w in enumerate(widths)), "s", values)
    while True:
        n = rng.randint(l, n_max)
        vals = [rng.choice(values) for _ in range(n)]
        if is_l_eligible([Record("", (), v) for v in vals], l):
            break
    recs = tuple(Record(f"p{i}", tuple(rng.randint(0, w) for w in widths), v) for i, v in enumerate(vals))
    return MicrodataTable(schema, recs)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--tables", type=int, default=100)
    ap.add_argument("--algos", default="tailor,ace,hybrid,opt_gen,mondrian")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--n-max", type=int, default=8)
    args = ap.parse_args(argv)

    status = 0
    for algo in args.algos.split(","):
        rng = random.Random(args.seed)
        start = time.perf_counter()
        violations, worst = 0, Fraction(0)
        for _ in range(args.tables):
            l = rng.choice([2, 3])
            rep = verify_transparency(algo, random_table(rng, l, args.n_max), l)
            violations += not rep.passed
            worst = max(worst, rep.max_risk * l)
        print(f"{algo:<9s} tables={args.tables} violations={violations:<4d} "
              f"max risk*l={str(worst):<6s} ({time.perf_counter() - start:.1f} s)", flush=True)
        if violations and algo in ("tailor", "ace", "hybrid"):
            status = 1
    return status


if __name__ == "__main__":
    sys.exit(main())
