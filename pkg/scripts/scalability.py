#!/usr/bin/env python3
"""Running time of Tailor, Ace and Hybrid as the table grows.

    python3 scripts/scalability.py --sizes 25000,50000,100000 --l 8
"""
import argparse
import sys
import time

from transparent_anon import ace_partition, hybrid_partition, synthesize, tailor_partition

RUNS = {
    "tailor": lambda t, l, s: tailor_partition(t, l),
    "ace": ace_partition,
    "hybrid": hybrid_partition,
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="25000,50000,100000")
    ap.add_argument("--l", type=int, default=8)
    ap.add_argument("--rho", type=float, default=0.8)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'n':>8s}  " + "  ".join(f"{a:>8s}" for a in RUNS))
    prev = None
    for n in sizes:
        table = synthesize(n, rho=args.rho, seed=args.seed)
        times = []
        for run in RUNS.values():
            start = time.perf_counter()
            run(table, args.l, args.seed)
            times.append(time.perf_counter() - start)
        line = f"{n:8d}  " + "  ".join(f"{t:7.2f}s" for t in times)
        if prev:
            line += "   growth " + " ".join(f"{t / p:.2f}" for t, p in zip(times, prev))
        print(line, flush=True)
        prev = times
    return 0


if __name__ == "__main__":
    sys.exit(main())
