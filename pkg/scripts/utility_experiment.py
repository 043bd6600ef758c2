#!/usr/bin/env python3
"""Workload error of every algorithm on synthetic data, swept over l or rho.

    python3 scripts/utility_experiment.py --n 10000 --vary l --values 4,6,8,10
    python3 scripts/utility_experiment.py --vary rho --values 0,0.4,0.8 --csv out.csv
"""
import argparse
import csv
import sys
import time

from transparent_anon import ace, hybrid, mask, mondrian_lite, synthesize, tailor
from transparent_anon.baselines import k_anon_partition
from transparent_anon.utility import generate_workload, workload_error


def algorithms(seed):
    return {
        "tailor": lambda t, l: tailor(t, l)[1],
        "ace": lambda t, l: ace(t, l, seed),
        "hybrid": lambda t, l: hybrid(t, l, seed),
        "mondrian": mondrian_lite,
        "mask": lambda t, l: mask(t, l, l, t.schema.sensitive_values, seed,
                                  lambda tt, k: k_anon_partition(tt, k, uniform=True)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--vary", choices=["l", "rho"], default="l")
    ap.add_argument("--values", default="4,6,8,10")
    ap.add_argument("--l", type=int, default=8, help="fixed l when varying rho")
    ap.add_argument("--rho", type=float, default=0.8, help="fixed rho when varying l")
    ap.add_argument("--qd", type=int, default=3)
    ap.add_argument("--sel", type=float, default=0.06)
    ap.add_argument("--queries", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--algos", default="tailor,ace,hybrid,mondrian,mask")
    ap.add_argument("--csv", help="also write results here")
    args = ap.parse_args(argv)

    algos = {k: v for k, v in algorithms(args.seed).items() if k in args.algos.split(",")}
    rows = []
    for raw in args.values.split(","):
        l = int(raw) if args.vary == "l" else args.l
        rho = float(raw) if args.vary == "rho" else args.rho
        table = synthesize(args.n, rho=rho, seed=args.seed)
        workload = generate_workload(table.schema, args.qd, args.sel, args.queries, rng=args.seed)
        for name, run in algos.items():
            start = time.perf_counter()
            pub = run(table, l)
            elapsed = time.perf_counter() - start
            err = workload_error(table, pub, workload).workload_error if pub is not None else float("nan")
            rows.append({"algo": name, "l": l, "rho": rho, "error": err, "seconds": elapsed})
            print(f"l={l:<3d} rho={rho:<4g} {name:<9s} error={err:8.4f}  ({elapsed:.2f} s)", flush=True)
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
