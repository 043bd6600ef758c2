"""Command-line interface: ``transparent-anon <command> [flags]``.

Exit codes are stable: 0 ok, 1 io/config error, 2 infeasible input,
3 privacy breach found, 4 enumeration limits exceeded, 5 demo mismatch.

Reports are plain text: a human-readable table followed by a JSON section
between ``-----BEGIN JSON-----`` and ``-----END JSON-----`` lines that
parses back into the originating structure (see :class:`ReportDocument`).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .ace import ace, ace_partition_distribution, assign, assign_probability, assign_skeleton, canonical_division
from .adversary import (
    AlgoSpec,
    Estimate,
    IndividualRisk,
    Limits,
    ProbabilityMode,
    RiskReport,
    TransparencyReport,
    credibility,
    enumerate_possible_instances,
    risk_report,
    verify_transparency,
)
from .baselines import (
    ConsistencyError,
    InfeasibleError,
    UnmaskableError,
    mask_consistency_attack,
    mask_distribution,
    opt_gen,
)
from .dataio import (
    MASK_FIXTURE_PARTITION,
    DataFormatError,
    SchemaConfig,
    default_synth_schema,
    fixture,
    load_external,
    load_published,
    load_table,
    partition_by_ids,
    synthesize,
    write_published,
    write_table,
)
from .hybrid import hybrid_distribution, hybrid_group_distributions
from .model import QIGroup, SchemaError, SizeLimitError, is_l_diverse
from .recoding import Generalization, discernability
from .tailor import canonical_l_cut, tailor, tailor_partition
from .utility import EvalResult, QueryResult, generate_workload, workload_error

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE, EXIT_BREACH, EXIT_LIMITS, EXIT_MISMATCH = range(6)

DEFAULT_L = 8
DEFAULT_QD = 3
DEFAULT_SEL = 0.06
EXAMPLE6_SEED = 0  # Assign(T5, 2, seed 0) puts Don in the gastritis column


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# -- report documents ---------------------------------------------------------

_BEGIN, _END = "-----BEGIN JSON-----", "-----END JSON-----"


def _num(x) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Estimate):
        return {"value": x.value, "half_width": x.half_width, "trials": x.trials}
    return x


def _unnum(x) -> Fraction | Estimate:
    if isinstance(x, dict):
        return Estimate(x["value"], x["half_width"], x["trials"])
    return Fraction(x)


def _fmt(x) -> str:
    if isinstance(x, Estimate):
        return f"{x.value:.4f} ± {x.half_width:.4f}"
    return str(x)


def risk_to_dict(rep: RiskReport) -> dict:
    return {
        "algo": rep.algo, "l": rep.l, "mode": rep.mode, "instances": rep.instances,
        "consistent_instances": rep.consistent_instances,
        "individuals": [
            {"individual": r.individual, "risk": _num(r.risk), "witness": r.witness, "breach": r.breach,
             "posteriors": {v: _num(p) for v, p in r.posteriors.items()}}
            for r in rep.individuals.values()
        ],
    }


def risk_from_dict(d: dict) -> RiskReport:
    inds = {}
    for r in d["individuals"]:
        inds[r["individual"]] = IndividualRisk(
            r["individual"], {v: _unnum(p) for v, p in r["posteriors"].items()},
            _unnum(r["risk"]), r["witness"], r["breach"])
    return RiskReport(d["algo"], d["l"], d["mode"], d["instances"], inds, d["consistent_instances"])


def eval_to_dict(res: EvalResult) -> dict:
    return {"workload_error": res.workload_error, "delta": res.delta,
            "results": [asdict(r) for r in res.results]}


def eval_from_dict(d: dict) -> EvalResult:
    return EvalResult(tuple(QueryResult(**r) for r in d["results"]), d["workload_error"], d["delta"])


_CODECS: dict[str, tuple[Callable, Callable]] = {
    "risk": (risk_to_dict, risk_from_dict),
    "eval": (eval_to_dict, eval_from_dict),
}


@dataclass
class ReportDocument:
    """A run's result plus metadata (algo, l, seed, limits, ...)."""

    kind: str  # "risk" or "eval"
    metadata: dict[str, Any]
    body: RiskReport | EvalResult
    summary: list[str] = field(default_factory=list)

    def render(self) -> str:
        lines = [f"transparent-anon {self.kind} report"]
        lines += [f"  {k}: {v}" for k, v in self.metadata.items()]
        lines.append("")
        lines += self._table()
        lines += [""] + self.summary + ["", _BEGIN]
        payload = {"kind": self.kind, "metadata": self.metadata, "body": _CODECS[self.kind][0](self.body)}
        lines.append(json.dumps(payload, indent=2, sort_keys=True))
        lines.append(_END)
        return "\n".join(lines) + "\n"

    def _table(self) -> list[str]:
        if isinstance(self.body, RiskReport):
            rows = [("individual", "risk", "witness", "breach")]
            for r in self.body.individuals.values():
                rows.append((r.individual, _fmt(r.risk), r.witness or "-", "YES" if r.breach else "no"))
        else:
            rows = [("metric", "value"), ("queries", str(len(self.body.results))),
                    ("workload_error", f"{self.body.workload_error:.6f}"), ("delta", f"{self.body.delta:g}")]
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]

    @classmethod
    def parse(cls, text: str) -> "ReportDocument":
        try:
            start = text.index(_BEGIN) + len(_BEGIN)
            end = text.index(_END, start)
        except ValueError:
            raise DataFormatError("report has no JSON section") from None
        payload = json.loads(text[start:end])
        kind = payload["kind"]
        return cls(kind, payload["metadata"], _CODECS[kind][1](payload["body"]))


# -- helpers ------------------------------------------------------------------

def _config(path: str) -> SchemaConfig:
    try:
        return SchemaConfig.load(path)
    except OSError as e:
        raise CliError(f"cannot read schema config {path}: {e}", EXIT_IO) from e


def _values(raw: str | None) -> tuple[str, ...]:
    return tuple(v.strip() for v in raw.split(",") if v.strip()) if raw else ()


def _mask_params(args) -> dict:
    if args.k is None:
        raise CliError("--algo mask needs --k", EXIT_IO)
    params = {"k": args.k, "V": _values(args.V)}
    if getattr(args, "partition", None):
        params["partition"] = tuple(tuple(_values(g)) for g in args.partition.split(";"))
    elif getattr(args, "uniform_groups", False):
        params["uniform"] = True
    return params


def _spec(args, fn: str) -> AlgoSpec:
    params = _mask_params(args) if args.algo == "mask" else {}
    return AlgoSpec(args.algo, args.l, fn, params, Limits.from_env())


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- commands -----------------------------------------------------------------

def cmd_anonymize(args) -> int:
    cfg = _config(args.schema)
    table = load_table(args.input, cfg)
    fn = "anatomy" if args.format == "anatomy" else "mbr"
    out = _spec(args, fn).run(table, args.seed)
    if out is None:
        raise CliError(f"{args.algo}: input is not {args.l}-eligible; nothing published", EXIT_INFEASIBLE)
    paths = write_published(out, args.output)
    print(f"wrote {', '.join(map(str, paths))} ({len(out.groups)} groups, {len(out)} rows)")
    return EXIT_OK


def _mode(args) -> ProbabilityMode:
    if args.mode == "mc":
        return ProbabilityMode.monte_carlo(args.trials, args.seed or 0)
    return ProbabilityMode()


def cmd_attack(args) -> int:
    cfg = _config(args.schema)
    published = load_published(args.published, cfg)
    external = load_external(args.external, cfg, published.schema)
    fn = "mbr" if isinstance(published, Generalization) else "anatomy"
    spec = _spec(args, fn)
    mode = _mode(args)
    inds = _values(args.individual) or None
    t0 = time.perf_counter()
    rep = risk_report(published, external, spec, args.l, mode, inds)
    meta = {"algo": spec.name, "l": args.l, "mode": rep.mode, "seed": args.seed,
            "limits": asdict(spec.limits), "elapsed_s": round(time.perf_counter() - t0, 3)}
    verdict = "PASS: every risk <= 1/l" if rep.passed else f"FAIL: {len(rep.breaches)} individual(s) above 1/l"
    summary = [f"possible instances: {rep.instances}", f"consistent instances: {rep.consistent_instances}", verdict]
    _emit(ReportDocument("risk", meta, rep, summary).render(), args.report)
    return EXIT_OK if rep.passed else EXIT_BREACH


def cmd_evaluate(args) -> int:
    cfg = _config(args.schema)
    table = load_table(args.micro, cfg)
    published = load_published(args.published, cfg)
    workload = generate_workload(table.schema, args.qd, args.sel, args.queries, args.seed)
    delta = args.delta_pct / 100 * len(table)
    res = workload_error(table, published, workload, delta)
    meta = {"qd": args.qd, "sel": args.sel, "queries": args.queries, "seed": args.seed,
            "delta_pct": args.delta_pct, "rows": len(table)}
    _emit(ReportDocument("eval", meta, res).render(), args.report)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args.schema)
    table = load_table(args.input, cfg)
    fn = "anatomy" if args.format == "anatomy" else "mbr"
    spec = _spec(args, fn)
    mode = _mode(args)
    seeds = None if mode.exact else range(args.seed or 0, (args.seed or 0) + args.runs)
    rep: TransparencyReport = verify_transparency(spec, table, args.l, mode=mode, seeds=seeds)
    print(f"{spec.name} l={args.l}: {rep.outputs} output(s) checked, max risk {_fmt(rep.max_risk)}")
    for w in rep.witnesses:
        print(f"  breach: output {w.output_index}, {w.individual} -> {w.value} with risk {_fmt(w.risk)}")
    print("PASS" if rep.passed else "FAIL")
    return EXIT_OK if rep.passed else EXIT_BREACH


def cmd_synth(args) -> int:
    schema = default_synth_schema(args.universe)
    table = synthesize(args.n, schema, args.rho, args.seed)
    write_table(table, args.output)
    if args.schema_out:
        Path(args.schema_out).write_text(SchemaConfig.from_schema(schema).to_text(), encoding="utf-8")
    print(f"wrote {args.n} rows to {args.output}")
    return EXIT_OK


# -- demos --------------------------------------------------------------------

Check = tuple[str, Any, Any]


def _ids(groups) -> list[list[str]]:
    return sorted(sorted(r.id for r in g) for g in groups)


def demo_example2() -> list[Check]:
    t1, t2s, e1 = fixture("T1"), fixture("T2*"), fixture("E1")
    out = opt_gen(t1, 2)
    alt = fixture("T1_alt")
    alt_out = opt_gen(alt, 2)
    rep = risk_report(t2s, e1, "opt_gen", 2, individuals=["Ed", "Bruce"])
    return [
        ("opt_gen(T1, 2) = T2*", out == t2s, True),
        ("discernability of opt_gen(T1, 2)", discernability(g.rows() for g in out.groups), 24),
        ("discernability with Ed and Fred swapped", discernability(g.rows() for g in alt_out.groups), 22),
        ("swapped instance publishes T2*", alt_out == t2s, False),
        ("risk(Ed)", rep.individuals["Ed"].risk, Fraction(1)),
        ("witness(Ed)", rep.individuals["Ed"].witness, "gastritis"),
        ("risk(Bruce)", rep.individuals["Bruce"].risk, Fraction(0)),
    ]


def demo_example3() -> list[Check]:
    t2s, e1 = fixture("T2*"), fixture("E1")
    insts = list(enumerate_possible_instances(e1, t2s))
    cred = credibility("Ed", t2s, e1, 2)
    return [
        ("possible instances", len(insts), 96),
        ("instances containing Bruce", sum(any(r.id == "Bruce" for r in t) for t in insts), 0),
        ("cred(Ed)", cred.credibility, Fraction(1, 4)),
        ("|S+|", cred.support, 96),
    ]


def demo_example4() -> list[Check]:
    t5, t3, t6s = fixture("T5"), fixture("T3"), fixture("T6*")
    cut = canonical_l_cut(QIGroup(t5.records), 2, t5.schema)
    part = tailor_partition(t5, 2)
    return [
        ("canonical 2-cut of T5", _ids([cut.left.members, cut.right.members]),
         [["Ann", "Bob", "Cate", "Don"], ["Ed", "Fred", "Gill", "Hera"]]),
        ("Tailor partition of T5", _ids(g.members for g in part.groups),
         [["Ann", "Bob", "Cate", "Don"], ["Ed", "Fred"], ["Gill", "Hera"]]),
        ("tailor(T5, 2) = Table IX", tailor(t5, 2)[1] == t6s, True),
        ("tailor(T3, 2) = Table IX", tailor(t3, 2)[1] == t6s, True),
    ]


def demo_example6() -> list[Check]:
    t5, t7s = fixture("T5"), fixture("T7*")
    steps = assign_skeleton(Counter(r.sensitive for r in t5), 2)
    u1 = assign(t5, 2, EXAMPLE6_SEED)
    b1 = next(b for b in u1 if b.column_size == 2)
    div = canonical_division(b1, t5.schema)
    dist = ace_partition_distribution(t5, 2)
    return [
        ("Assign (alpha, beta) per step", [(s.alpha, s.beta) for s in steps], [(2, 2), (1, 2), (1, 2)]),
        ("signatures", [s.signature for s in steps],
         [("dyspepsia", "flu"), ("gastritis", "bronchitis"), ("diabetes", "gastritis")]),
        (f"Assign(T5, 2, seed {EXAMPLE6_SEED})", _ids(b.members for b in u1),
         [["Ann", "Bob", "Ed", "Gill"], ["Cate", "Hera"], ["Don", "Fred"]]),
        ("Pr[Assign = U1]", assign_probability(t5, 2, u1), Fraction(1, 2)),
        ("canonical division of B1", _ids([div.left.members, div.right.members]),
         [["Ann", "Bob"], ["Ed", "Gill"]]),
        (f"ace(T5, 2, seed {EXAMPLE6_SEED}) = Table X", ace(t5, 2, EXAMPLE6_SEED) == t7s, True),
        ("distinct sliced partitions", sorted(p for _, p in dist.values()), [Fraction(1, 2)] * 2),
    ]


def demo_hybrid_split() -> list[Check]:
    t5 = fixture("T5")
    part, per_group = hybrid_group_distributions(t5, 2)
    abcd = per_group[0]
    refinements = {tuple(map(tuple, _ids(b.members for b in u))): p for u, p in abcd.values()}
    dist = hybrid_distribution(t5, 2)
    return [
        ("Tailor groups", _ids(g.members for g in part.groups),
         [["Ann", "Bob", "Cate", "Don"], ["Ed", "Fred"], ["Gill", "Hera"]]),
        ("Pr[{Ann,Cate},{Bob,Don}]", refinements.get((("Ann", "Cate"), ("Bob", "Don"))), Fraction(1, 2)),
        ("refinements of {Ann,Bob,Cate,Don}", len(refinements), 2),
        ("output group sizes", sorted({len(g) for out in dist for g in out.groups}), [2]),
        ("outputs are 2-diverse", all(is_l_diverse(g.rows(), 2) for out in dist for g in out.groups), True),
    ]


def demo_mask_appendix() -> list[Check]:
    t9, t10s = fixture("T9"), fixture("T10*")
    part = partition_by_ids(t9, MASK_FIXTURE_PARTITION)
    dist = mask_distribution(t9, 2, 2, {"dyspepsia"}, part)
    res = mask_consistency_attack(t10s, t9.projection(), 2, 2, {"dyspepsia"})
    return [
        ("Table III in mask support", t10s in dist, True),
        ("consistent instances", res.count, 8),
        ("posterior(Ann, dyspepsia)", res.posterior("Ann", "dyspepsia"), Fraction(5, 8)),
    ]


DEMOS: dict[str, Callable[[], list[Check]]] = {
    "example2": demo_example2,
    "example3": demo_example3,
    "example4": demo_example4,
    "example6": demo_example6,
    "hybrid-split": demo_hybrid_split,
    "mask-appendix": demo_mask_appendix,
}


def cmd_demo(args) -> int:
    names = list(DEMOS) if args.name == "all" else [args.name]
    ok = True
    for name in names:
        print(f"== {name}")
        for label, got, want in DEMOS[name]():
            match = got == want
            ok &= match
            print(f"  [{'ok' if match else 'MISMATCH'}] {label}: computed {got}, expected {want}")
    return EXIT_OK if ok else EXIT_MISMATCH


# -- argument parsing ---------------------------------------------------------

def _add_algo(p, required=True):
    p.add_argument("--algo", required=required,
                   choices=["tailor", "ace", "hybrid", "optgen", "opt_gen", "mask", "mondrian", "mondrian_lite"])
    p.add_argument("--l", type=int, default=DEFAULT_L, help=f"diversity parameter (default {DEFAULT_L})")
    p.add_argument("--k", type=int, help="mask: k-anonymity group size")
    p.add_argument("--V", help="mask: comma-separated sensitive values to protect")
    p.add_argument("--partition", help="mask: pinned partition as 'id,id;id,id,...'")
    p.add_argument("--uniform-groups", action="store_true",
                   help="mask: k-anonymous groups of exactly k records (at most one larger)")
    p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="transparent-anon",
                                 description="Transparent l-diverse anonymization and attack tooling.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anonymize", help="publish an l-diverse version of a microdata CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    _add_algo(p)
    p.add_argument("--format", choices=["generalization", "anatomy"], default="generalization")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("attack", help="compute disclosure risks of a published table")
    p.add_argument("--published", required=True)
    p.add_argument("--external", required=True)
    p.add_argument("--schema", required=True)
    _add_algo(p)
    p.add_argument("--mode", choices=["exact", "mc"], default="exact")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--individual", help="comma-separated identifiers (default: everyone in --external)")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("evaluate", help="workload error of a published table")
    p.add_argument("--micro", required=True)
    p.add_argument("--published", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--qd", type=int, default=DEFAULT_QD)
    p.add_argument("--sel", type=float, default=DEFAULT_SEL)
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta-pct", type=float, default=0.5)
    p.add_argument("--report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify", help="check an algorithm's transparency on a small table")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    _add_algo(p)
    p.add_argument("--format", choices=["generalization", "anatomy"], default="generalization")
    p.add_argument("--mode", choices=["exact", "mc"], default="exact")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--runs", type=int, default=1, help="mc: number of seeded outputs to attack")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo", help="replay a worked example and compare with the expected values")
    p.add_argument("name", choices=[*DEMOS, "all"])
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("synth", help="generate a synthetic microdata table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--universe", type=int, default=50)
    p.add_argument("--output", required=True)
    p.add_argument("--schema-out")
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except SizeLimitError as e:
        print(f"limits exceeded: {e}", file=sys.stderr)
        return EXIT_LIMITS
    except (InfeasibleError, UnmaskableError) as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, DataFormatError, SchemaError, ConsistencyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
