"""The attack engine: possible-instance enumeration, output-probability
oracles, disclosure risk, credibility and the transparency verifier."""
from __future__ import annotations

import itertools
import math
import os
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Iterator

from ._decode import decodings, published_groups
from .ace import ace, ace_distribution
from .baselines import (
    ConsistencyError,
    RecodingScheme,
    is_minimal_generalization,
    k_anon_partition,
    mask,
    mask_distribution,
    mondrian_lite,
    opt_gen,
)
from .dataio import partition_by_ids
from .hybrid import hybrid, hybrid_distribution
from .model import (
    ExternalSource,
    MicrodataTable,
    Record,
    SizeLimitError,
    distinct_assignments,
)
from .randomness import derive_seed, master_seed
from .recoding import Anatomy, AnonymizedTable, FunctionName
from .tailor import tailor

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class Limits:
    """Desk-scale limits for exhaustive work. Defaults can be overridden with
    the environment variables TRANSPARENT_ANON_MAX_PUBLISHED,
    TRANSPARENT_ANON_MAX_PARTITION and TRANSPARENT_ANON_MAX_EXECUTIONS."""

    max_published: int = 8
    max_partition: int = 12
    max_executions: int = 200_000

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None) -> "Limits":
        env = os.environ if env is None else env
        d = cls()

        def get(name, default):
            raw = env.get(f"TRANSPARENT_ANON_{name}")
            return default if raw in (None, "") else int(raw)

        return cls(get("MAX_PUBLISHED", d.max_published), get("MAX_PARTITION", d.max_partition),
                   get("MAX_EXECUTIONS", d.max_executions))


@dataclass(frozen=True)
class ProbabilityMode:
    trials: int | None = None  # None: exact
    seed: int = 0

    def __post_init__(self):
        if self.trials is not None and self.trials < 1:
            raise ValueError("Monte Carlo needs at least one trial")

    @property
    def exact(self) -> bool:
        return self.trials is None

    @classmethod
    def monte_carlo(cls, trials: int, seed: int = 0) -> "ProbabilityMode":
        return cls(trials, seed)


EXACT = ProbabilityMode()


# -- algorithm registry -------------------------------------------------------

ALGORITHMS = ("tailor", "ace", "hybrid", "opt_gen", "mask", "mondrian_lite")
RANDOMIZED = {"ace", "hybrid", "mask"}
_ALIASES = {"optgen": "opt_gen", "mondrian": "mondrian_lite"}


@dataclass(frozen=True)
class AlgoSpec:
    """A known algorithm and its public parameters.

    ``params`` is used by mask: ``k``, ``V`` and optionally ``partition``
    (id groups) to pin the k-anonymous partitioner, or ``uniform`` to use
    the size-uniform k-anonymous partitioner.
    """

    name: str
    l: int
    fn: FunctionName = "mbr"
    params: tuple[tuple[str, Any], ...] = ()
    limits: Limits = field(default_factory=Limits.from_env)

    def __post_init__(self):
        name = _ALIASES.get(self.name, self.name)
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.name!r}; choose from {', '.join(ALGORITHMS)}")
        object.__setattr__(self, "name", name)
        if isinstance(self.params, dict):
            object.__setattr__(self, "params", tuple(sorted(self.params.items())))

    @property
    def options(self) -> dict[str, Any]:
        return dict(self.params)

    @property
    def randomized(self) -> bool:
        return self.name in RANDOMIZED

    def _partitioner(self):
        groups = self.options.get("partition")
        if groups is not None:
            return lambda t, k: partition_by_ids(t, groups)
        if self.options.get("uniform"):
            return lambda t, k: k_anon_partition(t, k, uniform=True)
        return None

    def run(self, table: MicrodataTable, seed: int | None = None) -> AnonymizedTable | None:
        o = self.options
        if self.name == "tailor":
            res = tailor(table, self.l, self.fn)
            return None if res is None else res[1]
        if self.name == "ace":
            return ace(table, self.l, seed, self.fn)
        if self.name == "hybrid":
            return hybrid(table, self.l, seed, self.fn)
        if self.name == "opt_gen":
            return opt_gen(table, self.l, self.fn, self.limits.max_partition)
        if self.name == "mask":
            return mask(table, o["k"], self.l, o.get("V", ()), seed, self._partitioner(), self.fn)
        return mondrian_lite(table, self.l, self.fn)

    def distribution(self, table: MicrodataTable) -> dict[AnonymizedTable, Fraction]:
        """Exact output distribution ({} when the algorithm outputs nothing)."""
        lim = self.limits.max_executions
        if self.name == "ace":
            d = ace_distribution(table, self.l, self.fn, lim)
        elif self.name == "hybrid":
            d = hybrid_distribution(table, self.l, self.fn, lim)
        elif self.name == "mask":
            o = self.options
            d = mask_distribution(table, o["k"], self.l, o.get("V", ()), self._partitioner(), self.fn)
        else:
            out = self.run(table)
            d = None if out is None else {out: Fraction(1)}
        return d or {}


def _spec_for(algo: AlgoSpec | str, l: int, published: AnonymizedTable | None = None) -> AlgoSpec:
    if isinstance(algo, AlgoSpec):
        return algo
    fn = "anatomy" if isinstance(published, Anatomy) else "mbr"
    return AlgoSpec(algo, l, fn)


# -- possible instances -------------------------------------------------------

def _instance_records(published: AnonymizedTable, external: ExternalSource,
                      limits: Limits) -> Iterator[tuple[Record, ...]]:
    if len(published) > limits.max_published:
        raise SizeLimitError(f"published table has {len(published)} rows; "
                             f"exhaustive attack limit is {limits.max_published}")
    groups = published_groups(published)
    entries = list(external.entries)
    seen: set[tuple[Record, ...]] = set()
    for dec in decodings(groups, entries):
        members = [sorted(entries[j] for j in idx) for idx in dec]
        options = [list(distinct_assignments(g.sensitive)) for g in groups]
        for combo in itertools.product(*options):
            recs = tuple(sorted(Record(i, q, v) for mem, vals in zip(members, combo)
                                for (i, q), v in zip(mem, vals)))
            if recs not in seen:
                seen.add(recs)
                yield recs


def enumerate_possible_instances(external: ExternalSource, published: AnonymizedTable,
                                 limits: Limits | None = None) -> Iterator[MicrodataTable]:
    """Instances that some anonymization of the published kind maps onto
    ``published``: each published group is backed by external individuals
    whose QI values publish exactly as that group, carrying a permutation of
    the group's sensitive values."""
    limits = limits or Limits.from_env()
    for recs in _instance_records(published, external, limits):
        yield MicrodataTable(published.schema, recs)


# -- output probability -------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    value: float
    half_width: float
    trials: int

    def contains(self, x: float) -> bool:
        return abs(float(x) - self.value) <= self.half_width


def _half_width(p: float, n: int) -> float:
    return Z99 * math.sqrt(p * (1 - p) / n) if n else float("inf")


def output_probability(algo: AlgoSpec | str, instance: MicrodataTable, l: int,
                       published: AnonymizedTable, mode: ProbabilityMode = EXACT):
    """Pr{algo(instance, l) = published}: exact, or a Monte Carlo estimate."""
    spec = _spec_for(algo, l, published)
    if mode.exact:
        return spec.distribution(instance).get(published, Fraction(0))
    if not spec.randomized:
        hit = spec.run(instance) == published
        return Estimate(float(hit), 0.0, mode.trials)
    hits = sum(spec.run(instance, derive_seed(mode.seed, t)) == published for t in range(mode.trials))
    p = hits / mode.trials
    return Estimate(p, _half_width(p, mode.trials), mode.trials)


# -- disclosure risk ----------------------------------------------------------

@dataclass
class IndividualRisk:
    individual: str
    posteriors: dict[str, Fraction | Estimate]
    risk: Fraction | Estimate
    witness: str | None
    breach: bool


@dataclass
class RiskReport:
    algo: str
    l: int
    mode: str
    instances: int
    individuals: dict[str, IndividualRisk]
    consistent_instances: int = 0

    @property
    def breaches(self) -> list[IndividualRisk]:
        return [r for r in self.individuals.values() if r.breach]

    @property
    def passed(self) -> bool:
        return not self.breaches


class _WeightCache:
    def __init__(self, spec: AlgoSpec):
        self.spec = spec
        self.cache: dict[tuple[Record, ...], dict] = {}

    def dist(self, recs: tuple[Record, ...], schema) -> dict:
        d = self.cache.get(recs)
        if d is None:
            d = self.spec.distribution(MicrodataTable(schema, recs))
            self.cache[recs] = d
        return d


def _exact_posteriors(spec: AlgoSpec, published: AnonymizedTable, external: ExternalSource,
                      cache: _WeightCache | None = None):
    cache = cache or _WeightCache(spec)
    total = Fraction(0)
    mass: dict[tuple[str, str], Fraction] = defaultdict(Fraction)
    n = consistent = 0
    for recs in _instance_records(published, external, spec.limits):
        n += 1
        w = cache.dist(recs, published.schema).get(published, Fraction(0))
        if not w:
            continue
        consistent += 1
        total += w
        for r in recs:
            mass[(r.id, r.sensitive)] += w
    if not total:
        raise ConsistencyError("no possible instance produces the published table")
    return {k: v / total for k, v in mass.items()}, n, consistent


def _mc_posteriors(spec: AlgoSpec, published: AnonymizedTable, external: ExternalSource,
                   mode: ProbabilityMode):
    """Rejection sampling: draw an instance uniformly and one execution of the
    algorithm on it; keep draws that reproduce ``published``."""
    pool = list(_instance_records(published, external, spec.limits))
    if not pool:
        raise ConsistencyError("no possible instance produces the published table")
    master = master_seed(mode.seed)
    hits: dict[tuple[str, str], int] = defaultdict(int)
    accepted = 0
    pick = random.Random(derive_seed(master, "pick"))
    for t in range(mode.trials):
        recs = pool[pick.randrange(len(pool))]
        out = spec.run(MicrodataTable(published.schema, recs), derive_seed(master, "run", t))
        if out == published:
            accepted += 1
            for r in recs:
                hits[(r.id, r.sensitive)] += 1
    if not accepted:
        raise ConsistencyError(f"no Monte Carlo draw out of {mode.trials} reproduced the published table")
    post = {k: Estimate(c / accepted, _half_width(c / accepted, accepted), accepted)
            for k, c in hits.items()}
    return post, len(pool), accepted


def _report(spec: AlgoSpec, published, external, mode, cache=None,
            individuals: Iterable[str] | None = None) -> RiskReport:
    if mode.exact:
        post, n, consistent = _exact_posteriors(spec, published, external, cache)
        zero = Fraction(0)
    else:
        post, n, consistent = _mc_posteriors(spec, published, external, mode)
        zero = Estimate(0.0, 0.0, consistent)
    universe = published.schema.sensitive_values
    bound = Fraction(1, spec.l)
    ids = list(individuals) if individuals is not None else [i for i, _ in external.entries]
    out = {}
    for o in ids:
        ps = {v: post.get((o, v), zero) for v in universe}
        witness = max(universe, key=lambda v: _val(ps[v]))  # first maximal value
        risk = ps[witness]
        out[o] = IndividualRisk(o, ps, risk, witness if _val(risk) > 0 else None,
                                _exceeds(risk, bound))
    return RiskReport(spec.name, spec.l, "exact" if mode.exact else f"mc:{mode.trials}",
                      n, out, consistent)


def _exceeds(risk, bound: Fraction) -> bool:
    # a Monte Carlo estimate breaches only when its whole interval lies above the bound
    if isinstance(risk, Estimate):
        return risk.value - risk.half_width > bound
    return risk > bound


def _val(x):
    return x.value if isinstance(x, Estimate) else x


def disclosure_risk(individual: str, published: AnonymizedTable, external: ExternalSource,
                    algo: AlgoSpec | str, l: int, mode: ProbabilityMode = EXACT):
    """(per-value posteriors, risk) for one individual."""
    spec = _spec_for(algo, l, published)
    rep = _report(spec, published, external, mode, individuals=[individual])
    r = rep.individuals[individual]
    return r.posteriors, r.risk


def risk_report(published: AnonymizedTable, external: ExternalSource, algo: AlgoSpec | str,
                l: int, mode: ProbabilityMode = EXACT,
                individuals: Iterable[str] | None = None) -> RiskReport:
    return _report(_spec_for(algo, l, published), published, external, mode,
                   individuals=individuals)


# -- credibility --------------------------------------------------------------

@dataclass
class CredibilityResult:
    posteriors: dict[str, Fraction]
    credibility: Fraction
    support: int  # |S+|


def credibility(individual: str, published: AnonymizedTable, external: ExternalSource, l: int,
                scheme: RecodingScheme = RecodingScheme.GLOBAL,
                limits: Limits | None = None) -> CredibilityResult:
    """Posterior over instances for which ``published`` is a minimal
    l-diverse generalization, all such instances weighted equally."""
    limits = limits or Limits.from_env()
    counts: dict[str, int] = defaultdict(int)
    support = 0
    for recs in _instance_records(published, external, limits):
        if is_minimal_generalization(MicrodataTable(published.schema, recs), published, l, scheme):
            support += 1
            for r in recs:
                if r.id == individual:
                    counts[r.sensitive] += 1
    if not support:
        raise ConsistencyError("no instance has the published table as a minimal generalization")
    post = {v: Fraction(counts[v], support) for v in published.schema.sensitive_values}
    return CredibilityResult(post, max(post.values()), support)


# -- transparency -------------------------------------------------------------

@dataclass
class Witness:
    output_index: int
    individual: str
    value: str
    risk: Fraction | Estimate


@dataclass
class TransparencyReport:
    algo: str
    l: int
    outputs: int
    witnesses: list[Witness]
    reports: list[RiskReport]

    @property
    def passed(self) -> bool:
        return not self.witnesses

    @property
    def max_risk(self):
        vals = [r.risk for rep in self.reports for r in rep.individuals.values()]
        return max(vals, key=_val, default=Fraction(0))


def verify_transparency(algo: AlgoSpec | str, table: MicrodataTable, l: int,
                        external: ExternalSource | None = None, mode: ProbabilityMode = EXACT,
                        seeds: Iterable[int] | None = None) -> TransparencyReport:
    """Run ``algo`` on ``table`` (every possible output in exact mode, or one
    output per seed) and compute every individual's disclosure risk."""
    spec = _spec_for(algo, l)
    external = external or table.projection()
    if mode.exact and seeds is None:
        outputs = list(spec.distribution(table))
    else:
        seeds = list(seeds) if seeds is not None else [mode.seed]
        outputs = []
        for s in seeds:
            out = spec.run(table, s)
            if out is not None and out not in outputs:
                outputs.append(out)
    cache = _WeightCache(spec) if mode.exact else None
    witnesses, reports = [], []
    for i, out in enumerate(outputs):
        rep = _report(spec, out, external, mode, cache)
        reports.append(rep)
        for r in rep.breaches:
            witnesses.append(Witness(i, r.individual, r.witness, r.risk))
    return TransparencyReport(spec.name, l, len(outputs), witnesses, reports)
