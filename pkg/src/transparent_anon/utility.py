"""Count-query workloads: generation, exact and estimated answers, and the
relative workload error."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import AttributeSchema, MicrodataTable
from .randomness import RngLike, as_rng
from .recoding import Anatomy, AnonymizedTable, Generalization

Interval = tuple[int, int]


@dataclass(frozen=True)
class CountQuery:
    """COUNT(*) with an interval or no predicate per QI attribute and a
    sensitive predicate that is an interval of the ordered value universe
    (``sensitive`` holds the first and last value included)."""

    qi: tuple[Interval | None, ...]
    sensitive: tuple[str, str]

    @property
    def qd(self) -> int:
        return 1 + sum(p is not None for p in self.qi)

    def matches(self, qi: Sequence[int], value: str) -> bool:
        lo, hi = self.sensitive
        if not lo <= value <= hi:
            return False
        return all(p is None or p[0] <= v <= p[1] for v, p in zip(qi, self.qi))


@dataclass(frozen=True)
class Workload:
    queries: tuple[CountQuery, ...]
    qd: int
    selectivity: float
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)


@dataclass(frozen=True)
class QueryResult:
    act: int
    est: float
    error: float


@dataclass(frozen=True)
class EvalResult:
    results: tuple[QueryResult, ...]
    workload_error: float
    delta: float


def coverage(size: int, s: float, qd: int) -> int:
    """Number of consecutive domain values a predicate spans: ceil(s^(1/qd) * size)."""
    x = s ** (1.0 / qd) * size
    return max(1, min(size, math.ceil(x - 1e-9)))


def generate_workload(schema: AttributeSchema, qd: int, s: float, n_queries: int = 1000,
                      rng: RngLike = None) -> Workload:
    """Each query constrains the sensitive attribute and qd-1 uniformly chosen
    QI attributes with uniformly placed intervals of the coverage size."""
    if not 2 <= qd <= schema.d + 1:
        raise ValueError(f"qd must lie in [2, {schema.d + 1}], got {qd}")
    if not 0 < s < 1:
        raise ValueError("selectivity must lie strictly between 0 and 1")
    seed = rng if isinstance(rng, int) else None
    rng = as_rng(rng)
    universe = schema.sensitive_values
    queries = []
    for _ in range(n_queries):
        dims = set(rng.sample(range(schema.d), qd - 1))
        preds: list[Interval | None] = []
        for i, a in enumerate(schema.qi):
            if i in dims:
                c = coverage(a.size, s, qd)
                lo = rng.randint(a.lo, a.hi - c + 1)
                preds.append((lo, lo + c - 1))
            else:
                preds.append(None)
        c = coverage(len(universe), s, qd)
        start = rng.randint(0, len(universe) - c)
        queries.append(CountQuery(tuple(preds), (universe[start], universe[start + c - 1])))
    return Workload(tuple(queries), qd, s, seed)


def _sens_range(universe: Sequence[str], q: CountQuery) -> tuple[int, int]:
    """Half-open index range of universe values inside the sensitive predicate."""
    lo, hi = q.sensitive
    a = int(np.searchsorted(universe, lo, side="left"))
    b = int(np.searchsorted(universe, hi, side="right"))
    return a, b


class _MicroIndex:
    def __init__(self, table: MicrodataTable):
        self.universe = np.array(table.schema.sensitive_values)
        n, d = len(table), table.schema.d
        self.Q = np.array([r.qi for r in table], dtype=np.int64).reshape(n, d)
        pos = {v: i for i, v in enumerate(table.schema.sensitive_values)}
        self.S = np.array([pos[r.sensitive] for r in table], dtype=np.int64)

    def count(self, q: CountQuery) -> int:
        a, b = _sens_range(self.universe, q)
        m = (self.S >= a) & (self.S < b)
        for i, p in enumerate(q.qi):
            if p is not None:
                m &= (self.Q[:, i] >= p[0]) & (self.Q[:, i] <= p[1])
        return int(m.sum())


class _GenIndex:
    def __init__(self, published: Generalization):
        schema = published.schema
        self.universe = np.array(schema.sensitive_values)
        pos = {v: i for i, v in enumerate(schema.sensitive_values)}
        g, d, u = len(published.groups), schema.d, len(pos)
        self.lo = np.zeros((g, d), dtype=np.int64)
        self.hi = np.zeros((g, d), dtype=np.int64)
        hist = np.zeros((g, u), dtype=np.int64)
        for gi, grp in enumerate(published.groups):
            for i, (lo, hi) in enumerate(grp.intervals):
                self.lo[gi, i], self.hi[gi, i] = lo, hi
            for v in grp.sensitive:
                hist[gi, pos[v]] += 1
        self.cum = np.concatenate([np.zeros((g, 1), dtype=np.int64), hist.cumsum(axis=1)], axis=1)

    def estimate(self, q: CountQuery) -> float:
        a, b = _sens_range(self.universe, q)
        frac = (self.cum[:, b] - self.cum[:, a]).astype(float)
        for i, p in enumerate(q.qi):
            if p is None:
                continue
            overlap = np.minimum(self.hi[:, i], p[1]) - np.maximum(self.lo[:, i], p[0]) + 1
            frac *= np.clip(overlap, 0, None) / (self.hi[:, i] - self.lo[:, i] + 1)
        return float(frac.sum())


class _AnatomyIndex:
    def __init__(self, published: Anatomy):
        schema = published.schema
        self.universe = np.array(schema.sensitive_values)
        pos = {v: i for i, v in enumerate(schema.sensitive_values)}
        rows = published.qi_rows()
        g = len(published.groups)
        self.Q = np.array([q for q, _ in rows], dtype=np.int64).reshape(len(rows), schema.d)
        self.gid = np.array([gid - 1 for _, gid in rows], dtype=np.int64)
        hist = np.zeros((g, len(pos)), dtype=np.int64)
        for gid, v in published.sensitive_rows():
            hist[gid - 1, pos[v]] += 1
        self.cum = np.concatenate([np.zeros((g, 1), dtype=np.int64), hist.cumsum(axis=1)], axis=1)
        self.size = np.array([len(grp) for grp in published.groups], dtype=float)
        self.g = g

    def estimate(self, q: CountQuery) -> float:
        a, b = _sens_range(self.universe, q)
        m = np.ones(len(self.gid), dtype=bool)
        for i, p in enumerate(q.qi):
            if p is not None:
                m &= (self.Q[:, i] >= p[0]) & (self.Q[:, i] <= p[1])
        qi_hits = np.bincount(self.gid[m], minlength=self.g)
        sens_hits = self.cum[:, b] - self.cum[:, a]
        return float((qi_hits * sens_hits / self.size).sum())


def _index(published: AnonymizedTable):
    if isinstance(published, Generalization):
        return _GenIndex(published)
    if isinstance(published, Anatomy):
        return _AnatomyIndex(published)
    raise TypeError(f"not a published table: {published!r}")


def exact_count(table: MicrodataTable, q: CountQuery) -> int:
    if not len(table):
        return 0
    return _MicroIndex(table).count(q)


def estimated_count(published: AnonymizedTable, q: CountQuery) -> float:
    """Uniform-spread estimate: a generalized row contributes the fraction of
    its interval points inside the query; an anatomy group contributes
    (matching QI rows) x (matching sensitive rows) / group size."""
    if not len(published):
        return 0.0
    return _index(published).estimate(q)


def workload_error(table: MicrodataTable, published: AnonymizedTable, workload: Workload | Sequence[CountQuery],
                   delta: float | None = None) -> EvalResult:
    """Average of |act - est| / max(act, delta); delta defaults to 0.5% of |table|."""
    delta = 0.005 * len(table) if delta is None else delta
    micro = _MicroIndex(table) if len(table) else None
    pub = _index(published) if len(published) else None
    results = []
    for q in workload:
        act = micro.count(q) if micro else 0
        est = pub.estimate(q) if pub else 0.0
        denom = max(act, delta)
        err = abs(act - est) / denom if denom > 0 else 0.0
        results.append(QueryResult(act, est, err))
    avg = sum(r.error for r in results) / len(results) if results else 0.0
    return EvalResult(tuple(results), avg, delta)
