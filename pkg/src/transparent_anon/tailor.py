"""Tailor: deterministic l-diverse generalization by recursive canonical l-cuts."""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction

from ._splitting import Workspace
from .model import AttributeSchema, MicrodataTable, Partition, QIGroup, is_l_eligible
from .recoding import AnonymizedTable, FunctionName, PenaltyMetric, anonymize, perimeter


@dataclass(frozen=True)
class LCut:
    left: QIGroup
    right: QIGroup
    dimension: int
    split_size: int
    perimeter: Fraction


def _c(group) -> int:
    return max(Counter(r.sensitive for r in group).values())


def enumerate_l_cuts(group: QIGroup, l: int, schema: AttributeSchema) -> list[LCut]:
    """Every l-cut of ``group``: per dimension, each prefix/suffix split of the
    (value, id) order leaving at least l*c records on both sides."""
    members = list(group)
    m = len(members)
    if m == 0:
        return []
    lc = l * _c(members)
    cuts = []
    for dim in range(schema.d):
        s = sorted(members, key=lambda r: (r.qi[dim], r.id))
        for k in range(lc, m - lc + 1):
            left, right = s[:k], s[k:]
            cuts.append(LCut(QIGroup(tuple(left)), QIGroup(tuple(right)), dim, k,
                             perimeter(left, schema) + perimeter(right, schema)))
    return cuts


def _pick(cuts: list[LCut], score) -> LCut | None:
    # smallest score, then smallest dimension, then largest left part
    return min(cuts, key=lambda c: (score(c), c.dimension, -c.split_size), default=None)


def canonical_l_cut(group: QIGroup, l: int, schema: AttributeSchema,
                    metric: PenaltyMetric | None = None) -> LCut | None:
    if metric is not None:
        return _pick(enumerate_l_cuts(group, l, schema),
                     lambda c: metric(c.left.members, schema) + metric(c.right.members, schema))
    ws = Workspace(list(group), schema)
    cut = _fast_cut(ws, list(range(len(ws.records))), l)
    if cut is None:
        return None
    score, dim, left, right = cut
    return LCut(QIGroup(tuple(ws.records[j] for j in left)),
                QIGroup(tuple(ws.records[j] for j in right)),
                dim, len(left), Fraction(score, ws.denominator))


def _fast_cut(ws: Workspace, idx: list[int], l: int):
    m = len(idx)
    if m == 0:
        return None
    lc = l * max(Counter(ws.sensitive[j] for j in idx).values())
    best = ws.best_split([idx], lc, m - lc, prefer_large_k=True)
    if best is None:
        return None
    score, dim, k, (order,) = best
    return score, dim, order[:k], order[k:]


def tailor_partition(table: MicrodataTable, l: int,
                     metric: PenaltyMetric | None = None) -> Partition | None:
    """Tailor's final partition, or None when ``table`` is not l-eligible.

    Groups are processed first-in first-out; a cut enqueues its left part
    before its right part.
    """
    if l < 1:
        raise ValueError("l must be a positive integer")
    if not is_l_eligible(table, l):
        return None
    if not len(table):
        return Partition(())
    if metric is not None:
        return _tailor_generic(table, l, metric)
    ws = Workspace(table.records, table.schema)
    queue = deque([list(range(len(ws.records)))])
    done: list[list[int]] = []
    while queue:
        g = queue.popleft()
        cut = _fast_cut(ws, g, l)
        if cut is None:
            done.append(g)
        else:
            queue.append(cut[2])
            queue.append(cut[3])
    return Partition(tuple(QIGroup(tuple(ws.records[j] for j in g)) for g in done))


def _tailor_generic(table: MicrodataTable, l: int, metric: PenaltyMetric) -> Partition:
    queue = deque([QIGroup(table.records)])
    done = []
    while queue:
        g = queue.popleft()
        cut = canonical_l_cut(g, l, table.schema, metric)
        if cut is None:
            done.append(g)
        else:
            queue.extend((cut.left, cut.right))
    return Partition(tuple(done))


def tailor(table: MicrodataTable, l: int, fn: FunctionName = "mbr",
           metric: PenaltyMetric | None = None) -> tuple[Partition, AnonymizedTable] | None:
    p = tailor_partition(table, l, metric)
    if p is None:
        return None
    return p, anonymize(p, table.schema, fn)
