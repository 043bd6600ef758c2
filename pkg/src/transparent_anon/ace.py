"""Ace: randomized l-diverse generalization. Assign builds an l-diverse bucket
partition at random; Slice refines it deterministically by canonical
divisions."""
from __future__ import annotations

import itertools
from collections import Counter, defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, prod
from typing import Iterator, Mapping

from ._splitting import Workspace
from .model import (
    AttributeSchema,
    Bucket,
    BucketPartition,
    MicrodataTable,
    Record,
    SizeLimitError,
    is_l_eligible,
)
from .randomness import RngLike, as_rng
from .recoding import AnonymizedTable, FunctionName, anonymize, perimeter


class AssignError(RuntimeError):
    """Assign was run on a residue that is not l-eligible."""


@dataclass(frozen=True)
class AssignStep:
    iteration: int
    beta: int
    alpha: int
    signature: tuple[str, ...]
    remaining_counts: tuple[tuple[str, int], ...]


def _ordered_values(counts: Mapping[str, int]) -> list[tuple[str, int]]:
    # descending count, ties by ascending value
    return sorted(((v, c) for v, c in counts.items() if c > 0), key=lambda vc: (-vc[1], vc[0]))


def assign_params(counts: Mapping[str, int], l: int) -> tuple[int, int, tuple[str, ...]]:
    """(alpha, beta, signature) for one Assign iteration.

    alpha is the largest integer >= 1 with alpha <= n_beta,
    l*(n_1 - alpha) <= S - alpha*beta and l*n_{beta+1} <= S - alpha*beta;
    beta starts at l and grows until such an alpha exists.
    """
    vals = _ordered_values(counts)
    n = [c for _, c in vals]
    w = len(n)
    S = sum(n)
    if w == 0:
        raise AssignError("empty residue")
    for beta in range(l, w + 1):
        n_beta = n[beta - 1]
        n_next = n[beta] if beta < w else 0
        alpha = min(n_beta, (S - l * n_next) // beta)
        if beta > l:
            alpha = min(alpha, (S - l * n[0]) // (beta - l))
        elif S < l * n[0]:
            continue
        if alpha >= 1:
            return alpha, beta, tuple(v for v, _ in vals[:beta])
    raise AssignError(f"residue {dict(counts)} is not {l}-eligible")


def assign_skeleton(counts: Mapping[str, int], l: int) -> tuple[AssignStep, ...]:
    """The deterministic part of Assign: every iteration's (alpha, beta, signature)."""
    res = {v: c for v, c in counts.items() if c > 0}
    steps = []
    it = 0
    while res:
        alpha, beta, sig = assign_params(res, l)
        steps.append(AssignStep(it, beta, alpha, sig, tuple(sorted(res.items()))))
        for v in sig:
            res[v] -= alpha
            if not res[v]:
                del res[v]
        it += 1
    return tuple(steps)


def _residues(table: MicrodataTable) -> dict[str, list[Record]]:
    res: dict[str, list[Record]] = defaultdict(list)
    for r in table.records:  # already in id order
        res[r.sensitive].append(r)
    return res


def _check_eligible(table: MicrodataTable, l: int) -> None:
    if l < 1:
        raise ValueError("l must be a positive integer")
    if not is_l_eligible(table, l):
        raise AssignError(f"table is not {l}-eligible")


def assign(table: MicrodataTable, l: int, rng: RngLike = None) -> BucketPartition:
    """Random l-diverse bucket partition.

    Each signature value's alpha records are drawn by a partial Fisher-Yates
    shuffle over that value's residue in id order.
    """
    _check_eligible(table, l)
    rng = as_rng(rng)
    res = _residues(table)
    counts = {v: len(rs) for v, rs in res.items()}
    buckets = []
    for step in assign_skeleton(counts, l):
        cols = []
        for v in step.signature:
            pool = res[v]
            for i in range(step.alpha):
                j = rng.randrange(i, len(pool))
                pool[i], pool[j] = pool[j], pool[i]
            cols.append((v, tuple(pool[: step.alpha])))
            res[v] = sorted(pool[step.alpha:], key=lambda r: r.id)
        buckets.append(Bucket(tuple(cols)))
    return BucketPartition(tuple(buckets))


def assign_support_size(table: MicrodataTable, l: int) -> int:
    """Number of equally likely Assign executions."""
    _check_eligible(table, l)
    counts = Counter(r.sensitive for r in table)
    m = 1
    for step in assign_skeleton(counts, l):
        for v in step.signature:
            m *= comb(counts[v], step.alpha)
            counts[v] -= step.alpha
    return m


def enumerate_assign_executions(table: MicrodataTable, l: int,
                                limit: int | None = 200_000) -> Iterator[tuple[BucketPartition, Fraction]]:
    """Every Assign execution (ordered bucket sequence) with its probability."""
    m = assign_support_size(table, l)
    if limit is not None and m > limit:
        raise SizeLimitError(f"Assign has {m} executions, limit is {limit}")
    p = Fraction(1, m)
    res0 = _residues(table)
    steps = assign_skeleton({v: len(rs) for v, rs in res0.items()}, l)

    def rec(t: int, res: dict[str, tuple[Record, ...]], acc: list[Bucket]):
        if t == len(steps):
            yield BucketPartition(tuple(acc)), p
            return
        step = steps[t]
        choices = [itertools.combinations(res[v], step.alpha) for v in step.signature]
        for pick in itertools.product(*choices):
            nres = dict(res)
            for v, chosen in zip(step.signature, pick):
                taken = {r.id for r in chosen}
                nres[v] = tuple(r for r in res[v] if r.id not in taken)
            acc.append(Bucket(tuple(zip(step.signature, pick))))
            yield from rec(t + 1, nres, acc)
            acc.pop()

    yield from rec(0, {v: tuple(rs) for v, rs in res0.items()}, [])


def _bucket_key(u: BucketPartition) -> frozenset:
    return frozenset(u.buckets)


def assign_distribution(table: MicrodataTable, l: int, limit: int | None = 200_000):
    """Distribution of Assign's output as an unordered bucket partition:
    {frozenset of buckets: (BucketPartition, probability)}."""
    out: dict[frozenset, list] = {}
    for u, p in enumerate_assign_executions(table, l, limit):
        k = _bucket_key(u)
        if k in out:
            out[k][1] += p
        else:
            out[k] = [u, p]
    return {k: (u, p) for k, (u, p) in out.items()}


def assign_probability(table: MicrodataTable, l: int, u: BucketPartition) -> Fraction:
    """Exact probability that Assign(table, l) yields ``u`` (bucket order ignored)."""
    if not is_l_eligible(table, l) or u.records != table.records:
        return Fraction(0)
    counts = Counter(r.sensitive for r in table)
    steps = assign_skeleton(counts, l)
    want = Counter((s.signature, s.alpha) for s in steps)
    # a bucket's signature is stored sorted; compare as sets of values
    want_sets = Counter((frozenset(sig), a) for (sig, a) in want.elements())
    have = Counter((frozenset(b.signature), b.column_size) for b in u)
    if have != want_sets:
        return Fraction(0)
    labelings = prod(factorial(c) for c in want_sets.values())
    return Fraction(labelings, assign_support_size(table, l))


# -- divisions and Slice ------------------------------------------------------

@dataclass(frozen=True)
class Division:
    left: Bucket
    right: Bucket
    dimension: int
    left_column_size: int
    perimeter: Fraction


def enumerate_divisions(bucket: Bucket, schema: AttributeSchema) -> list[Division]:
    a = bucket.column_size
    out = []
    for dim in range(schema.d):
        cols = [(v, sorted(recs, key=lambda r: (r.qi[dim], r.id))) for v, recs in bucket.columns]
        for k in range(1, a):
            left = Bucket(tuple((v, tuple(rs[:k])) for v, rs in cols))
            right = Bucket(tuple((v, tuple(rs[k:])) for v, rs in cols))
            out.append(Division(left, right, dim, k,
                                perimeter(left.members, schema) + perimeter(right.members, schema)))
    return out


def _fast_division(ws: Workspace, cols: list[list[int]]):
    a = len(cols[0])
    best = ws.best_split(cols, 1, a - 1, prefer_large_k=False)
    if best is None:
        return None
    score, dim, k, scols = best
    return score, dim, [c[:k] for c in scols], [c[k:] for c in scols]


def canonical_division(bucket: Bucket, schema: AttributeSchema) -> Division | None:
    """Smallest-perimeter division; ties to the smallest dimension, then the
    smallest left bucket."""
    ws = Workspace(bucket.members, schema)
    pos = {r.id: j for j, r in enumerate(ws.records)}
    sig = bucket.signature
    cols = [[pos[r.id] for r in recs] for _, recs in bucket.columns]
    res = _fast_division(ws, cols)
    if res is None:
        return None
    score, dim, left, right = res
    return Division(_to_bucket(ws, sig, left), _to_bucket(ws, sig, right), dim,
                    len(left[0]), Fraction(score, ws.denominator))


def _to_bucket(ws: Workspace, sig, cols) -> Bucket:
    return Bucket(tuple((v, tuple(ws.records[j] for j in c)) for v, c in zip(sig, cols)))


def slice_partition(u: BucketPartition, schema: AttributeSchema) -> BucketPartition:
    """Refine ``u`` by canonical divisions until no bucket is divisible (FIFO)."""
    ws = Workspace(u.records, schema)
    pos = {r.id: j for j, r in enumerate(ws.records)}
    queue = deque((b.signature, [[pos[r.id] for r in recs] for _, recs in b.columns]) for b in u)
    done = []
    while queue:
        sig, cols = queue.popleft()
        res = _fast_division(ws, cols) if len(cols[0]) >= 2 else None
        if res is None:
            done.append(_to_bucket(ws, sig, cols))
        else:
            queue.append((sig, res[2]))
            queue.append((sig, res[3]))
    return BucketPartition(tuple(done))


slice = slice_partition  # noqa: A001 - the algorithm's name


def ace_partition(table: MicrodataTable, l: int, rng: RngLike = None) -> BucketPartition | None:
    if l < 1:
        raise ValueError("l must be a positive integer")
    if not is_l_eligible(table, l):
        return None
    if not len(table):
        return BucketPartition(())
    return slice_partition(assign(table, l, rng), table.schema)


def ace(table: MicrodataTable, l: int, rng: RngLike = None,
        fn: FunctionName = "mbr") -> AnonymizedTable | None:
    u = ace_partition(table, l, rng)
    if u is None:
        return None
    return anonymize(u.as_partition(), table.schema, fn)


def ace_partition_distribution(table: MicrodataTable, l: int, limit: int | None = 200_000):
    """Distribution of the sliced bucket partition:
    {frozenset of buckets: (BucketPartition, probability)}; None if ineligible."""
    if not is_l_eligible(table, l):
        return None
    if not len(table):
        return {frozenset(): (BucketPartition(()), Fraction(1))}
    out: dict[frozenset, list] = {}
    for u, p in assign_distribution(table, l, limit).values():
        s = slice_partition(u, table.schema)
        k = _bucket_key(s)
        if k in out:
            out[k][1] += p
        else:
            out[k] = [s, p]
    return {k: (s, p) for k, (s, p) in out.items()}


def ace_distribution(table: MicrodataTable, l: int, fn: FunctionName = "mbr",
                     limit: int | None = 200_000) -> dict[AnonymizedTable, Fraction] | None:
    """Exact output distribution of Ace over all executions."""
    dist = ace_partition_distribution(table, l, limit)
    if dist is None:
        return None
    out: dict[AnonymizedTable, Fraction] = defaultdict(Fraction)
    for s, p in dist.values():
        out[anonymize(s.as_partition(), table.schema, fn)] += p
    return dict(out)
