"""Reference algorithms that are not transparent: optimal global-recoding
generalization, masking, and a median-split baseline; plus minimality checks."""
from __future__ import annotations

import enum
import itertools
from collections import Counter, defaultdict, deque
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from ._decode import decodings, published_groups
from ._splitting import Workspace
from .model import (
    MicrodataTable,
    Partition,
    QIGroup,
    Record,
    SizeLimitError,
    distinct_assignments,
    is_l_diverse,
    is_l_eligible,
)
from .randomness import RngLike, as_rng
from .recoding import (
    AnonymizedTable,
    Box,
    FunctionName,
    PerimeterScale,
    anonymize,
    discernability,
    mbr,
)

DEFAULT_PARTITION_LIMIT = 12


class RecodingScheme(enum.Enum):
    GLOBAL = "global"
    LOCAL = "local"


class InfeasibleError(ValueError):
    """No partition with the requested properties exists."""


class UnmaskableError(RuntimeError):
    """Some group needs masking but no group is available to copy from."""


class ConsistencyError(ValueError):
    """A published table cannot have been produced from the given source."""


# -- global recoding ----------------------------------------------------------

def boxes_intersect(a: Box, b: Box) -> bool:
    return all(alo <= bhi and blo <= ahi for (alo, ahi), (blo, bhi) in zip(a, b))


def conforms(groups: Sequence[Sequence[Record]], scheme: RecodingScheme) -> bool:
    """Does the grouping obey ``scheme``?

    Global recoding: records with identical QI values share a group and group
    MBRs are pairwise disjoint.
    """
    if scheme is RecodingScheme.LOCAL:
        return True
    owner: dict[tuple[int, ...], int] = {}
    for gi, g in enumerate(groups):
        for r in g:
            if owner.setdefault(r.qi, gi) != gi:
                return False
    boxes = [mbr(g) for g in groups]
    return not any(boxes_intersect(a, b) for a, b in itertools.combinations(boxes, 2))


def _canonical_form(groups: Iterable[Iterable[Record]]) -> tuple[tuple[str, ...], ...]:
    return tuple(sorted(tuple(sorted(r.id for r in g)) for g in groups))


def _check_limit(table: MicrodataTable, limit: int | None) -> None:
    if limit is not None and len(table) > limit:
        raise SizeLimitError(f"exhaustive partition search is limited to {limit} records, got {len(table)}")


def enumerate_global_partitions(table: MicrodataTable, l: int,
                                limit: int | None = DEFAULT_PARTITION_LIMIT) -> Iterator[Partition]:
    """All l-diverse global-recoding partitions, in canonical-form order."""
    _check_limit(table, limit)
    if not is_l_eligible(table, l):
        return
    atoms_by_qi: dict[tuple[int, ...], list[Record]] = defaultdict(list)
    for r in table:
        atoms_by_qi[r.qi].append(r)
    atoms = [tuple(atoms_by_qi[q]) for q in sorted(atoms_by_qi)]
    k = len(atoms)
    # l-diverse unions of atoms, by bitmask
    valid: dict[int, tuple[tuple[Record, ...], Box]] = {}
    for mask in range(1, 1 << k):
        recs = tuple(r for i in range(k) if mask >> i & 1 for r in atoms[i])
        if is_l_diverse(recs, l):
            valid[mask] = (recs, mbr(recs))
    by_low: dict[int, list[int]] = defaultdict(list)
    for mask in valid:
        by_low[(mask & -mask).bit_length() - 1].append(mask)
    full = (1 << k) - 1
    found = []

    def rec(free: int, chosen: list[int]):
        if not free:
            found.append([valid[m][0] for m in chosen])
            return
        low = (free & -free).bit_length() - 1
        for m in by_low[low]:
            if m & ~free:
                continue
            box = valid[m][1]
            if any(boxes_intersect(box, valid[c][1]) for c in chosen):
                continue
            chosen.append(m)
            rec(free & ~m, chosen)
            chosen.pop()

    if k == 0:
        found.append([])
    else:
        rec(full, [])
    for groups in sorted(found, key=_canonical_form):
        yield Partition(tuple(QIGroup(g) for g in groups))


def _set_partitions(items: list) -> Iterator[list[list]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in _set_partitions(rest):
        yield [[first]] + p
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]


def naive_global_partitions(table: MicrodataTable, l: int) -> list[Partition]:
    """Unpruned filter over every set partition; a cross-check for small tables."""
    out = []
    for p in _set_partitions(list(table.records)):
        if all(is_l_diverse(g, l) for g in p) and conforms(p, RecodingScheme.GLOBAL):
            out.append(p)
    return [Partition(tuple(QIGroup(tuple(g)) for g in p)) for p in sorted(out, key=_canonical_form)]


def opt_gen_partition(table: MicrodataTable, l: int,
                      limit: int | None = DEFAULT_PARTITION_LIMIT) -> Partition | None:
    """Minimum-discernability l-diverse global-recoding partition; ties go to
    the smallest canonical form (sorted list of sorted id lists)."""
    best = None
    for p in enumerate_global_partitions(table, l, limit):
        key = discernability(p)
        if best is None or key < best[0]:
            best = (key, p)  # enumeration is in canonical order, so first wins ties
    return None if best is None else best[1]


def opt_gen(table: MicrodataTable, l: int, fn: FunctionName = "mbr",
            limit: int | None = DEFAULT_PARTITION_LIMIT) -> AnonymizedTable | None:
    p = opt_gen_partition(table, l, limit)
    return None if p is None else anonymize(p, table.schema, fn)


# -- minimality ---------------------------------------------------------------

def recover_partitions(source: MicrodataTable, published: AnonymizedTable) -> Iterator[Partition]:
    """Every grouping of ``source`` that publishes exactly as ``published``."""
    groups = published_groups(published)
    recs = source.records
    if sum(g.size for g in groups) != len(recs):
        return
    entries = [r.key for r in recs]
    for dec in decodings(groups, entries):
        ok = all(Counter(recs[j].sensitive for j in idx) == Counter(g.sensitive)
                 for idx, g in zip(dec, groups))
        if ok:
            yield Partition(tuple(QIGroup(tuple(recs[j] for j in idx)) for idx in dec))


def _has_valid_child(p: Partition, l: int, scheme: RecodingScheme) -> bool:
    groups = [list(g) for g in p]
    for gi, g in enumerate(groups):
        if len(g) < 2:
            continue
        rest = groups[:gi] + groups[gi + 1:]
        first, others = g[0], g[1:]
        # each bipartition once: the part holding ``first`` picks a subset of the others
        for r in range(len(others)):
            for extra in itertools.combinations(others, r):
                a = [first, *extra]
                ids = {x.id for x in a}
                b = [x for x in g if x.id not in ids]
                if is_l_diverse(a, l) and is_l_diverse(b, l) and conforms(rest + [a, b], scheme):
                    return True
    return False


def is_minimal_partition(p: Partition, l: int, scheme: RecodingScheme) -> bool:
    if not all(is_l_diverse(g, l) for g in p) or not conforms(list(p), scheme):
        return False
    return not _has_valid_child(p, l, scheme)


def is_minimal_generalization(source: MicrodataTable, published: AnonymizedTable, l: int,
                              scheme: RecodingScheme = RecodingScheme.GLOBAL) -> bool:
    """True iff ``published`` is an l-diverse generalization of ``source`` under
    ``scheme`` that no child partition (one group split in two) improves on."""
    found = False
    for p in recover_partitions(source, published):
        found = True
        if is_minimal_partition(p, l, scheme):
            return True
    if not found:
        raise ConsistencyError("published table is not a generalization of the source")
    return False


# -- k-anonymous partitioning -------------------------------------------------

def k_anon_partition(table: MicrodataTable, k: int, uniform: bool = False) -> Partition:
    """Greedy recursive split with both halves of size >= k, chosen like an
    l-cut (smallest perimeter, then smallest dimension, then largest left part).

    With ``uniform`` the left part's size must be a multiple of k, so every
    group has exactly k records except at most one of size < 2k.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if len(table) < k:
        raise InfeasibleError(f"a table of {len(table)} records has no {k}-anonymous partition")
    ws = Workspace(table.records, table.schema)
    queue = deque([list(range(len(ws.records)))])
    done = []
    while queue:
        g = queue.popleft()
        best = (ws.best_split([g], k, len(g) - k, prefer_large_k=True, step=k if uniform else 1)
                if len(g) >= 2 * k else None)
        if best is None:
            done.append(g)
        else:
            _, _, cut, (order,) = best
            queue.append(order[:cut])
            queue.append(order[cut:])
    return Partition(tuple(QIGroup(tuple(ws.records[j] for j in g)) for g in done))


# -- masking ------------------------------------------------------------------

Partitioner = Callable[[MicrodataTable, int], Partition]


def needs_mask(values: Iterable[str], l: int, V: Iterable[str]) -> bool:
    """Some value of V appears more than |G|/l times."""
    vals = list(values)
    counts = Counter(vals)
    return any(l * counts[v] > len(vals) for v in set(V))


def apportion(counts: Counter | dict, size: int) -> Counter:
    """Scale a value distribution to ``size`` records: floors of the exact
    quotas, remaining records to the largest remainders (ties by value)."""
    total = sum(counts.values())
    quotas = {v: Fraction(size * c, total) for v, c in counts.items() if c}
    out = Counter({v: int(q) for v, q in quotas.items()})
    left = size - sum(out.values())
    for v in sorted(quotas, key=lambda v: (-(quotas[v] - int(quotas[v])), v))[:left]:
        out[v] += 1
    return +out


def _mask_plan(table: MicrodataTable, k: int, l: int, V: Iterable[str],
               partitioner: Partitioner | Partition | None):
    if not (k >= l >= 1):
        raise ValueError("mask requires k >= l >= 1")
    V = set(V)
    if isinstance(partitioner, Partition):
        p = partitioner
    else:
        p = (partitioner or k_anon_partition)(table, k)
    if not p.covers(table) or any(len(g) < k for g in p):
        raise InfeasibleError("partitioner did not return a k-anonymous partition of the table")
    p1 = [g for g in p if needs_mask((r.sensitive for r in g), l, V)]
    p2 = [g for g in p if not needs_mask((r.sensitive for r in g), l, V)]
    if p1 and not p2:
        raise UnmaskableError("every group violates the masking condition; nothing to copy from")
    options = []
    sources = [tuple(sorted(h.sensitive_counts().items())) for h in p2]
    copies: dict = {}
    for g in p1:
        opts = []
        for src in sources:
            key = (src, len(g))
            if key not in copies:
                c = apportion(dict(src), len(g))
                copies[key] = None if needs_mask(c.elements(), l, V) else c
            if copies[key] is not None:
                opts.append(copies[key])
        if not opts:
            raise UnmaskableError(f"no group's distribution can be copied onto a group of {len(g)}")
        options.append(opts)
    return p, p1, p2, options


def mask(table: MicrodataTable, k: int, l: int, V: Iterable[str], rng: RngLike = None,
         partitioner: Partitioner | Partition | None = None,
         fn: FunctionName = "mbr") -> AnonymizedTable:
    """Groups where a value of V exceeds |G|/l copy the sensitive distribution
    of a uniformly chosen unaffected group; the values are then dealt to the
    members uniformly at random."""
    rng = as_rng(rng)
    p, p1, _, options = _mask_plan(table, k, l, V, partitioner)
    masked = {id(g): g for g in p}
    for g, opts in zip(p1, options):
        counts = rng.choice(opts)
        vals = sorted(counts.elements())
        rng.shuffle(vals)
        masked[id(g)] = QIGroup(tuple(Record(r.id, r.qi, v) for r, v in zip(g, vals)))
    return anonymize(Partition(tuple(masked[id(g)] for g in p)), table.schema, fn)


def mask_distribution(table: MicrodataTable, k: int, l: int, V: Iterable[str],
                      partitioner: Partitioner | Partition | None = None,
                      fn: FunctionName = "mbr") -> dict[AnonymizedTable, Fraction]:
    """Exact output distribution of :func:`mask`. The published table depends
    only on each masked group's new value multiset."""
    p, p1, _, options = _mask_plan(table, k, l, V, partitioner)
    out: dict[AnonymizedTable, Fraction] = defaultdict(Fraction)
    fixed = [g for g in p if g not in p1]
    for pick in itertools.product(*options):
        prob = Fraction(1)
        groups = list(fixed)
        for g, opts, counts in zip(p1, options, pick):
            prob *= Fraction(1, len(opts))
            vals = sorted(counts.elements())
            groups.append(QIGroup(tuple(Record(r.id, r.qi, v) for r, v in zip(g, vals))))
        out[anonymize(Partition(tuple(groups)), table.schema, fn)] += prob
    return dict(out)


class MaskAttackResult:
    def __init__(self, instances: list[tuple[Record, ...]]):
        self.instances = instances
        counts: Counter = Counter()
        for inst in instances:
            for r in inst:
                counts[(r.id, r.sensitive)] += 1
        n = len(instances)
        self.posteriors: dict[tuple[str, str], Fraction] = {
            key: Fraction(c, n) for key, c in sorted(counts.items())
        }

    @property
    def count(self) -> int:
        return len(self.instances)

    def posterior(self, individual: str, value: str) -> Fraction:
        return self.posteriors.get((individual, value), Fraction(0))


def mask_consistency_attack(published: AnonymizedTable, external, k: int, l: int,
                            V: Iterable[str], universe: Iterable[str] | None = None,
                            max_group: int = 8) -> MaskAttackResult:
    """Instances from which some masking run could publish ``published``,
    counted with equal weight.

    A published group was either left alone (its values are the originals and
    satisfy the condition) or masked (its originals violate the condition and
    its published multiset is the copy of some unmasked group's distribution).
    """
    V = set(V)
    groups = published_groups(published)
    if any(g.size > max_group for g in groups):
        raise SizeLimitError(f"group larger than {max_group} in masking attack")
    universe = sorted(set(universe) if universe is not None
                      else {v for g in groups for v in g.sensitive} | V)
    entries = list(external.entries)
    instances: set[tuple[Record, ...]] = set()
    if any(g.size < k for g in groups):
        return MaskAttackResult([])
    for dec in decodings(groups, entries):
        members = [[entries[j] for j in sorted(idx, key=lambda j: entries[j][0])] for idx in dec]
        for masked in itertools.product((False, True), repeat=len(groups)):
            kept = [g for g, m in zip(groups, masked) if not m]
            if any(masked) and not kept:
                continue
            if any(needs_mask(g.sensitive, l, V) for g in kept):
                continue
            per_group = []
            feasible = True
            for g, m, mem in zip(groups, masked, members):
                if not m:
                    per_group.append(list(distinct_assignments(g.sensitive)))
                    continue
                target = Counter(g.sensitive)
                if not any(apportion(Counter(h.sensitive), g.size) == target for h in kept):
                    feasible = False
                    break
                per_group.append([vals for vals in itertools.product(universe, repeat=g.size)
                                  if needs_mask(vals, l, V)])
            if not feasible:
                continue
            for combo in itertools.product(*per_group):
                recs = tuple(sorted(Record(i, q, v)
                                    for mem, vals in zip(members, combo)
                                    for (i, q), v in zip(mem, vals)))
                instances.add(recs)
    return MaskAttackResult(sorted(instances))


# -- median-split baseline ----------------------------------------------------

def mondrian_partition(table: MicrodataTable, l: int) -> Partition | None:
    """Recursive positional median split. Dimensions are tried from widest to
    narrowest normalized extent; a split is kept only if both halves are
    l-diverse. Deterministic."""
    if l < 1:
        raise ValueError("l must be a positive integer")
    if not is_l_eligible(table, l):
        return None
    if not len(table):
        return Partition(())
    scale = PerimeterScale(table.schema)
    queue = deque([list(table.records)])
    done = []
    while queue:
        g = queue.popleft()
        box = mbr(g)
        dims = sorted((d for d in range(table.schema.d) if box[d][1] > box[d][0]),
                      key=lambda d: (-(box[d][1] - box[d][0]) * scale.weights[d], d))
        split = None
        if len(g) >= 2 * l:
            for d in dims:
                s = sorted(g, key=lambda r: (r.qi[d], r.id))
                half = len(s) // 2
                if is_l_diverse(s[:half], l) and is_l_diverse(s[half:], l):
                    split = (s[:half], s[half:])
                    break
        if split is None:
            done.append(g)
        else:
            queue.extend(split)
    return Partition(tuple(QIGroup(tuple(g)) for g in done))


def mondrian_lite(table: MicrodataTable, l: int, fn: FunctionName = "mbr") -> AnonymizedTable | None:
    p = mondrian_partition(table, l)
    return None if p is None else anonymize(p, table.schema, fn)
