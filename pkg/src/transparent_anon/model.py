"""Core data model: schemas, records, tables, groups, buckets and the
structural predicates the algorithms are built on.

Everything here is immutable. Identifiers and sensitive codes are strings
ordered lexicographically; QI values are integers.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, prod
from typing import Iterable, Mapping, Sequence


class SchemaError(ValueError):
    """A table or group does not conform to its schema."""


class SizeLimitError(RuntimeError):
    """An exhaustive enumeration would exceed its configured limit."""


@dataclass(frozen=True, slots=True)
class QIAttribute:
    name: str
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise SchemaError(f"QI attribute {self.name!r}: lo {self.lo} > hi {self.hi}")

    @property
    def width(self) -> int:
        return self.hi - self.lo

    @property
    def size(self) -> int:
        """Number of integer points in the domain."""
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class AttributeSchema:
    qi: tuple[QIAttribute, ...]
    sensitive: str
    sensitive_values: tuple[str, ...]
    identifier: str = "id"

    def __post_init__(self):
        if not self.qi:
            raise SchemaError("at least one QI attribute is required")
        if not self.sensitive_values:
            raise SchemaError("sensitive value universe must be non-empty")
        ordered = tuple(sorted(set(self.sensitive_values)))
        object.__setattr__(self, "qi", tuple(self.qi))
        object.__setattr__(self, "sensitive_values", ordered)

    @property
    def d(self) -> int:
        return len(self.qi)

    @property
    def qi_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.qi)

    def qi_index(self, name: str) -> int:
        try:
            return self.qi_names.index(name)
        except ValueError:
            raise SchemaError(f"unknown QI attribute {name!r}") from None

    def with_universe(self, values: Iterable[str]) -> "AttributeSchema":
        return AttributeSchema(self.qi, self.sensitive, tuple(values), self.identifier)


@dataclass(frozen=True, slots=True, order=True)
class Record:
    id: str
    qi: tuple[int, ...]
    sensitive: str

    @property
    def key(self) -> tuple[str, tuple[int, ...]]:
        """The (identifier, QI) projection an external source would hold."""
        return (self.id, self.qi)


def _check_unique_ids(records: Sequence[Record], what: str) -> None:
    seen = set()
    for r in records:
        if r.id in seen:
            raise SchemaError(f"duplicate identifier {r.id!r} in {what}")
        seen.add(r.id)


@dataclass(frozen=True)
class MicrodataTable:
    schema: AttributeSchema
    records: tuple[Record, ...]

    def __post_init__(self):
        recs = tuple(sorted(self.records, key=lambda r: r.id))
        _check_unique_ids(recs, "table")
        d = self.schema.d
        universe = set(self.schema.sensitive_values)
        for r in recs:
            if len(r.qi) != d:
                raise SchemaError(f"record {r.id!r} has {len(r.qi)} QI values, expected {d}")
            for v, attr in zip(r.qi, self.schema.qi):
                if not attr.lo <= v <= attr.hi:
                    raise SchemaError(
                        f"record {r.id!r}: {attr.name}={v} outside [{attr.lo}, {attr.hi}]"
                    )
            if r.sensitive not in universe:
                raise SchemaError(f"record {r.id!r}: sensitive value {r.sensitive!r} not in universe")
        object.__setattr__(self, "records", recs)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def projection(self) -> "ExternalSource":
        return ExternalSource(self.schema, tuple(r.key for r in self.records))

    def replace_records(self, records: Iterable[Record]) -> "MicrodataTable":
        return MicrodataTable(self.schema, tuple(records))

    def by_id(self) -> dict[str, Record]:
        return {r.id: r for r in self.records}


@dataclass(frozen=True)
class QIGroup:
    members: tuple[Record, ...]

    def __post_init__(self):
        if not self.members:
            raise SchemaError("a QI-group must be non-empty")
        recs = tuple(sorted(self.members, key=lambda r: r.id))
        _check_unique_ids(recs, "QI-group")
        object.__setattr__(self, "members", recs)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def ids(self) -> frozenset[str]:
        return frozenset(r.id for r in self.members)

    def sensitive_counts(self) -> Counter:
        return Counter(r.sensitive for r in self.members)

    def max_multiplicity(self) -> int:
        return max(self.sensitive_counts().values())


@dataclass(frozen=True)
class Partition:
    groups: tuple[QIGroup, ...]

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        seen: set[str] = set()
        for g in self.groups:
            if seen & g.ids:
                raise SchemaError("partition groups overlap")
            seen |= g.ids

    def __len__(self) -> int:
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    @property
    def records(self) -> tuple[Record, ...]:
        return tuple(sorted((r for g in self.groups for r in g), key=lambda r: r.id))

    def covers(self, table: MicrodataTable) -> bool:
        """True iff the union of the groups is exactly ``table``."""
        return self.records == table.records

    def id_sets(self) -> frozenset[frozenset[str]]:
        return frozenset(g.ids for g in self.groups)


@dataclass(frozen=True)
class Bucket:
    """A group organised into equal-size columns, one per sensitive value."""

    columns: tuple[tuple[str, tuple[Record, ...]], ...]

    def __post_init__(self):
        if isinstance(self.columns, Mapping):
            cols = self.columns.items()
        else:
            cols = self.columns
        norm = tuple(
            sorted((v, tuple(sorted(recs, key=lambda r: r.id))) for v, recs in cols)
        )
        if not norm:
            raise SchemaError("a bucket needs at least one column")
        sizes = {len(recs) for _, recs in norm}
        if 0 in sizes or len(sizes) != 1:
            raise SchemaError("bucket columns must be non-empty and of equal size")
        if len({v for v, _ in norm}) != len(norm):
            raise SchemaError("duplicate column value in bucket")
        for v, recs in norm:
            for r in recs:
                if r.sensitive != v:
                    raise SchemaError(f"record {r.id!r} in column {v!r} has value {r.sensitive!r}")
        _check_unique_ids([r for _, recs in norm for r in recs], "bucket")
        object.__setattr__(self, "columns", norm)

    @classmethod
    def from_records(cls, records: Iterable[Record]) -> "Bucket":
        cols: dict[str, list[Record]] = {}
        for r in records:
            cols.setdefault(r.sensitive, []).append(r)
        return cls(tuple((v, tuple(rs)) for v, rs in cols.items()))

    @property
    def signature(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.columns)

    @property
    def column_size(self) -> int:
        return len(self.columns[0][1])

    @property
    def members(self) -> tuple[Record, ...]:
        return tuple(sorted((r for _, recs in self.columns for r in recs), key=lambda r: r.id))

    def __len__(self) -> int:
        return self.column_size * len(self.columns)

    def as_group(self) -> QIGroup:
        return QIGroup(self.members)

    def is_divisible(self) -> bool:
        return self.column_size >= 2


@dataclass(frozen=True)
class BucketPartition:
    buckets: tuple[Bucket, ...]

    def __post_init__(self):
        object.__setattr__(self, "buckets", tuple(self.buckets))
        Partition(tuple(b.as_group() for b in self.buckets))  # disjointness check

    def __len__(self) -> int:
        return len(self.buckets)

    def __iter__(self):
        return iter(self.buckets)

    def as_partition(self) -> Partition:
        return Partition(tuple(b.as_group() for b in self.buckets))

    @property
    def records(self) -> tuple[Record, ...]:
        return self.as_partition().records


@dataclass(frozen=True)
class ExternalSource:
    """Identifier and QI values of a superset of the published individuals."""

    schema: AttributeSchema
    entries: tuple[tuple[str, tuple[int, ...]], ...] = field(default=())

    def __post_init__(self):
        ents = tuple(sorted((str(i), tuple(q)) for i, q in self.entries))
        ids = [i for i, _ in ents]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate identifier in external source")
        object.__setattr__(self, "entries", ents)

    def __len__(self) -> int:
        return len(self.entries)

    def qi_of(self) -> dict[str, tuple[int, ...]]:
        return dict(self.entries)


# -- predicates ---------------------------------------------------------------

def _multiplicity(records: Iterable[Record]) -> tuple[int, int]:
    counts = Counter(r.sensitive for r in records)
    return (max(counts.values()) if counts else 0), sum(counts.values())


def is_l_diverse(group: QIGroup | Iterable[Record], l: int) -> bool:
    """At most |G|/l records of ``group`` share a sensitive value."""
    if l < 1:
        raise ValueError("l must be a positive integer")
    c, size = _multiplicity(group)
    return l * c <= size


def is_l_eligible(table: MicrodataTable | Iterable[Record], l: int) -> bool:
    return is_l_diverse(table.records if isinstance(table, MicrodataTable) else table, l)


def are_isomorphic(g1: QIGroup, g2: QIGroup) -> bool:
    if sorted(r.key for r in g1) != sorted(r.key for r in g2):
        return False
    return g1.sensitive_counts() == g2.sensitive_counts()


def are_isomorphic_partitions(p1: Partition, p2: Partition) -> bool:
    if len(p1) != len(p2):
        return False
    # groups are id-disjoint, so the only candidate partner shares the id set
    by_ids = {g.ids: g for g in p2}
    for g in p1:
        other = by_ids.get(g.ids)
        if other is None or not are_isomorphic(g, other):
            return False
    return True


def are_symmetric(b1: Bucket, b2: Bucket) -> bool:
    if b1.signature != b2.signature:
        return False
    cols1 = sorted(tuple(r.key for r in recs) for _, recs in b1.columns)
    cols2 = sorted(tuple(r.key for r in recs) for _, recs in b2.columns)
    return cols1 == cols2


def are_symmetric_partitions(u1: BucketPartition, u2: BucketPartition) -> bool:
    if len(u1) != len(u2):
        return False
    by_ids = {frozenset(r.id for r in b.members): b for b in u2}
    for b in u1:
        other = by_ids.get(frozenset(r.id for r in b.members))
        if other is None or not are_symmetric(b, other):
            return False
    return True


def multinomial(counts: Iterable[int]) -> int:
    counts = list(counts)
    return factorial(sum(counts)) // prod(factorial(c) for c in counts)


def count_isomorphic_groups(group: QIGroup) -> int:
    """Distinct ways to hand ``group``'s sensitive multiset to its members."""
    return multinomial(group.sensitive_counts().values())


def count_symmetric_buckets(bucket: Bucket) -> int:
    return factorial(len(bucket.columns))


def distinct_assignments(values: Sequence[str]) -> Iterable[tuple[str, ...]]:
    """All distinct orderings of a multiset, in lexicographic order."""
    items = sorted(values)
    n = len(items)
    if n == 0:
        yield ()
        return
    counts = Counter(items)
    keys = sorted(counts)
    out: list[str] = []

    def rec():
        if len(out) == n:
            yield tuple(out)
            return
        for k in keys:
            if counts[k]:
                counts[k] -= 1
                out.append(k)
                yield from rec()
                out.pop()
                counts[k] += 1

    yield from rec()


def diversity_ratio(group: QIGroup) -> Fraction:
    """|G| / max multiplicity: the largest l for which ``group`` is l-diverse."""
    return Fraction(len(group), group.max_multiplicity())


def symmetric_rewrites(bucket: Bucket) -> Iterable[Bucket]:
    """Every bucket symmetric to ``bucket`` (column labels permuted)."""
    sig = bucket.signature
    cols = [recs for _, recs in bucket.columns]
    for perm in itertools.permutations(sig):
        yield Bucket(
            tuple(
                (v, tuple(Record(r.id, r.qi, v) for r in recs))
                for v, recs in zip(perm, cols)
            )
        )
