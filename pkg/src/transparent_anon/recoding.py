"""Anonymization functions (MBR generalization, anatomy) and information-loss
metrics."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .model import AttributeSchema, MicrodataTable, Partition, QIGroup, Record, SchemaError

Interval = tuple[int, int]
Box = tuple[Interval, ...]


@dataclass(frozen=True, slots=True, order=True)
class GeneralizedRow:
    intervals: Box
    sensitive: str


@dataclass(frozen=True, order=True)
class GeneralizedGroup:
    intervals: Box
    sensitive: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sensitive", tuple(sorted(self.sensitive)))
        for lo, hi in self.intervals:
            if lo > hi:
                raise SchemaError(f"empty interval [{lo}, {hi}]")

    def __len__(self) -> int:
        return len(self.sensitive)

    def rows(self) -> tuple[GeneralizedRow, ...]:
        return tuple(GeneralizedRow(self.intervals, s) for s in self.sensitive)

    def contains(self, qi: Sequence[int]) -> bool:
        return all(lo <= v <= hi for v, (lo, hi) in zip(qi, self.intervals))


@dataclass(frozen=True, order=True)
class AnatomyGroup:
    qi: tuple[tuple[int, ...], ...]
    sensitive: tuple[str, ...]

    def __post_init__(self):
        if len(self.qi) != len(self.sensitive):
            raise SchemaError("anatomy group: QI and sensitive row counts differ")
        object.__setattr__(self, "qi", tuple(sorted(tuple(q) for q in self.qi)))
        object.__setattr__(self, "sensitive", tuple(sorted(self.sensitive)))

    def __len__(self) -> int:
        return len(self.sensitive)


class Generalization:
    """Generalized rows, kept grouped.

    ``has_boundaries`` is False for tables loaded without group ids; those are
    grouped by identical interval vectors, and equality against them ignores
    group boundaries.
    """

    kind = "generalization"

    def __init__(self, schema: AttributeSchema, groups: Iterable[GeneralizedGroup],
                 has_boundaries: bool = True):
        self.schema = schema
        self.groups = tuple(sorted(groups))
        self.has_boundaries = has_boundaries

    @classmethod
    def from_rows(cls, schema: AttributeSchema, rows: Iterable[GeneralizedRow]) -> "Generalization":
        by_box: dict[Box, list[str]] = defaultdict(list)
        for r in rows:
            by_box[r.intervals].append(r.sensitive)
        return cls(schema, (GeneralizedGroup(b, tuple(s)) for b, s in by_box.items()),
                   has_boundaries=False)

    def rows(self) -> tuple[GeneralizedRow, ...]:
        return tuple(r for g in self.groups for r in g.rows())

    def merged(self) -> tuple[GeneralizedGroup, ...]:
        by_box: dict[Box, list[str]] = defaultdict(list)
        for g in self.groups:
            by_box[g.intervals].extend(g.sensitive)
        return tuple(sorted(GeneralizedGroup(b, tuple(s)) for b, s in by_box.items()))

    def key(self):
        return ("generalization", self.groups if self.has_boundaries else self.merged())

    def __len__(self) -> int:
        return sum(len(g) for g in self.groups)

    def __eq__(self, other):
        if not isinstance(other, Generalization):
            return NotImplemented
        if self.has_boundaries and other.has_boundaries:
            return self.groups == other.groups
        return self.merged() == other.merged()

    def __hash__(self):
        return hash(self.merged())

    def __repr__(self):
        return f"Generalization({len(self.groups)} groups, {len(self)} rows)"


class Anatomy:
    """A QI table and a sensitive table linked by group id."""

    kind = "anatomy"
    has_boundaries = True

    def __init__(self, schema: AttributeSchema, groups: Iterable[AnatomyGroup]):
        self.schema = schema
        self.groups = tuple(sorted(groups))

    def qi_rows(self) -> list[tuple[tuple[int, ...], int]]:
        return [(q, gid) for gid, g in enumerate(self.groups, 1) for q in g.qi]

    def sensitive_rows(self) -> list[tuple[int, str]]:
        return [(gid, s) for gid, g in enumerate(self.groups, 1) for s in g.sensitive]

    def key(self):
        return ("anatomy", self.groups)

    def __len__(self) -> int:
        return sum(len(g) for g in self.groups)

    def __eq__(self, other):
        if not isinstance(other, Anatomy):
            return NotImplemented
        return self.groups == other.groups

    def __hash__(self):
        return hash(self.groups)

    def __repr__(self):
        return f"Anatomy({len(self.groups)} groups, {len(self)} rows)"


AnonymizedTable = Generalization | Anatomy


def mbr(records: Iterable[Record]) -> Box:
    """Tightest per-attribute intervals around ``records``' QI values."""
    it = iter(records)
    first = next(it, None)
    if first is None:
        raise ValueError("MBR of an empty group")
    lo = list(first.qi)
    hi = list(first.qi)
    for r in it:
        for i, v in enumerate(r.qi):
            if v < lo[i]:
                lo[i] = v
            elif v > hi[i]:
                hi[i] = v
    return tuple(zip(lo, hi))


def mbr_group(group: QIGroup | Sequence[Record]) -> GeneralizedGroup:
    members = list(group)
    if not members:
        raise SchemaError("cannot generalize an empty group")
    return GeneralizedGroup(mbr(members), tuple(r.sensitive for r in members))


def mbr_generalize(group: QIGroup | Sequence[Record]) -> tuple[GeneralizedRow, ...]:
    return mbr_group(group).rows()


def anatomy_group(group: QIGroup | Sequence[Record]) -> AnatomyGroup:
    members = list(group)
    if not members:
        raise SchemaError("cannot anatomize an empty group")
    return AnatomyGroup(tuple(r.qi for r in members), tuple(r.sensitive for r in members))


def anatomize(group: QIGroup | Sequence[Record], gid: int):
    """QI rows tagged ``gid`` and the (gid, value) sensitive rows."""
    g = anatomy_group(group)
    return [(q, gid) for q in g.qi], [(gid, s) for s in g.sensitive]


FunctionName = Literal["mbr", "anatomy"]


def anonymize(partition: Partition | Iterable[Sequence[Record]], schema: AttributeSchema,
              fn: FunctionName = "mbr") -> AnonymizedTable:
    groups = list(partition)
    if fn == "mbr":
        return Generalization(schema, (mbr_group(g) for g in groups))
    if fn == "anatomy":
        return Anatomy(schema, (anatomy_group(g) for g in groups))
    raise ValueError(f"unknown anonymization function {fn!r}")


# -- penalty metrics ------------------------------------------------------------

class PerimeterScale:
    """Integer weights so that perimeters compare exactly without fractions.

    scaled(G) = |G| * sum_i extent_i * (L / width_i), with L the lcm of the
    non-zero domain widths; perimeter = scaled / L.
    """

    def __init__(self, schema: AttributeSchema):
        widths = [a.width for a in schema.qi]
        nz = [w for w in widths if w > 0]
        self.denominator = lcm(*nz) if nz else 1
        self.weights = tuple(self.denominator // w if w > 0 else 0 for w in widths)
        self._names = schema.qi_names

    def extent_score(self, box: Box) -> int:
        total = 0
        for (lo, hi), w, name in zip(box, self.weights, self._names):
            if hi > lo:
                if w == 0:
                    raise SchemaError(f"attribute {name!r} has a degenerate domain but non-zero extent")
                total += (hi - lo) * w
        return total

    def scaled(self, records: Sequence[Record]) -> int:
        return len(records) * self.extent_score(mbr(records))


def perimeter(group: QIGroup | Sequence[Record], schema: AttributeSchema) -> Fraction:
    members = list(group)
    if not members:
        return Fraction(0)
    scale = PerimeterScale(schema)
    return Fraction(scale.scaled(members), scale.denominator)


def discernability(partition: Partition | Iterable[Sequence[Record]]) -> int:
    return sum(len(g) ** 2 for g in partition)


PenaltyMetric = Callable[[Sequence[Record], AttributeSchema], Fraction]


def discernability_penalty(group: Sequence[Record], schema: AttributeSchema) -> Fraction:
    return Fraction(len(group) ** 2)


def total_perimeter(groups: Iterable[Sequence[Record]], schema: AttributeSchema) -> Fraction:
    return sum((perimeter(g, schema) for g in groups), Fraction(0))


def correlation_ratio(table: MicrodataTable, qi_attr: str, grouping_attr: str) -> float:
    """Correlation ratio eta of a numeric QI attribute against a grouping attribute."""
    if not len(table):
        raise ValueError("correlation ratio of an empty table")
    schema = table.schema
    i = schema.qi_index(qi_attr)
    y = np.array([r.qi[i] for r in table], dtype=float)
    if grouping_attr == schema.sensitive:
        labels = [r.sensitive for r in table]
    else:
        j = schema.qi_index(grouping_attr)
        labels = [r.qi[j] for r in table]
    _, codes = np.unique(np.array(labels, dtype=object).astype(str), return_inverse=True)
    total = float(((y - y.mean()) ** 2).sum())
    if total == 0.0:
        return 0.0
    sums = np.bincount(codes, weights=y)
    counts = np.bincount(codes)
    means = sums / counts
    between = float((counts * (means - y.mean()) ** 2).sum())
    return float(np.sqrt(min(1.0, between / total)))
