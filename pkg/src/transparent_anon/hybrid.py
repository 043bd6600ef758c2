"""Hybrid: Tailor's partition, with Ace run independently inside every group."""
from __future__ import annotations

import itertools
from collections import defaultdict
from fractions import Fraction

from .ace import ace_partition, ace_partition_distribution
from .model import BucketPartition, MicrodataTable, Partition, SizeLimitError
from .randomness import RngLike, derive_seed, master_seed
from .recoding import AnonymizedTable, FunctionName, anonymize
from .tailor import tailor_partition


def _subtable(table: MicrodataTable, group) -> MicrodataTable:
    return MicrodataTable(table.schema, group.members)


def hybrid_partition(table: MicrodataTable, l: int, rng: RngLike = None) -> BucketPartition | None:
    """Group i of Tailor's partition is refined with sub-seed derive_seed(master, i)."""
    p = tailor_partition(table, l)
    if p is None:
        return None
    master = master_seed(rng)
    buckets = []
    for i, g in enumerate(p):
        sub = ace_partition(_subtable(table, g), l, derive_seed(master, i))
        buckets.extend(sub.buckets)
    return BucketPartition(tuple(buckets))


def hybrid(table: MicrodataTable, l: int, rng: RngLike = None,
           fn: FunctionName = "mbr") -> AnonymizedTable | None:
    u = hybrid_partition(table, l, rng)
    if u is None:
        return None
    return anonymize(u.as_partition(), table.schema, fn)


def hybrid_group_distributions(table: MicrodataTable, l: int, limit: int | None = 200_000):
    """Tailor's partition and, per group, Ace's exact sliced-partition distribution."""
    p = tailor_partition(table, l)
    if p is None:
        return None
    return p, [ace_partition_distribution(_subtable(table, g), l, limit) for g in p]


def hybrid_distribution(table: MicrodataTable, l: int, fn: FunctionName = "mbr",
                        limit: int | None = 200_000) -> dict[AnonymizedTable, Fraction] | None:
    """Exact output distribution: the product of independent per-group Ace runs."""
    res = hybrid_group_distributions(table, l, limit)
    if res is None:
        return None
    _, per_group = res
    combos = 1
    for dist in per_group:
        combos *= len(dist)
    if limit is not None and combos > limit:
        raise SizeLimitError(f"hybrid has {combos} outcome combinations, limit is {limit}")
    out: dict[AnonymizedTable, Fraction] = defaultdict(Fraction)
    for pick in itertools.product(*(list(d.values()) for d in per_group)):
        prob = Fraction(1)
        groups = []
        for s, q in pick:
            prob *= q
            groups.extend(s.as_partition().groups)
        out[anonymize(Partition(tuple(groups)), table.schema, fn)] += prob
    return dict(out)
