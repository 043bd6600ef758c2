"""Shared generators and brute-force oracles for the test suite."""
from __future__ import annotations

import itertools
import random
from collections import Counter
from fractions import Fraction

from hypothesis import strategies as st

from transparent_anon.model import AttributeSchema, MicrodataTable, QIAttribute, Record, is_l_eligible

VALUES = ("a", "b", "c", "d", "e")


def make_schema(widths, values=VALUES) -> AttributeSchema:
    qi = tuple(QIAttribute(f"q{i}", 0, w) for i, w in enumerate(widths))
    return AttributeSchema(qi, "s", tuple(values))


def make_table(schema: AttributeSchema, rows) -> MicrodataTable:
    """rows: (qi tuple, value) pairs; ids are p0, p1, ... (zero padded)."""
    return MicrodataTable(schema, tuple(Record(f"p{i:02d}", tuple(q), v) for i, (q, v) in enumerate(rows)))


def eligible_counts(counts: list[int], l: int) -> list[int]:
    """Trim the largest counts until l * max <= total."""
    counts = sorted(counts, reverse=True)
    while counts and l * counts[0] > sum(counts):
        counts[0] -= 1
        counts.sort(reverse=True)
    return sorted((c for c in counts if c), reverse=True)


def random_table(rng: random.Random, n_max: int = 8, n_values: int = 5, l: int = 2,
                 d: int | None = None, width: int = 6, eligible: bool = True) -> MicrodataTable:
    d = d or rng.randint(1, 2)
    widths = [rng.randint(0, width) for _ in range(d)]
    schema = make_schema(widths, VALUES[:n_values])
    sizes = range(max(1, l if eligible else 1), n_max + 1)
    if eligible:  # an l-eligible multiset of n values exists iff l * ceil(n / k) <= n
        sizes = [n for n in sizes if l * -(-n // n_values) <= n]
    n = rng.choice(sizes)
    vals = [rng.choice(schema.sensitive_values) for _ in range(n)]
    while eligible and not is_l_eligible([Record("", (), v) for v in vals], l):
        # move one copy of the most frequent value to another value
        top = Counter(vals).most_common(1)[0][0]
        vals[vals.index(top)] = rng.choice([v for v in schema.sensitive_values if v != top])
    qis = [tuple(rng.randint(0, w) for w in widths) for _ in range(n)]
    return make_table(schema, zip(qis, vals))


@st.composite
def tables(draw, n_max: int = 8, n_values: int = 4, d_max: int = 2, width_max: int = 5,
           l: int | None = None):
    """Small tables; with ``l`` the table is l-eligible."""
    d = draw(st.integers(1, d_max))
    widths = draw(st.lists(st.integers(0, width_max), min_size=d, max_size=d))
    values = VALUES[:n_values]
    if l is None:
        vals = draw(st.lists(st.sampled_from(values), min_size=1, max_size=n_max))
    else:
        counts = draw(st.lists(st.integers(1, 3), min_size=l, max_size=n_values))
        counts = eligible_counts(counts, l)
        while sum(counts) > n_max:
            counts[0] -= 1
            counts = eligible_counts(counts, l)
        vals = draw(st.permutations([v for v, c in zip(values, counts) for _ in range(c)]))
    point = st.tuples(*(st.integers(0, w) for w in widths))
    qis = draw(st.lists(point, min_size=len(vals), max_size=len(vals)))
    return make_table(make_schema(widths, values), zip(qis, vals))


# -- oracles ------------------------------------------------------------------

def brute_alpha(counts: dict[str, int], l: int):
    """Scan beta upward and alpha downward, testing the three inequalities directly."""
    vals = sorted(((v, c) for v, c in counts.items() if c), key=lambda vc: (-vc[1], vc[0]))
    n = [c for _, c in vals] + [0]
    S = sum(n)
    w = len(vals)
    for beta in range(l, w + 1):
        for alpha in range(n[beta - 1], 0, -1):
            rest = Fraction(S - alpha * beta, l)
            if n[0] - alpha <= rest and n[beta] <= rest:
                return alpha, beta, tuple(v for v, _ in vals[:beta])
    return None


def brute_instances(external, published):
    """Every set of records consistent with ``published``: map each published
    row injectively onto an external entry and keep maps under which every
    group publishes exactly as shown."""
    from transparent_anon._decode import published_groups
    groups = published_groups(published)
    slots = [(gi, v) for gi, g in enumerate(groups) for v in g.sensitive]
    entries = list(external.entries)
    out = set()
    for perm in itertools.permutations(range(len(entries)), len(slots)):
        members: dict[int, list] = {}
        for (gi, v), j in zip(slots, perm):
            members.setdefault(gi, []).append((entries[j], v))
        if all(groups[gi].fits([q for (_, q), _ in m]) for gi, m in members.items()):
            out.add(frozenset(Record(i, q, v) for m in members.values() for (i, q), v in m))
    return out


def assign_traces(table: MicrodataTable, l: int):
    """Replay Assign over every possible sequence of random draws; all
    traces are equally likely. Yields each trace's bucket id-sets."""
    from transparent_anon.ace import assign_skeleton
    res0 = {}
    for r in table.records:
        res0.setdefault(r.sensitive, []).append(r)
    steps = assign_skeleton({v: len(rs) for v, rs in res0.items()}, l)
    draws = []  # (step index, value) for each partial shuffle, in execution order
    for t, s in enumerate(steps):
        for v in s.signature:
            draws.append((t, v, s.alpha))

    def rec(i, res, acc):
        if i == len(draws):
            yield tuple(acc)
            return
        t, v, alpha = draws[i]

        def shuffle(pool, j, taken):
            if j == alpha:
                yield taken, sorted(pool[alpha:], key=lambda r: r.id)
                return
            for x in range(j, len(pool)):
                p = list(pool)
                p[j], p[x] = p[x], p[j]
                yield from shuffle(p, j + 1, taken + [p[j]])

        for taken, rest in shuffle(res[v], 0, []):
            nres = dict(res)
            nres[v] = rest
            acc.append((t, v, frozenset(r.id for r in taken)))
            yield from rec(i + 1, nres, acc)
            acc.pop()

    for trace in rec(0, res0, []):
        buckets: dict[int, set] = {}
        for t, v, ids in trace:
            buckets.setdefault(t, set()).update(ids)
        yield frozenset(frozenset(b) for b in buckets.values())
