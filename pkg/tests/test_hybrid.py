import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_table, tables
from transparent_anon.dataio import fixture
from transparent_anon.hybrid import hybrid, hybrid_distribution, hybrid_group_distributions, hybrid_partition
from transparent_anon.model import SizeLimitError, is_l_diverse
from transparent_anon.recoding import mbr, total_perimeter
from transparent_anon.tailor import tailor_partition


def id_sets(u):
    return frozenset(frozenset(r.id for r in b.members) for b in u)


@pytest.fixture
def t5():
    return fixture("T5")


def test_first_group_refinements(t5):
    p, per_group = hybrid_group_distributions(t5, 2)
    assert p.id_sets() == {frozenset({"Ann", "Bob", "Cate", "Don"}),
                           frozenset({"Ed", "Fred"}), frozenset({"Gill", "Hera"})}
    first = {id_sets(s): q for s, q in per_group[0].values()}
    assert first[frozenset({frozenset({"Ann", "Cate"}), frozenset({"Bob", "Don"})})] == Fraction(1, 2)
    assert sum(first.values()) == 1 and len(first) == 2


def test_always_four_pairs(t5):
    for seed in range(30):
        u = hybrid_partition(t5, 2, seed)
        assert sorted(len(b) for b in u) == [2, 2, 2, 2]


def test_distribution(t5):
    dist = hybrid_distribution(t5, 2)
    assert sum(dist.values()) == 1
    assert {hybrid(t5, 2, s) for s in range(40)} == set(dist)


def test_ineligible():
    assert hybrid(fixture("T1"), 10, 0) is None
    assert hybrid_distribution(fixture("T1"), 10) is None


def test_limit(t5):
    with pytest.raises(SizeLimitError):
        hybrid_distribution(t5, 2, limit=1)


def test_reproducible(t5):
    assert hybrid_partition(t5, 2, 99) == hybrid_partition(t5, 2, 99)


@given(tables(n_max=10, l=2), st.integers(0, 2**64 - 1))
def test_refines_tailor(t, seed):
    p = tailor_partition(t, 2)
    u = hybrid_partition(t, 2, seed)
    assert u.records == t.records
    assert all(is_l_diverse(b.members, 2) for b in u)
    owner = {r.id: i for i, g in enumerate(p) for r in g}
    for b in u:
        (gi,) = {owner[r.id] for r in b.members}
        box, outer = mbr(b.members), mbr(p.groups[gi].members)
        assert all(olo <= lo and hi <= ohi for (lo, hi), (olo, ohi) in zip(box, outer))
    assert total_perimeter(u.as_partition(), t.schema) <= total_perimeter(p, t.schema)


def test_samples_lie_in_exact_support():
    rng = random.Random(41)
    for _ in range(40):
        t = random_table(rng, n_max=8, l=2)
        dist = hybrid_distribution(t, 2)
        assert sum(dist.values()) == 1
        for _ in range(5):
            assert hybrid(t, 2, rng.getrandbits(64)) in dist
