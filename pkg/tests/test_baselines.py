import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import brute_instances, make_schema, make_table, random_table, tables
from transparent_anon.adversary import enumerate_possible_instances
from transparent_anon.baselines import (
    ConsistencyError,
    InfeasibleError,
    RecodingScheme,
    UnmaskableError,
    apportion,
    conforms,
    enumerate_global_partitions,
    is_minimal_generalization,
    is_minimal_partition,
    k_anon_partition,
    mask,
    mask_consistency_attack,
    mask_distribution,
    mondrian_lite,
    mondrian_partition,
    naive_global_partitions,
    needs_mask,
    opt_gen,
    opt_gen_partition,
)
from transparent_anon.dataio import MASK_FIXTURE_PARTITION, fixture, partition_by_ids
from transparent_anon.model import MicrodataTable, SizeLimitError, is_l_diverse
from transparent_anon.recoding import anonymize, discernability

GLOBAL = RecodingScheme.GLOBAL
TABLE_III_GROUPS = [("Ann", "Bob"), ("Cate", "Don"), ("Ed", "Fred", "Gill", "Hera")]


@pytest.fixture
def t1():
    return fixture("T1")


@pytest.fixture
def t9():
    return fixture("T9")


class TestGlobalPartitions:
    def test_contains_worked_partition(self, t1):
        parts = [p.id_sets() for p in enumerate_global_partitions(t1, 2)]
        assert partition_by_ids(t1, TABLE_III_GROUPS).id_sets() in parts

    def test_minimum_discernability(self, t1):
        assert min(discernability(p) for p in enumerate_global_partitions(t1, 2)) == 24

    def test_ineligible(self, t1):
        assert list(enumerate_global_partitions(t1, 5)) == []

    def test_limit(self):
        t = make_table(make_schema([20]), [((i,), "abcde"[i % 5]) for i in range(13)])
        with pytest.raises(SizeLimitError):
            list(enumerate_global_partitions(t, 2))

    def test_matches_naive_filter(self):
        rng = random.Random(51)
        for _ in range(120):
            l = rng.choice([1, 2])
            t = random_table(rng, n_max=7, l=l, width=4)
            fast = [p.id_sets() for p in enumerate_global_partitions(t, l)]
            slow = [p.id_sets() for p in naive_global_partitions(t, l)]
            assert fast == slow

    def test_identical_qi_must_share_group(self):
        t = make_table(make_schema([5]), [((1,), "a"), ((1,), "b"), ((3,), "a"), ((3,), "b")])
        recs = t.records
        assert not conforms([[recs[0], recs[2]], [recs[1], recs[3]]], GLOBAL)
        assert conforms([[recs[0], recs[2]], [recs[1], recs[3]]], RecodingScheme.LOCAL)
        assert conforms([recs[:2], recs[2:]], GLOBAL)


class TestOptGen:
    def test_worked_table(self, t1):
        assert opt_gen(t1, 2) == fixture("T2*")

    def test_swapped_instance(self):
        alt = fixture("T1_alt")
        p = opt_gen_partition(alt, 2)
        assert discernability(p) == 22
        assert opt_gen(alt, 2) != fixture("T2*")

    def test_ineligible(self, t1):
        assert opt_gen(t1, 5) is None

    def test_output_is_minimal(self):
        rng = random.Random(52)
        checked = 0
        for _ in range(150):
            l = rng.choice([1, 2])
            t = random_table(rng, n_max=7, l=l, width=4)
            out = opt_gen(t, l)
            if out is not None:
                assert is_minimal_generalization(t, out, l, GLOBAL)
                checked += 1
        assert checked > 100


class TestMinimality:
    def test_instances_of_worked_table_are_minimal(self):
        t2s, e1 = fixture("T2*"), fixture("E1")
        insts = list(enumerate_possible_instances(e1, t2s))
        assert len(insts) == 96
        assert all(is_minimal_generalization(inst, t2s, 2, GLOBAL) for inst in insts)

    def test_coarse_table_minimal_for_its_own_source(self):
        assert is_minimal_generalization(fixture("T3"), fixture("T4*"), 2, GLOBAL)

    def test_coarse_table_not_minimal_for_other_source(self, t1):
        assert not is_minimal_generalization(t1, fixture("T4*"), 2, GLOBAL)

    def test_inconsistent(self, t1):
        with pytest.raises(ConsistencyError):
            is_minimal_generalization(t1, fixture("T6*"), 2, GLOBAL)

    def test_partition_level(self, t1):
        p = partition_by_ids(t1, TABLE_III_GROUPS)
        assert is_minimal_partition(p, 2, GLOBAL)
        assert not is_minimal_partition(partition_by_ids(t1, [[r.id for r in t1]]), 2, GLOBAL)

    @given(tables(n_max=6, l=2))
    def test_whole_table_minimal_iff_no_valid_split(self, t):
        whole = anonymize([t.records], t.schema)
        splittable = any(len(p) > 1 for p in naive_global_partitions(t, 2))
        assert is_minimal_generalization(t, whole, 2, GLOBAL) == (not splittable)


class TestKAnon:
    def test_worked_table(self, t9):
        p = k_anon_partition(t9, 2)
        assert p.covers(t9) and all(len(g) >= 2 for g in p)
        assert k_anon_partition(t9, 2) == p

    def test_infeasible(self):
        t = make_table(make_schema([3]), [((1,), "a")])
        with pytest.raises(InfeasibleError):
            k_anon_partition(t, 2)
        with pytest.raises(ValueError):
            k_anon_partition(t, 0)

    @given(tables(n_max=12), st.integers(1, 4), st.booleans())
    def test_group_sizes(self, t, k, uniform):
        if len(t) < k:
            return
        p = k_anon_partition(t, k, uniform)
        assert p.covers(t) and all(k <= len(g) < 2 * k or len(t) < 2 * k for g in p)
        if uniform:
            assert sum(len(g) != k for g in p) <= 1


class TestMask:
    def test_classification(self, t9):
        groups = partition_by_ids(t9, MASK_FIXTURE_PARTITION)
        flagged = [sorted(r.id for r in g) for g in groups
                   if needs_mask((r.sensitive for r in g), 2, {"dyspepsia"})]
        assert flagged == [["Ann", "Bob"]]

    def test_appendix_output_in_support(self, t9):
        part = partition_by_ids(t9, MASK_FIXTURE_PARTITION)
        dist = mask_distribution(t9, 2, 2, {"dyspepsia"}, part)
        assert fixture("T10*") in dist and sum(dist.values()) == 1
        assert {mask(t9, 2, 2, {"dyspepsia"}, s, part) for s in range(30)} <= set(dist)

    def test_empty_v_is_plain_generalization(self, t9):
        part = partition_by_ids(t9, MASK_FIXTURE_PARTITION)
        assert mask(t9, 2, 2, set(), 0, part) == anonymize(part, t9.schema)

    def test_unmaskable(self):
        t = make_table(make_schema([5]), [((i,), "a") for i in range(4)])
        with pytest.raises(UnmaskableError):
            mask(t, 2, 2, {"a"}, 0)

    def test_bad_parameters(self, t9):
        with pytest.raises(ValueError):
            mask(t9, 1, 2, {"flu"}, 0)

    @given(tables(n_max=12, n_values=4), st.integers(0, 1000))
    def test_output_satisfies_condition(self, t, seed):
        V = {"a", "b"}
        try:
            out = mask(t, 2, 2, V, seed)
        except (UnmaskableError, InfeasibleError):
            return
        for g in out.groups:
            assert not needs_mask(g.sensitive, 2, V)

    def test_attack_on_appendix_output(self, t9):
        res = mask_consistency_attack(fixture("T10*"), t9.projection(), 2, 2, {"dyspepsia"})
        assert res.count == 8
        assert res.posterior("Ann", "dyspepsia") == Fraction(5, 8)

    def test_attack_without_v_counts_consistent_instances(self):
        rng = random.Random(53)
        for _ in range(25):
            t = random_table(rng, n_max=5, n_values=3, l=1, width=3)
            k = min(2, len(t))
            pub = anonymize(k_anon_partition(t, k), t.schema)
            ext = t.projection()
            res = mask_consistency_attack(pub, ext, k, 1, set())
            oracle = brute_instances(ext, pub)
            assert {frozenset(i) for i in res.instances} == oracle
            for r in t:
                want = Fraction(sum(holds(i, r.id, r.sensitive) for i in oracle), len(oracle))
                assert res.posterior(r.id, r.sensitive) == want


def holds(instance, ident, value):
    return any(r.id == ident and r.sensitive == value for r in instance)


class TestApportion:
    def test_exact_scaling(self):
        assert apportion({"a": 1, "b": 1}, 4) == Counter({"a": 2, "b": 2})

    def test_largest_remainder(self):
        assert apportion({"a": 2, "b": 1}, 2) == Counter({"a": 1, "b": 1})
        assert apportion({"a": 1, "b": 1, "c": 1}, 2) == Counter({"a": 1, "b": 1})

    @given(st.dictionaries(st.sampled_from("abcde"), st.integers(1, 9), min_size=1), st.integers(1, 30))
    def test_total_and_bounds(self, counts, size):
        out = apportion(counts, size)
        total = sum(counts.values())
        assert sum(out.values()) == size
        for v, c in counts.items():
            assert abs(out[v] - Fraction(size * c, total)) < 1


class TestMondrian:
    def test_ineligible(self, t1):
        assert mondrian_lite(t1, 10) is None

    def test_random_tables_diverse(self):
        rng = random.Random(54)
        for _ in range(100):
            l = rng.choice([1, 2, 3])
            t = random_table(rng, n_max=20, l=l, width=9)
            p = mondrian_partition(t, l)
            assert p.covers(t) and all(is_l_diverse(g, l) for g in p)

    def test_stops_without_diverse_median(self):
        t = make_table(make_schema([9]), [((i,), v) for i, v in enumerate("aabb")])
        assert len(mondrian_partition(t, 2)) == 1

    def test_deterministic(self, t1):
        assert mondrian_lite(t1, 2) == mondrian_lite(t1, 2)

    def test_empty(self):
        t = MicrodataTable(make_schema([3]), ())
        assert len(mondrian_partition(t, 2)) == 0
