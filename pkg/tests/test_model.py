import itertools
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import make_schema, make_table, tables
from transparent_anon.model import (
    AttributeSchema,
    Bucket,
    BucketPartition,
    ExternalSource,
    MicrodataTable,
    Partition,
    QIAttribute,
    QIGroup,
    Record,
    SchemaError,
    are_isomorphic,
    are_isomorphic_partitions,
    are_symmetric,
    are_symmetric_partitions,
    count_isomorphic_groups,
    count_symmetric_buckets,
    distinct_assignments,
    diversity_ratio,
    is_l_diverse,
    is_l_eligible,
    multinomial,
    symmetric_rewrites,
)
from transparent_anon.dataio import fixture


@pytest.fixture
def t5():
    return fixture("T5")


def group(table, *ids):
    by = table.by_id()
    return QIGroup(tuple(by[i] for i in ids))


class TestSchema:
    def test_attribute_bounds(self):
        with pytest.raises(SchemaError):
            QIAttribute("x", 3, 2)
        a = QIAttribute("x", 2, 5)
        assert (a.width, a.size) == (3, 4)

    def test_universe_is_sorted_and_deduplicated(self):
        s = AttributeSchema((QIAttribute("x", 0, 1),), "s", ("b", "a", "b"))
        assert s.sensitive_values == ("a", "b")

    def test_empty_qi_rejected(self):
        with pytest.raises(SchemaError):
            AttributeSchema((), "s", ("a",))

    def test_qi_index(self):
        s = make_schema([3, 4])
        assert s.qi_index("q1") == 1
        with pytest.raises(SchemaError):
            s.qi_index("nope")


class TestTable:
    def test_records_sorted_by_id(self):
        s = make_schema([5])
        t = MicrodataTable(s, (Record("b", (1,), "a"), Record("a", (2,), "b")))
        assert [r.id for r in t] == ["a", "b"]

    def test_duplicate_id(self):
        s = make_schema([5])
        with pytest.raises(SchemaError, match="duplicate"):
            MicrodataTable(s, (Record("a", (1,), "a"), Record("a", (2,), "b")))

    def test_domain_violation(self):
        s = make_schema([5])
        with pytest.raises(SchemaError, match="outside"):
            MicrodataTable(s, (Record("a", (6,), "a"),))

    def test_unknown_value(self):
        s = make_schema([5])
        with pytest.raises(SchemaError, match="universe"):
            MicrodataTable(s, (Record("a", (1,), "zzz"),))

    def test_wrong_arity(self):
        with pytest.raises(SchemaError):
            MicrodataTable(make_schema([5]), (Record("a", (1, 2), "a"),))

    def test_projection(self, t5):
        ext = t5.projection()
        assert isinstance(ext, ExternalSource)
        assert len(ext) == 8 and ext.qi_of()["Ed"] == (54, 60000)


class TestDiversity:
    def test_t5_is_2_eligible_not_3(self, t5):
        assert is_l_eligible(t5, 2)
        assert not is_l_eligible(t5, 5)

    def test_worked_groups(self, t5):
        assert is_l_diverse(group(t5, "Ann", "Bob", "Cate", "Don"), 2)
        assert not is_l_diverse(group(t5, "Cate", "Don"), 2)

    def test_ratio(self, t5):
        assert diversity_ratio(group(t5, "Ann", "Bob", "Cate", "Don")) == 2

    def test_invalid_l(self, t5):
        with pytest.raises(ValueError):
            is_l_diverse(t5.records, 0)

    @given(tables())
    def test_diverse_iff_ratio(self, t):
        g = QIGroup(t.records)
        for l in range(1, 5):
            assert is_l_diverse(g, l) == (diversity_ratio(g) >= l)


class TestGroupsAndPartitions:
    def test_partition_rejects_overlap(self, t5):
        g = group(t5, "Ann", "Bob")
        with pytest.raises(SchemaError):
            Partition((g, g))

    def test_covers(self, t5):
        p = Partition((group(t5, "Ann", "Bob", "Cate", "Don"), group(t5, "Ed", "Fred", "Gill", "Hera")))
        assert p.covers(t5)
        assert not Partition((group(t5, "Ann", "Bob"),)).covers(t5)

    def test_isomorphic_groups_swap_values(self, t5):
        # Ed and Fred trade values: same individuals, QI and value multiset
        by = t5.by_id()
        g = QIGroup((by["Ed"], by["Fred"]))
        g2 = QIGroup((Record("Ed", by["Ed"].qi, by["Fred"].sensitive),
                      Record("Fred", by["Fred"].qi, by["Ed"].sensitive)))
        assert are_isomorphic(g, g2)
        g3 = QIGroup((Record("Ed", by["Ed"].qi, "diabetes"), by["Fred"]))
        assert not are_isomorphic(g, g3)

    def test_isomorphic_partitions(self):
        t3, t5 = fixture("T3"), fixture("T5")
        ids = [("Ann", "Bob", "Cate", "Don"), ("Ed", "Fred"), ("Gill", "Hera")]
        p5 = Partition(tuple(group(t5, *g) for g in ids))
        p3 = Partition(tuple(group(t3, *g) for g in ids))
        assert are_isomorphic_partitions(p5, p3)
        other = Partition(tuple(group(t3, *g) for g in [("Ann", "Bob"), ("Cate", "Don", "Ed", "Fred"),
                                                         ("Gill", "Hera")]))
        assert not are_isomorphic_partitions(p5, other)

    @given(tables(), st.randoms(use_true_random=False))
    def test_isomorphism_is_value_permutation(self, t, rnd):
        vals = [r.sensitive for r in t]
        rnd.shuffle(vals)
        g1 = QIGroup(t.records)
        g2 = QIGroup(tuple(Record(r.id, r.qi, v) for r, v in zip(t, vals)))
        assert are_isomorphic(g1, g2) and are_isomorphic(g2, g1)


class TestBuckets:
    def b1(self, t5):
        by = t5.by_id()
        return Bucket((("dyspepsia", (by["Ann"], by["Gill"])), ("flu", (by["Bob"], by["Ed"]))))

    def test_bucket_shape(self, t5):
        b = self.b1(t5)
        assert b.signature == ("dyspepsia", "flu")
        assert b.column_size == 2 and len(b) == 4 and b.is_divisible()

    def test_unequal_columns_rejected(self, t5):
        by = t5.by_id()
        with pytest.raises(SchemaError):
            Bucket((("dyspepsia", (by["Ann"], by["Gill"])), ("flu", (by["Bob"],))))

    def test_wrong_column_value_rejected(self, t5):
        by = t5.by_id()
        with pytest.raises(SchemaError):
            Bucket((("flu", (by["Ann"],)), ("dyspepsia", (by["Gill"],))))

    def test_from_records(self, t5):
        assert Bucket.from_records(self.b1(t5).members) == self.b1(t5)

    def test_symmetric_swap(self, t5):
        b = self.b1(t5)
        rewrites = list(symmetric_rewrites(b))
        assert len(rewrites) == count_symmetric_buckets(b) == 2
        swapped = next(r for r in rewrites if r != b)
        by_id = {r.id: r.sensitive for r in swapped.members}
        assert by_id["Ann"] == "flu" and by_id["Bob"] == "dyspepsia"
        assert all(are_symmetric(b, r) for r in rewrites)

    def test_not_symmetric_when_columns_differ(self, t5):
        by = t5.by_id()
        other = Bucket((("dyspepsia", (by["Ann"], by["Gill"])),
                        ("flu", (Record("Ed", by["Ed"].qi, "flu"), by["Bob"]))))
        assert are_symmetric(self.b1(t5), other)
        mixed = Bucket((("dyspepsia", (Record("Ann", by["Ann"].qi, "dyspepsia"),
                                       Record("Bob", by["Bob"].qi, "dyspepsia"))),
                        ("flu", (Record("Gill", by["Gill"].qi, "flu"), by["Ed"]))))
        assert not are_symmetric(self.b1(t5), mixed)

    def test_symmetric_partitions(self, t5):
        b = self.b1(t5)
        swapped = next(r for r in symmetric_rewrites(b) if r != b)
        assert are_symmetric_partitions(BucketPartition((b,)), BucketPartition((swapped,)))


class TestCounting:
    @given(st.lists(st.integers(0, 3), max_size=3))
    def test_multinomial_matches_permutation_count(self, counts):
        items = [i for i, c in enumerate(counts) for _ in range(c)]
        assert multinomial(counts) == len(set(itertools.permutations(items)))

    @given(st.lists(st.sampled_from("abc"), max_size=6))
    def test_distinct_assignments(self, values):
        got = list(distinct_assignments(values))
        assert got == sorted(set(itertools.permutations(values)))
        assert len(got) == multinomial(Counter(values).values())

    def test_count_isomorphic_groups(self, t5):
        g = group(t5, "Ann", "Bob", "Cate", "Don")  # dyspepsia, flu, gastritis x2
        assert count_isomorphic_groups(g) == 12

    def test_fraction_free_ratio(self):
        t = make_table(make_schema([3]), [((0,), "a"), ((1,), "a"), ((2,), "b")])
        assert diversity_ratio(QIGroup(t.records)) == Fraction(3, 2)
