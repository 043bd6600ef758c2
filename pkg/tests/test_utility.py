import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_table
from transparent_anon.dataio import fixture, partition_by_ids
from transparent_anon.recoding import Anatomy, anonymize
from transparent_anon.tailor import tailor
from transparent_anon.utility import (
    CountQuery,
    coverage,
    estimated_count,
    exact_count,
    generate_workload,
    workload_error,
)

T1_GROUPS = [("Ann", "Bob"), ("Cate", "Don"), ("Ed", "Fred", "Gill", "Hera")]
DYSPEPSIA = ("dyspepsia", "dyspepsia")


def naive_estimate(published, q):
    """Direct evaluation of the uniform-spread formula, one row or group at a time."""
    lo, hi = q.sensitive
    total = 0.0
    if isinstance(published, Anatomy):
        for g in published.groups:
            qi_hits = sum(all(p is None or p[0] <= v <= p[1] for v, p in zip(pt, q.qi)) for pt in g.qi)
            s_hits = sum(lo <= v <= hi for v in g.sensitive)
            total += qi_hits * s_hits / len(g)
        return total
    for row in published.rows():
        if not lo <= row.sensitive <= hi:
            continue
        frac = 1.0
        for (a, b), p in zip(row.intervals, q.qi):
            if p is not None:
                frac *= max(0, min(b, p[1]) - max(a, p[0]) + 1) / (b - a + 1)
        total += frac
    return total


def full_query(schema):
    vals = schema.sensitive_values
    return CountQuery(tuple((a.lo, a.hi) for a in schema.qi), (vals[0], vals[-1]))


class TestCoverage:
    def test_square_root(self):
        assert coverage(100, 0.04, 2) == 20

    def test_bounds(self):
        assert coverage(5, 1e-9, 3) == 1
        assert coverage(5, 0.999999, 2) == 5

    @given(st.integers(1, 500), st.floats(0.001, 0.999), st.integers(2, 5))
    def test_is_ceiling(self, size, s, qd):
        c = coverage(size, s, qd)
        assert 1 <= c <= size
        assert c >= s ** (1 / qd) * size - 1e-6


class TestWorkload:
    def test_shape(self):
        schema = fixture("T5").schema
        w = generate_workload(schema, 2, 0.04, rng=1)
        assert len(w) == 1000 and w.seed == 1
        assert all(q.qd == 2 for q in w)

    def test_all_attributes(self):
        schema = fixture("T5").schema
        w = generate_workload(schema, schema.d + 1, 0.1, n_queries=50, rng=2)
        assert all(None not in q.qi for q in w)

    def test_bounds_and_widths(self):
        schema = fixture("T5").schema
        w = generate_workload(schema, 3, 0.1, n_queries=200, rng=3)
        universe = schema.sensitive_values
        for q in w:
            for (lo, hi), a in zip(q.qi, schema.qi):
                assert a.lo <= lo <= hi <= a.hi and hi - lo + 1 == coverage(a.size, 0.1, 3)
            i, j = universe.index(q.sensitive[0]), universe.index(q.sensitive[1])
            assert j - i + 1 == coverage(len(universe), 0.1, 3)

    def test_reproducible(self):
        schema = fixture("T5").schema
        assert generate_workload(schema, 2, 0.05, 20, 9) == generate_workload(schema, 2, 0.05, 20, 9)

    @pytest.mark.parametrize("qd, s", [(1, 0.1), (4, 0.1), (2, 0.0), (2, 1.0)])
    def test_invalid(self, qd, s):
        with pytest.raises(ValueError):
            generate_workload(fixture("T5").schema, qd, s)


class TestCounts:
    def test_exact(self):
        t5 = fixture("T5")
        assert exact_count(t5, CountQuery(((21, 26), None), DYSPEPSIA)) == 1
        assert exact_count(t5, full_query(t5.schema)) == 8
        assert exact_count(t5.replace_records(()), full_query(t5.schema)) == 0

    def test_generalized_estimate(self):
        q = CountQuery(((21, 26), None), DYSPEPSIA)
        assert estimated_count(fixture("T6*"), q) == pytest.approx(0.5)

    def test_full_domain_query(self):
        t1 = fixture("T1")
        part = partition_by_ids(t1, T1_GROUPS)
        for fn in ("mbr", "anatomy"):
            assert estimated_count(anonymize(part, t1.schema, fn), full_query(t1.schema)) == pytest.approx(8)

    def test_anatomy_estimate(self):
        t1 = fixture("T1")
        pub = anonymize(partition_by_ids(t1, T1_GROUPS), t1.schema, "anatomy")
        q = CountQuery(((21, 27), None), DYSPEPSIA)
        assert estimated_count(pub, q) == pytest.approx(naive_estimate(pub, q)) == pytest.approx(1.0)

    def test_matches_naive_formula(self):
        rng = random.Random(71)
        for _ in range(60):
            t = random_table(rng, n_max=12, l=2, width=9)
            p, _ = tailor(t, 2)
            w = generate_workload(t.schema, rng.randint(2, t.schema.d + 1), 0.2, 20, rng)
            for fn in ("mbr", "anatomy"):
                pub = anonymize(p, t.schema, fn)
                for q in w:
                    est = estimated_count(pub, q)
                    assert est == pytest.approx(naive_estimate(pub, q))
                    assert 0 <= est <= len(t) + 1e-9
                    assert exact_count(t, q) == sum(q.matches(r.qi, r.sensitive) for r in t)


class TestWorkloadError:
    def test_worked_query(self):
        res = workload_error(fixture("T5"), fixture("T6*"), [CountQuery(((21, 26), None), DYSPEPSIA)])
        (r,) = res.results
        assert (r.act, r.est, r.error, res.delta) == (1, pytest.approx(0.5), pytest.approx(0.5), 0.04)

    def test_zero_actual_uses_delta(self):
        q = CountQuery(((40, 50), None), ("bronchitis", "flu"))
        pub = fixture("T4*")
        res = workload_error(fixture("T3"), pub, [q])
        est = estimated_count(pub, q)
        assert res.results[0].act == 0 and est > 0
        assert res.workload_error == pytest.approx(est / 0.04)

    def test_exact_publication_has_no_error(self):
        t1 = fixture("T1")
        singletons = partition_by_ids(t1, [[r.id] for r in t1])
        w = generate_workload(t1.schema, 3, 0.3, 100, 4)
        assert workload_error(t1, anonymize(singletons, t1.schema), w).workload_error == pytest.approx(0)

    def test_explicit_delta_and_empty(self):
        t1 = fixture("T1")
        res = workload_error(t1, fixture("T2*"), [], delta=2.0)
        assert res.workload_error == 0.0 and res.delta == 2.0
