"""Tests for wildreid.splits — split policies, validation, problem kind and split files."""
import pytest
from datetime import date, timedelta
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tests.conftest import make_catalog


def _random_catalog(rng, n_ind=None):
    n_ind = n_ind or int(rng.integers(1, 8))
    start = date(2012, 1, 1)
    rows = []
    for i in range(n_ind):
        n_days = int(rng.integers(1, 7))
        days = sorted(set(int(d) for d in rng.integers(0, 3000, size=n_days)))
        for d in days:
            for j in range(int(rng.integers(1, 4))):
                rows.append((f"t{i}-{d}-{j}", f"t{i}", (start + timedelta(days=d)).isoformat()))
    if rng.random() < 0.3:
        rows.append(("unlabelled", None, "2015-01-01"))
    return make_catalog(rows)


# ── time_proportion_split ────────────────────────────────────────────────────

class TestTimeProportion:
    def test_day_count_rule(self):
        from wildreid.splits.policies import reference_day_count
        assert reference_day_count(0.5, 3) == 2
        assert reference_day_count(0.5, 4) == 2
        assert reference_day_count(0.5, 2) == 1
        assert reference_day_count(0.99, 5) == 4
        assert reference_day_count(0.01, 5) == 1

    def test_three_day_individual(self):
        from wildreid.splits import time_proportion_split
        cat = make_catalog([
            ("a1", "t1", "2016-01-01"), ("a2", "t1", "2016-01-01"),
            ("b1", "t1", "2017-01-01"),
            ("c1", "t1", "2018-01-01"), ("c2", "t1", "2018-01-01"),
        ])
        split = time_proportion_split(cat, 0.5)
        assert split.reference_ids == {"a1", "a2", "b1"}
        assert split.query_ids == {"c1", "c2"}

    def test_single_day_individual_excluded(self, small_catalog):
        from wildreid.splits import time_proportion_split
        split = time_proportion_split(small_catalog, 0.5)
        assert "t3-a" in split.excluded_ids
        assert "u-1" in split.excluded_ids
        assert "t1-x" in split.excluded_ids
        assert split.reference_ids >= {"t1-a", "t1-b", "t1-c", "t2-a"}
        assert split.query_ids == {"t1-d", "t2-b", "t2-c"}

    def test_rejects_bad_proportion(self, small_catalog):
        from wildreid.splits import SplitError, time_proportion_split
        with pytest.raises(SplitError):
            time_proportion_split(small_catalog, 1.0)

    def test_no_multi_day_individual(self):
        from wildreid.splits import SplitError, time_proportion_split
        cat = make_catalog([("a", "t1", "2016-01-01"), ("b", "t2", "2016-01-02")])
        with pytest.raises(SplitError):
            time_proportion_split(cat, 0.5)


# ── time_cutoff_split ────────────────────────────────────────────────────────

class TestTimeCutoff:
    def test_year_window(self, small_catalog):
        from wildreid.splits import time_cutoff_split
        split = time_cutoff_split(small_catalog, date(2017, 1, 1), window="year")
        assert split.reference_ids == {"t1-a", "t1-b", "t2-a"}
        assert split.query_ids == {"t1-c", "t3-a"}
        assert {"t1-d", "t2-b", "t2-c", "u-1", "t1-x"} <= split.excluded_ids

    def test_all_window(self, small_catalog):
        from wildreid.splits import time_cutoff_split
        split = time_cutoff_split(small_catalog, date(2017, 1, 1), window="all")
        assert split.query_ids == {"t1-c", "t1-d", "t2-b", "t2-c", "t3-a", "u-1"}

    def test_day_window(self, small_catalog):
        from wildreid.splits import time_cutoff_split
        split = time_cutoff_split(small_catalog, date(2017, 1, 1), window=200)
        assert split.query_ids == {"t1-c", "t3-a"}

    def test_cutoff_outside_span(self, small_catalog):
        from wildreid.splits import SplitError, time_cutoff_split
        with pytest.raises(SplitError):
            time_cutoff_split(small_catalog, date(2016, 3, 1))
        with pytest.raises(SplitError):
            time_cutoff_split(small_catalog, date(2030, 1, 1))

    def test_yearly_cutoffs(self):
        from wildreid.splits import yearly_cutoff_splits
        rows = [(f"i{y}", f"t{y % 3}", f"{y}-06-01") for y in range(2010, 2022)]
        splits = yearly_cutoff_splits(make_catalog(rows))
        assert [s.name for s in splits] == [f"cutoff-{y}" for y in range(2011, 2022)]
        assert splits[0].query_ids == {"i2011"}


# ── random_split_matched ─────────────────────────────────────────────────────

class TestRandomMatched:
    def test_counts_and_determinism(self, small_catalog):
        from wildreid.splits import random_split_matched, split_summary, time_proportion_split
        template = time_proportion_split(small_catalog, 0.5, name="tp")
        a = random_split_matched(small_catalog, template, seed=11)
        b = random_split_matched(small_catalog, template, seed=11)
        assert a == b
        assert a.covered_ids == template.covered_ids
        assert a.excluded_ids == template.excluded_ids
        assert split_summary(a, small_catalog).reference_counts == \
            split_summary(template, small_catalog).reference_counts
        assert a.params == {"seed": 11, "template": "tp"}
        assert a.rng_algorithm == "PCG64"

    def test_closed_set_follows_template(self, small_catalog):
        from wildreid.splits import ProblemType, classify_problem, random_split_matched, time_proportion_split
        template = time_proportion_split(small_catalog, 0.5, name="tp")
        assert classify_problem(template, small_catalog).kind is ProblemType.CLOSED_SET
        for seed in range(10):
            rnd = random_split_matched(small_catalog, template, seed=seed)
            kind = classify_problem(rnd, small_catalog)
            assert kind.kind is ProblemType.CLOSED_SET
            assert not kind.new_individual_ids

    def test_unknown_template_ids(self, small_catalog):
        from wildreid.splits import Split, SplitError, SplitPolicy, random_split_matched
        template = Split(frozenset({"ghost"}), frozenset({"t1-a"}), SplitPolicy.TIME_PROPORTION, name="bad")
        with pytest.raises(SplitError, match="absent"):
            random_split_matched(small_catalog, template, seed=1)


# ── Randomized invariants ────────────────────────────────────────────────────

class TestSplitInvariants:
    def test_thousand_random_catalogs(self):
        import numpy as np
        from wildreid.splits import (
            SplitError, random_split_matched, split_summary, time_cutoff_split, time_proportion_split,
        )
        rng = np.random.default_rng(20230601)
        for _ in range(1000):
            cat = _random_catalog(rng)
            multi_day = [i for i in cat.individuals if len(cat.dates_of(i)) >= 2]
            try:
                tp = time_proportion_split(cat, float(rng.uniform(0.1, 0.9)))
            except SplitError:
                assert not multi_day
                tp = None
            if tp is not None:
                ref_days = {(cat.identity(i), cat.record(i).date) for i in tp.reference_ids}
                qry_days = {(cat.identity(i), cat.record(i).date) for i in tp.query_ids}
                assert not ref_days & qry_days
                for ind in cat.individuals:
                    if len(cat.dates_of(ind)) < 2:
                        assert set(cat.images_of(ind)) <= tp.excluded_ids
                rnd = random_split_matched(cat, tp, seed=int(rng.integers(0, 2**31)))
                assert split_summary(rnd, cat).reference_counts == split_summary(tp, cat).reference_counts
                assert not rnd.reference_ids & rnd.query_ids

            lo, hi = cat.date_span()
            if lo == hi:
                continue
            cutoff = lo + timedelta(days=int(rng.integers(1, (hi - lo).days + 1)))
            try:
                tc = time_cutoff_split(cat, cutoff, window="all")
            except SplitError:
                continue
            assert max(cat.record(i).date for i in tc.reference_ids) < cutoff
            assert min(cat.record(i).date for i in tc.query_ids) >= cutoff


# ── Problem kind and validation ──────────────────────────────────────────────

class TestProblemKind:
    def test_closed(self, small_catalog):
        from wildreid.splits import ProblemType, classify_problem, time_proportion_split
        kind = classify_problem(time_proportion_split(small_catalog, 0.5), small_catalog)
        assert kind.kind is ProblemType.CLOSED_SET
        assert not kind.new_individual_ids

    def test_open_with_new_identity(self, small_catalog):
        from wildreid.splits import classify_problem, time_cutoff_split
        kind = classify_problem(time_cutoff_split(small_catalog, date(2017, 1, 1)), small_catalog)
        assert kind.is_open
        assert kind.new_individual_ids == {"t3"}
        assert kind.absent_individual_ids == {"t2"}


class TestValidateSplit:
    def test_clean_split(self, small_catalog):
        from wildreid.splits import time_proportion_split, validate_split
        report = validate_split(time_proportion_split(small_catalog, 0.5), small_catalog)
        assert report.ok

    def test_straddle_and_overlap(self, small_catalog):
        from wildreid.splits import Split, SplitPolicy, validate_split
        bad = Split(frozenset({"t1-a", "t2-a"}), frozenset({"t1-b", "t2-a", "ghost"}), SplitPolicy.RANDOM_MATCHED)
        report = validate_split(bad, small_catalog)
        assert not report.ok
        assert report.count("disjointness") == 1
        assert report.count("encounter_straddle") >= 1
        assert report.count("unknown_id") == 1

    def test_straddle_severity_follows_policy(self, small_catalog):
        from dataclasses import replace
        from wildreid.splits import Split, SplitPolicy, validate_split
        rnd = Split(frozenset({"t1-a", "t1-c", "t2-b"}), frozenset({"t1-b", "t1-d", "t2-c"}),
                    SplitPolicy.RANDOM_MATCHED)
        report = validate_split(rnd, small_catalog)
        assert report.ok
        straddles = [f for f in report.findings if f.check == "encounter_straddle"]
        assert len(straddles) == 2
        assert {f.severity for f in straddles} == {"info"}

        timed = validate_split(replace(rnd, policy=SplitPolicy.TIME_PROPORTION), small_catalog)
        assert not timed.ok
        assert {f.check for f in timed.errors()} == {"encounter_straddle"}


# ── Split files ──────────────────────────────────────────────────────────────

class TestSplitFile:
    def test_write_read(self, tmp_path, small_catalog):
        from wildreid.splits import random_split_matched, read_split, time_proportion_split, write_split
        tp = time_proportion_split(small_catalog, 0.5, name="tp")
        rnd = random_split_matched(small_catalog, tp, seed=3, name="rnd")
        for split in (tp, rnd):
            path = write_split(split, tmp_path / f"{split.name}.csv")
            assert read_split(path) == split
        text = (tmp_path / "rnd.csv").read_text()
        assert text.startswith("# policy: random_matched\n")
        assert "# rng: PCG64" in text

    def test_unknown_role(self, tmp_path):
        from wildreid.splits import SplitError, read_split
        path = tmp_path / "s.csv"
        path.write_text("# policy: time_cutoff\nimage_id,role\na,training\n")
        with pytest.raises(SplitError, match="unknown roles"):
            read_split(path)
