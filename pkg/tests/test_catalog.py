"""Tests for wildreid.catalog — manifest ingest, encounters and dataset statistics."""
import pytest
from datetime import date
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tests.conftest import make_catalog

HEADER = "image_id,individual_id,date,orientation,image_path\n"


def _write(tmp_path, body, header=HEADER, name="manifest.csv"):
    path = tmp_path / name
    path.write_text(header + body, encoding="utf-8")
    return path


# ── ingest_manifest ──────────────────────────────────────────────────────────

class TestIngest:
    def test_basic_rows(self, tmp_path):
        from wildreid.catalog import Orientation, ingest_manifest
        path = _write(tmp_path, "i1,t1,2016-05-01,left,a.png\n"
                                "i2,,2016-05-02,Right,b.png\n"
                                "i3,t1,,,c.png\n")
        cat = ingest_manifest(path)
        assert len(cat) == 3
        assert cat.record("i1").date == date(2016, 5, 1)
        assert cat.record("i2").individual_id is None
        assert cat.record("i2").orientation is Orientation.RIGHT
        assert cat.record("i3").date is None
        assert cat.record("i3").orientation is Orientation.UNKNOWN
        assert cat.n_unlabelled == 1

    def test_rows_sorted_by_image_id(self, tmp_path):
        from wildreid.catalog import ingest_manifest
        path = _write(tmp_path, "z,t1,2016-01-01,left,z.png\na,t1,2016-01-02,left,a.png\n")
        assert [r.image_id for r in ingest_manifest(path)] == ["a", "z"]

    def test_malformed_date_names_row(self, tmp_path):
        from wildreid.catalog import ManifestError, ingest_manifest
        path = _write(tmp_path, "i1,t1,2016-05-01,left,a.png\n"
                                "i2,t1,2016-13-40,left,b.png\n")
        with pytest.raises(ManifestError) as exc:
            ingest_manifest(path)
        assert exc.value.issues[0][0] == 3
        assert "2016-13-40" in exc.value.issues[0][1]

    def test_all_bad_rows_reported_together(self, tmp_path):
        from wildreid.catalog import ManifestError, ingest_manifest
        path = _write(tmp_path, "i1,t1,01/05/2016,left,a.png\n"
                                "i2,t1,2016-05-01,sideways,b.png\n"
                                "i1,t1,2016-05-01,left,c.png\n")
        with pytest.raises(ManifestError) as exc:
            ingest_manifest(path)
        rows = [r for r, _ in exc.value.issues]
        assert rows == [2, 3]

    def test_duplicate_image_id(self, tmp_path):
        from wildreid.catalog import ManifestError, ingest_manifest
        path = _write(tmp_path, "i1,t1,2016-05-01,left,a.png\ni1,t2,2016-05-02,left,b.png\n")
        with pytest.raises(ManifestError) as exc:
            ingest_manifest(path)
        assert "duplicate" in exc.value.issues[0][1]
        assert exc.value.issues[0][0] == 3

    def test_missing_column(self, tmp_path):
        from wildreid.catalog import ManifestError, ingest_manifest
        path = _write(tmp_path, "i1,t1,2016-05-01,a.png\n",
                      header="image_id,individual_id,date,image_path\n")
        with pytest.raises(ManifestError, match="orientation"):
            ingest_manifest(path)

    def test_missing_file(self, tmp_path):
        from wildreid.catalog import ManifestError, ingest_manifest
        with pytest.raises(ManifestError, match="not found"):
            ingest_manifest(tmp_path / "nope.csv")

    def test_declared_span(self, tmp_path):
        from wildreid.catalog import ManifestError, ingest_manifest
        path = _write(tmp_path, "i1,t1,2009-12-31,left,a.png\ni2,t1,2015-06-01,left,b.png\n")
        with pytest.raises(ManifestError) as exc:
            ingest_manifest(path, declared_span=(date(2010, 1, 1), date(2021, 12, 31)))
        assert exc.value.issues == [(2, exc.value.issues[0][1])]
        assert "outside declared span" in exc.value.issues[0][1]

    def test_bbox_group(self, tmp_path):
        from wildreid.catalog import ingest_manifest
        header = HEADER.rstrip("\n") + ",bbox_x,bbox_y,bbox_w,bbox_h\n"
        path = _write(tmp_path, "i1,t1,2016-05-01,left,a.png,10,20,100,80\n"
                                "i2,t1,2016-05-01,left,b.png,,,,\n", header=header)
        cat = ingest_manifest(path)
        assert cat.record("i1").bbox.as_tuple() == (10, 20, 100, 80)
        assert cat.record("i2").bbox is None

    def test_partial_bbox_rejected(self, tmp_path):
        from wildreid.catalog import ManifestError, ingest_manifest
        header = HEADER.rstrip("\n") + ",bbox_x,bbox_y,bbox_w,bbox_h\n"
        path = _write(tmp_path, "i1,t1,2016-05-01,left,a.png,10,20,,80\n", header=header)
        with pytest.raises(ManifestError, match="all present or all empty"):
            ingest_manifest(path)

    def test_paths_resolve_against_manifest_dir(self, tmp_path):
        from wildreid.catalog import ingest_manifest
        path = _write(tmp_path, "i1,t1,2016-05-01,left,img/a.png\n")
        cat = ingest_manifest(path)
        assert cat.resolve_path("i1") == tmp_path / "img" / "a.png"

    def test_byte_order_mark(self, tmp_path):
        from wildreid.catalog import ingest_manifest
        path = tmp_path / "manifest.csv"
        path.write_text(HEADER + "i1,t1,2016-05-01,left,a.png\n", encoding="utf-8-sig")
        assert path.read_bytes().startswith(b"\xef\xbb\xbf")
        assert ingest_manifest(path).record("i1").individual_id == "t1"


class TestWriteManifest:
    def test_round_trip_and_stable_bytes(self, tmp_path):
        from wildreid.catalog import ingest_manifest, write_manifest
        header = HEADER.rstrip("\n") + ",bbox_x,bbox_y,bbox_w,bbox_h\n"
        src = _write(tmp_path, "b,t2,2017-02-02,top-left,b.png,,,,\n"
                               "a,,2016-01-01,left,a.png,1,2,30,40\n"
                               "c,t1,,unknown,c.png,,,,\n", header=header)
        first = ingest_manifest(src)
        out1 = write_manifest(first, tmp_path / "out1.csv")
        second = ingest_manifest(out1)
        assert second == first
        out2 = write_manifest(second, tmp_path / "out2.csv")
        assert out1.read_bytes() == out2.read_bytes()


# ── Encounters and stats ─────────────────────────────────────────────────────

class TestEncounters:
    def test_grouping(self, small_catalog):
        from wildreid.catalog import derive_encounters
        encs = derive_encounters(small_catalog)
        keys = [(e.individual_id, e.date) for e in encs]
        assert keys == [
            ("t1", date(2016, 3, 1)), ("t1", date(2017, 5, 10)), ("t1", date(2018, 7, 20)), ("t1", None),
            ("t2", date(2016, 4, 2)), ("t2", date(2019, 1, 15)),
            ("t3", date(2017, 6, 6)),
        ]
        assert encs[0].image_ids == ("t1-a", "t1-b")

    def test_unlabelled_left_out(self, small_catalog):
        from wildreid.catalog import derive_encounters
        assert all("u-1" not in e.image_ids for e in derive_encounters(small_catalog))


class TestStats:
    def test_counts(self, small_catalog):
        from wildreid.catalog import compute_stats
        s = compute_stats(small_catalog)
        assert s.n_image == 10
        assert s.n_indiv == 3
        assert s.n_enc == 7
        assert s.span_days == (date(2019, 1, 15) - date(2016, 3, 1)).days
        assert s.timestamp_coverage == pytest.approx(0.9)

    def test_span_example(self):
        from wildreid.catalog import compute_stats
        cat = make_catalog([("a", "t1", "2010-05-01"), ("b", "t1", "2021-07-15")])
        assert compute_stats(cat).span_days == 4093

    def test_empty_catalog(self):
        from wildreid.catalog import compute_stats
        s = compute_stats(make_catalog([]))
        assert (s.n_image, s.n_indiv, s.n_enc, s.span_days, s.timestamp_coverage) == (0, 0, 0, 0, 0.0)


class TestCatalogQueries:
    def test_images_of_and_dates(self, small_catalog):
        assert small_catalog.images_of("t2") == ("t2-a", "t2-b", "t2-c")
        assert small_catalog.dates_of("t1") == [date(2016, 3, 1), date(2017, 5, 10), date(2018, 7, 20)]
        assert small_catalog.images_on(date(2019, 1, 15)) == ("t2-b", "t2-c")

    def test_duplicate_ids_rejected(self):
        from wildreid.core.errors import ValidationError
        with pytest.raises(ValidationError):
            make_catalog([("a", "t1", "2016-01-01"), ("a", "t2", "2016-01-02")])
