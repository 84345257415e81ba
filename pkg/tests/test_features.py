"""Tests for wildreid.features — extraction, matching, cache files and blocking."""
import pytest
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np

from tests.conftest import textured_image


@pytest.fixture(scope="module")
def blobs():
    from wildreid.features import extract_features
    return extract_features(textured_image(seed=1), image_id="blobs")


# ── Extraction ───────────────────────────────────────────────────────────────

class TestExtract:
    def test_keypoints_and_unit_descriptors(self, blobs):
        assert len(blobs) > 20
        assert blobs.keypoints.shape == (len(blobs), 4)
        assert blobs.descriptors.shape == (len(blobs), 128)
        norms = np.linalg.norm(blobs.descriptors, axis=1)
        assert np.allclose(norms, 1.0, atol=1e-5)

    def test_blob_grid_centres_found(self):
        from wildreid.features import extract_features
        yy, xx = np.mgrid[0:256, 0:256].astype(np.float64)
        img = np.full((256, 256), 220.0)
        centres = [(x, y) for y in (64, 128, 192) for x in (64, 128, 192)]
        for cx, cy in centres:
            img -= 150.0 * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * 6.0 ** 2))
        fs = extract_features(np.clip(img, 0, 255).astype(np.uint8))
        assert len(fs) >= 9
        xy = fs.keypoints[:, :2]
        for cx, cy in centres:
            assert np.min(np.hypot(xy[:, 0] - cx, xy[:, 1] - cy)) < 2.0

    def test_deterministic(self, blobs):
        from wildreid.features import extract_features
        again = extract_features(textured_image(seed=1), image_id="blobs")
        assert again == blobs
        assert again.digest == blobs.digest

    def test_constant_image_has_no_keypoints(self):
        from wildreid.features import extract_features
        fs = extract_features(np.full((128, 128), 90, dtype=np.uint8), image_id="flat")
        assert len(fs) == 0
        assert fs.descriptors.shape == (0, 128)

    def test_too_small(self):
        from wildreid.features import FeatureError, extract_features
        with pytest.raises(FeatureError, match="minimum"):
            extract_features(np.zeros((8, 40), dtype=np.uint8))

    def test_bbox_crop_frame(self):
        from wildreid.catalog import BBox
        from wildreid.features import extract_features
        img = textured_image(seed=2, size=300)
        fs = extract_features(img, bbox=BBox(50, 60, 200, 180))
        assert len(fs) > 0
        assert fs.keypoints[:, 0].max() < 200
        assert fs.keypoints[:, 1].max() < 180

    def test_bbox_outside_image(self):
        from wildreid.features import FeatureError, extract_features
        with pytest.raises(FeatureError, match="not inside"):
            extract_features(textured_image(seed=2, size=100), bbox=(50, 50, 80, 80))

    def test_max_keypoints_keeps_strongest(self, blobs):
        from wildreid.features import FeatureParams, extract_features
        capped = extract_features(textured_image(seed=1), params=FeatureParams(max_keypoints=15), image_id="blobs")
        assert len(capped) == 15
        assert np.array_equal(capped.keypoints, blobs.keypoints[:15])

    def test_colour_input(self):
        import cv2
        from wildreid.features import extract_features
        gray = textured_image(seed=3)
        bgr = cv2.cvtColor(gray, cv2.COLOR_GRAY2BGR)
        assert extract_features(bgr) == extract_features(gray)

    def test_parameter_hash_changes(self):
        from wildreid.features import FeatureParams
        assert FeatureParams().parameter_hash() == FeatureParams().parameter_hash()
        assert FeatureParams().parameter_hash() != FeatureParams(sigma=2.0).parameter_hash()


class TestLoadImage:
    def test_png_round_trip(self, tmp_path):
        import cv2
        from wildreid.features import load_image
        img = textured_image(seed=4, size=64)
        cv2.imwrite(str(tmp_path / "a.png"), img)
        assert np.array_equal(load_image(tmp_path / "a.png"), img)

    def test_unreadable(self, tmp_path):
        from wildreid.features.imageio import ImageReadError, load_image
        (tmp_path / "bad.png").write_bytes(b"not a png")
        with pytest.raises(ImageReadError):
            load_image(tmp_path / "bad.png")
        with pytest.raises(ImageReadError):
            load_image(tmp_path / "missing.png")


# ── Matching ─────────────────────────────────────────────────────────────────

class TestMatch:
    def test_self_match(self, blobs):
        from wildreid.features import match_descriptors
        corr = match_descriptors(blobs, blobs.with_id("copy"), top_k=10)
        assert len(corr) == 10
        assert np.array_equal(corr.idx_a, corr.idx_b)
        assert corr.s_max == pytest.approx(0.0, abs=1e-6)

    def test_one_to_one_and_sorted(self, blobs):
        from wildreid.features import extract_features, match_descriptors
        other = extract_features(textured_image(seed=9), image_id="other")
        corr = match_descriptors(blobs, other, top_k=10)
        assert len(set(corr.idx_a.tolist())) == len(corr)
        assert len(set(corr.idx_b.tolist())) == len(corr)
        assert np.all(np.diff(corr.similarity) <= 0)

    def test_symmetric(self, blobs):
        from wildreid.features import extract_features, match_descriptors
        other = extract_features(textured_image(seed=9), image_id="other")
        ab = match_descriptors(blobs, other)
        ba = match_descriptors(other, blobs)
        assert np.array_equal(ab.idx_a, ba.idx_b)
        assert np.array_equal(ab.idx_b, ba.idx_a)
        assert np.array_equal(ab.similarity, ba.similarity)

    def test_fewer_than_k(self):
        from wildreid.features import FeatureSet, match_descriptors
        rng = np.random.default_rng(0)
        d = rng.random((3, 128))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        fs = FeatureSet("a", rng.random((3, 4)), d)
        assert len(match_descriptors(fs, fs.with_id("b"), top_k=10)) == 3

    def test_empty(self, blobs):
        from wildreid.features import FeatureSet, match_descriptors
        empty = FeatureSet("z", np.zeros((0, 4)), np.zeros((0, 128)))
        corr = match_descriptors(blobs, empty)
        assert len(corr) == 0
        assert corr.s_max is None

    def test_mutual_subset(self, blobs):
        from wildreid.features import extract_features, match_descriptors
        other = extract_features(textured_image(seed=9), image_id="other")
        mutual = match_descriptors(blobs, other, selection="mutual")
        assert len(mutual) <= 10

    def test_bad_selection(self, blobs):
        from wildreid.features import match_descriptors
        with pytest.raises(ValueError):
            match_descriptors(blobs, blobs, selection="ratio")

    def test_quarter_turn_matches(self):
        from wildreid.features import extract_features, match_descriptors
        img = textured_image(seed=4)
        size = img.shape[1]
        a = extract_features(img, image_id="a")
        b = extract_features(np.ascontiguousarray(np.rot90(img)), image_id="b")
        corr = match_descriptors(a, b, top_k=10)
        # counter-clockwise turn: (x, y) -> (y, W - 1 - x)
        expected = np.column_stack([corr.pts_a[:, 1], size - 1 - corr.pts_a[:, 0]])
        close = -corr.similarity < 0.35
        placed = np.linalg.norm(corr.pts_b - expected, axis=1) < 2.0
        assert np.count_nonzero(close & placed) >= 5

    def test_shift_moves_keypoints(self):
        from wildreid.features import extract_features
        big = textured_image(seed=6, size=320, blobs=90)
        dx, dy = 32, 16
        a = extract_features(big[:256, :256], image_id="a")
        b = extract_features(big[dy:dy + 256, dx:dx + 256], image_id="b")
        inner = np.all((a.points >= 64) & (a.points <= 192), axis=1)
        assert inner.sum() > 10
        shifted = a.points[inner] - np.array([dx, dy], dtype=np.float32)
        gaps = np.min(np.linalg.norm(shifted[:, None, :] - b.points[None, :, :], axis=2), axis=1)
        assert np.mean(gaps <= 0.5) >= 0.8

    def test_min_separation_counts_a_location_once(self):
        from wildreid.features import FeatureSet, match_descriptors
        rng = np.random.default_rng(5)
        d = rng.random((6, 128))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        kps = np.zeros((6, 4))
        kps[:, 0] = [20, 20, 80, 140, 200, 60]
        kps[:, 1] = [30, 30, 90, 150, 40, 200]
        fs = FeatureSet("a", kps, d)
        assert len(match_descriptors(fs, fs.with_id("b"), top_k=10)) == 6
        spaced = match_descriptors(fs, fs.with_id("b"), top_k=10, min_separation=2.0)
        assert len(spaced) == 5
        assert len({tuple(p) for p in spaced.pts_a.tolist()}) == 5

    def test_negative_min_separation(self, blobs):
        from wildreid.features import match_descriptors
        with pytest.raises(ValueError, match="min_separation"):
            match_descriptors(blobs, blobs.with_id("b"), min_separation=-1.0)


# ── Cache files ──────────────────────────────────────────────────────────────

class TestFeatureCache:
    def test_file_round_trip(self, tmp_path, blobs):
        from wildreid.features import read_feature_file, write_feature_file
        path = write_feature_file(tmp_path / "x.wrfs", blobs)
        assert read_feature_file(path, "blobs") == blobs

    def test_bad_magic(self, tmp_path, blobs):
        from wildreid.features import FeatureError, read_feature_file, write_feature_file
        path = write_feature_file(tmp_path / "x.wrfs", blobs)
        data = bytearray(path.read_bytes())
        data[:4] = b"NOPE"
        path.write_bytes(bytes(data))
        with pytest.raises(FeatureError, match="magic"):
            read_feature_file(path)

    def test_truncated(self, tmp_path, blobs):
        from wildreid.features import FeatureError, read_feature_file, write_feature_file
        path = write_feature_file(tmp_path / "x.wrfs", blobs)
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(FeatureError, match="size"):
            read_feature_file(path)

    def test_cache_hit_miss_and_corrupt(self, tmp_path, blobs):
        import sqlite3
        from wildreid.core.store import CacheStore
        from wildreid.features import FeatureCache, feature_cache_key
        store = CacheStore(tmp_path / "cache.db")
        cache = FeatureCache(tmp_path / "features", store)
        key = feature_cache_key("abc", None, "p1")
        assert cache.get(key) is None
        cache.put(key, blobs, "p1")
        indexed = "SELECT n_keypoints FROM feature_index WHERE cache_key = ?"
        with sqlite3.connect(store.db_path) as conn:
            assert conn.execute(indexed, (key,)).fetchall() == [(len(blobs),)]
        assert cache.get(key, "blobs") == blobs
        cache.path_for(key).write_bytes(b"junk")
        assert cache.get(key) is None
        assert not cache.path_for(key).exists()
        with sqlite3.connect(store.db_path) as conn:
            assert conn.execute(indexed, (key,)).fetchall() == []
        assert (cache.hits, cache.misses) == (1, 2)

    def test_key_depends_on_bbox_and_params(self):
        from wildreid.features import feature_cache_key
        base = feature_cache_key("h", None, "p")
        assert base != feature_cache_key("h", (0, 0, 10, 10), "p")
        assert base != feature_cache_key("h", None, "q")


# ── Blocking ─────────────────────────────────────────────────────────────────

class TestBlocking:
    def test_all_pairs(self):
        from wildreid.features import all_pairs
        assert all_pairs(["c", "a", "b"]) == [("a", "b"), ("a", "c"), ("b", "c")]

    def test_candidate_pairs_subset(self):
        from wildreid.features import all_pairs, candidate_pairs, extract_features
        sets = [extract_features(textured_image(seed=s, size=128), image_id=f"i{s}") for s in range(6)]
        pairs = candidate_pairs(sets, 1)
        assert set(pairs) <= set(all_pairs([f.image_id for f in sets]))
        assert all(a < b for a, b in pairs)
        involved = {i for p in pairs for i in p}
        assert involved == {f.image_id for f in sets}

    def test_off_means_all_pairs(self):
        from wildreid.features import all_pairs, candidate_pairs, extract_features
        sets = [extract_features(textured_image(seed=s, size=96), image_id=f"i{s}") for s in range(4)]
        assert candidate_pairs(sets, 0) == all_pairs([f.image_id for f in sets])
