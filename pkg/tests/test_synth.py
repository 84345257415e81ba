"""Tests for wildreid.synth — patterns, drift, rendering and dataset generation."""
import json
import math
import pytest
from dataclasses import replace
from datetime import date
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np


def _tiny(**overrides):
    from wildreid.synth import SynthConfig
    cfg = SynthConfig(n_individuals=3, encounters_per_individual=3, images_per_encounter=2, image_size=64,
                      date_start=date(2018, 1, 1), date_end=date(2019, 12, 31), master_seed=11)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg


def _gated():
    from wildreid.verify import VerifyParams
    return VerifyParams(min_separation=2.0, residual_max=4.0)


# ── Patterns and drift ───────────────────────────────────────────────────────

class TestPatterns:
    def test_seeded(self):
        from wildreid.synth import make_pattern
        from wildreid.synth.patterns import BAND_WIDTH
        a = make_pattern("t000", 42)
        b = make_pattern("t000", 42)
        assert np.array_equal(a.sites, b.sites)
        assert np.array_equal(a.shades, b.shades)
        assert round(20 * BAND_WIDTH) <= a.n_cells <= round(40 * BAND_WIDTH)
        assert a.sites[:, 0].max() < BAND_WIDTH
        assert not np.array_equal(make_pattern("t001", 43).sites[:5], a.sites[:5])

    def test_individuals_get_distinct_seeds(self):
        from wildreid.synth.generator import pattern_seed
        cfg = _tiny(n_individuals=20)
        seeds = {pattern_seed(cfg, i) for i in range(20)}
        assert len(seeds) == 20

    def test_flanks_disjoint_and_bridged(self):
        from wildreid.synth import VIEW_OFFSETS
        assert VIEW_OFFSETS["left"] + 1.0 < VIEW_OFFSETS["right"]
        chain = ["left", "top-left", "top", "top-right", "right"]
        for a, b in zip(chain, chain[1:]):
            assert 0.0 < VIEW_OFFSETS[b] - VIEW_OFFSETS[a] < 1.0
        for other in ("front", "bottom"):
            assert all(abs(VIEW_OFFSETS[other] - VIEW_OFFSETS[o]) >= 1.0 for o in VIEW_OFFSETS if o != other)

    def test_overlapping_windows_share_pixels(self):
        from wildreid.synth import make_pattern, rasterize
        pattern = make_pattern("t000", 5)
        left = rasterize(pattern, 256, "left")
        oblique = rasterize(pattern, 256, "top-left")
        shift = oblique.column - left.column
        assert shift == 96
        assert np.array_equal(left.labels[:, shift:], oblique.labels[:, :256 - shift])
        assert np.array_equal(left.speckle[:, shift:], oblique.speckle[:, :256 - shift])

    def test_unknown_view(self):
        from wildreid.synth import make_pattern, rasterize
        with pytest.raises(ValueError, match="orientation"):
            rasterize(make_pattern("t000", 5), 64, "unknown")


class TestDrift:
    def test_state_is_function_of_day(self):
        from wildreid.synth import DriftModel
        model = DriftModel(25, 730, 40.0, 3.0, np.random.default_rng(0))
        assert np.array_equal(model.state(100).shade_offsets, model.state(100).shade_offsets)
        assert np.array_equal(model.state(0).shade_offsets, np.zeros(25))

    def test_scratches_accumulate(self):
        from wildreid.synth import DriftModel
        model = DriftModel(25, 3650, 40.0, 5.0, np.random.default_rng(1))
        counts = [len(model.state(d).scratches) for d in range(0, 3650, 100)]
        assert counts == sorted(counts)
        assert counts[-1] > 0

    def test_no_drift_freezes_everything(self):
        from wildreid.synth import DriftModel
        model = DriftModel(10, 3650, 0.0, 5.0, np.random.default_rng(2))
        assert not model.state(3000).shade_offsets.any()
        assert model.state(3000).scratches == ()
        assert model.state(3000).pigment == model.state(0).pigment == ((0, 1.0),)

    def test_pigment_renews(self):
        from wildreid.synth import DriftModel
        model = DriftModel(5, 3650, 40.0, 0.0, np.random.default_rng(3), renewal_days=60)
        assert model.state(0).pigment == ((0, 1.0), (1, 0.0))
        (g0, w0), (g1, w1) = model.state(30).pigment
        assert (g0, g1) == (0, 1)
        assert w0 == pytest.approx(math.sqrt(0.5))
        assert w0 ** 2 + w1 ** 2 == pytest.approx(1.0)
        assert not {g for g, _ in model.state(400).pigment} & {g for g, _ in model.state(0).pigment}

    def test_eras_by_thirds(self):
        from wildreid.synth import ERA_PRESETS, era_for
        start, end = date(2010, 1, 1), date(2012, 12, 31)
        assert era_for(start, start, end) is ERA_PRESETS[0]
        assert era_for(date(2011, 6, 1), start, end) is ERA_PRESETS[1]
        assert era_for(end, start, end) is ERA_PRESETS[2]

    def test_pixel_change_grows_with_gap(self):
        from wildreid.synth import DriftModel, identity_factors, make_pattern, render_individual
        gaps = [1, 7, 30, 365, 1825]
        totals = np.zeros(len(gaps))
        for seed in range(3):
            pattern = make_pattern(f"t{seed:03d}", 100 + seed)
            model = DriftModel(pattern.n_cells, 2000, 40.0, 1.5, np.random.default_rng(seed))
            plain = identity_factors(date(2016, 1, 1), pattern.n_cells)

            def render(day):
                img = render_individual(pattern, replace(plain, drift=model.state(day)),
                                        np.random.default_rng(0), 96)
                return img.astype(np.float64)

            base = render(0)
            totals += [np.abs(render(g) - base).mean() for g in gaps]
        assert list(totals) == sorted(totals)
        assert totals[-1] > totals[0]


# ── Rendering ────────────────────────────────────────────────────────────────

class TestRender:
    def test_identity_factors_ignore_rng_and_date(self):
        from wildreid.synth import identity_factors, make_pattern, render_individual
        pattern = make_pattern("t000", 5)
        a = render_individual(pattern, identity_factors(date(2016, 1, 1), pattern.n_cells),
                              np.random.default_rng(1), 96)
        b = render_individual(pattern, identity_factors(date(2020, 6, 1), pattern.n_cells),
                              np.random.default_rng(2), 96)
        assert a.shape == (96, 96, 3)
        assert a.dtype == np.uint8
        assert np.array_equal(a, b)

    def test_identity_warp_is_eye(self):
        from wildreid.synth import identity_factors, make_pattern, render_with_warp
        pattern = make_pattern("t000", 5)
        _, warp = render_with_warp(pattern, identity_factors(date(2016, 1, 1), pattern.n_cells),
                                   np.random.default_rng(0), 64)
        assert np.array_equal(warp, np.eye(3))

    def test_warp_only_is_recoverable(self):
        from wildreid.features import extract_features
        from wildreid.synth import identity_factors, make_pattern, render_individual, render_with_warp
        from wildreid.verify import verify_pair
        pattern = make_pattern("t000", 5)
        plain = identity_factors(date(2016, 1, 1), pattern.n_cells)
        base = render_individual(pattern, plain, np.random.default_rng(0), 256)
        warped, warp = render_with_warp(pattern, replace(plain, warp_magnitude=0.03),
                                        np.random.default_rng(3), 256)
        assert not np.allclose(warp, np.eye(3))
        d = verify_pair(extract_features(base, image_id="base"), extract_features(warped, image_id="warped"),
                        _gated())
        assert d.accepted
        assert d.cond_T_tilde < 100

    def test_different_individuals_differ(self):
        from wildreid.synth import identity_factors, make_pattern, render_individual
        p1, p2 = make_pattern("t000", 5), make_pattern("t001", 6)
        rng = np.random.default_rng(0)
        a = render_individual(p1, identity_factors(date(2016, 1, 1), p1.n_cells), rng, 64)
        b = render_individual(p2, identity_factors(date(2016, 1, 1), p2.n_cells), rng, 64)
        assert not np.array_equal(a, b)

    def test_flanks_link_only_through_intermediate_poses(self):
        from wildreid.features import extract_features
        from wildreid.graph import MatchGraph
        from wildreid.synth import identity_factors, make_pattern, render_individual
        from wildreid.verify import verify_pair
        pattern = make_pattern("t000", 5)
        plain = identity_factors(date(2016, 1, 1), pattern.n_cells)
        views = ["left", "top-left", "top", "top-right", "right"]
        feats = {v: extract_features(render_individual(pattern, plain, np.random.default_rng(0), 256, v),
                                     image_id=v) for v in views}
        edges = []
        for i, a in enumerate(views):
            for b in views[i + 1:]:
                if verify_pair(feats[a], feats[b], _gated()).accepted:
                    edges.append((a, b))
        for a, b in zip(views, views[1:]):
            assert (a, b) in edges or (b, a) in edges
        assert ("left", "right") not in edges
        graph = MatchGraph(views, edges)
        assert graph.connected("left", "right")
        assert not graph.without(["top-left", "top", "top-right"]).connected("left", "right")


# ── generate_dataset ─────────────────────────────────────────────────────────

class TestGenerate:
    def test_layout_and_catalog(self, tmp_path):
        from wildreid.catalog import ingest_manifest
        from wildreid.synth import generate_dataset
        cat = generate_dataset(_tiny(), tmp_path)
        assert len(cat) == 3 * 3 * 2
        assert cat.individuals == ["t000", "t001", "t002"]
        for ind in cat.individuals:
            assert len(cat.dates_of(ind)) == 3
        for rec in cat:
            assert cat.resolve_path(rec).is_file()
            assert date(2018, 1, 1) <= rec.date <= date(2019, 12, 31)
        assert ingest_manifest(tmp_path / "manifest.csv") == cat

    def test_meta_sidecar(self, tmp_path):
        from wildreid.synth import generate_dataset
        generate_dataset(_tiny(), tmp_path)
        meta = json.loads((tmp_path / "synth-meta.json").read_text())
        assert meta["master_seed"] == 11
        assert meta["config"]["date_start"] == "2018-01-01"
        assert len(meta["individuals"]) == 3
        assert {"individual_id", "pattern_seed", "n_cells"} == set(meta["individuals"][0])
        assert len(meta["encounters"]) == 9
        enc = meta["encounters"][0]
        assert enc["factors"]["date"].startswith("201")
        assert "pigment" in enc["factors"]["drift"]
        assert len(enc["factor_digest"]) == 64
        assert len(enc["images"]) == 2
        assert len(enc["images"][0]["pixel_sha256"]) == 64

    def test_deterministic(self, tmp_path):
        from wildreid.synth import generate_dataset
        generate_dataset(_tiny(), tmp_path / "a")
        generate_dataset(_tiny(), tmp_path / "b")
        for name in ("manifest.csv", "synth-meta.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_pool_does_not_change_output(self, tmp_path):
        from wildreid.core.pool import WorkerPool
        from wildreid.synth import generate_dataset
        generate_dataset(_tiny(), tmp_path / "inline")
        generate_dataset(_tiny(), tmp_path / "pooled", WorkerPool(2))
        assert (tmp_path / "inline" / "synth-meta.json").read_bytes() == \
            (tmp_path / "pooled" / "synth-meta.json").read_bytes()

    def test_seed_changes_output(self, tmp_path):
        from wildreid.synth import generate_dataset
        generate_dataset(_tiny(), tmp_path / "a")
        generate_dataset(_tiny(master_seed=12), tmp_path / "b")
        assert (tmp_path / "a" / "synth-meta.json").read_bytes() != (tmp_path / "b" / "synth-meta.json").read_bytes()

    def test_images_verify_against_themselves(self, tmp_path):
        from wildreid.features import extract_features, load_image
        from wildreid.synth import generate_dataset
        from wildreid.verify import verify_pair
        cat = generate_dataset(_tiny(n_individuals=2, encounters_per_individual=2, image_size=256), tmp_path)
        for rec in cat:
            fs = extract_features(load_image(cat.resolve_path(rec)), image_id=rec.image_id)
            d = verify_pair(fs, fs.with_id(rec.image_id + "~"))
            assert d.accepted, rec.image_id
            assert d.cond_T < 1.01
            assert d.cond_T_tilde < 1.01

    def test_drift_off_renders_identical(self, tmp_path):
        from wildreid.synth import generate_dataset
        cfg = _tiny(drift_rate=0.0, tint_sigma=0.0, blur_max=0.0, noise_max=0.0, warp_max=0.0,
                    era_strength=0.0)
        assert cfg.scratch_rate > 0
        generate_dataset(cfg, tmp_path)
        meta = json.loads((tmp_path / "synth-meta.json").read_text())
        by_individual: dict[str, set] = {}
        for enc in meta["encounters"]:
            for img in enc["images"]:
                by_individual.setdefault(enc["individual_id"], set()).add(img["pixel_sha256"])
        assert all(len(digests) == 1 for digests in by_individual.values())
        assert len({d for ds in by_individual.values() for d in ds}) == 3

    def test_bbox_and_orientations(self, tmp_path):
        from wildreid.synth import generate_dataset
        cat = generate_dataset(_tiny(bbox_margin=8, orientations=["left", "right"]), tmp_path)
        assert all(r.bbox.as_tuple() == (8, 8, 48, 48) for r in cat)
        assert {r.orientation.value for r in cat} <= {"left", "right"}


class TestSyntheticVerification:
    """Accept and reject rates with the gates the synthetic presets use."""

    @pytest.fixture(scope="class")
    def corpus(self, tmp_path_factory):
        from wildreid.features import extract_features, load_image
        from wildreid.synth import generate_dataset
        out = tmp_path_factory.mktemp("corpus")
        cat = generate_dataset(_tiny(n_individuals=6, encounters_per_individual=2, images_per_encounter=3,
                                     image_size=256, master_seed=29), out)
        feats = {r.image_id: extract_features(load_image(cat.resolve_path(r)), image_id=r.image_id) for r in cat}
        return cat, feats

    def test_rates(self, corpus):
        from wildreid.verify import verify_pairs
        cat, feats = corpus
        decisions = verify_pairs(feats, [(a, b) for a in feats for b in feats if a < b], _gated())
        same_day, other = [], []
        for d in decisions:
            ra, rb = cat.record(d.image_a), cat.record(d.image_b)
            if ra.individual_id != rb.individual_id:
                other.append(d.accepted)
            elif ra.date == rb.date:
                same_day.append(d.accepted)
        assert len(same_day) >= 6 * 2 * 3
        assert len(other) == 36 * 15
        assert sum(same_day) / len(same_day) >= 0.90
        assert 1 - sum(other) / len(other) >= 0.95



class TestSynthConfig:
    @pytest.mark.parametrize("overrides", [
        {"n_individuals": 0},
        {"image_size": 16},
        {"date_end": date(2017, 1, 1)},
        {"cells_min": 50},
        {"orientations": ["unknown"]},
        {"bbox_margin": 30},
        {"recruitment_spread": 0.0},
        {"encounters_per_individual": 500},
        {"pigment_days": 0},
    ])
    def test_invalid(self, overrides):
        from wildreid.synth import SynthError
        with pytest.raises(SynthError):
            _tiny(**overrides).validate()

    def test_defaults_valid(self):
        from wildreid.synth import SynthConfig
        SynthConfig().validate()
