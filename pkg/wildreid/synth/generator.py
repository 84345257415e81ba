"""
Synthetic encounter datasets.

RNG streams hang off one master seed (numpy SeedSequence spawn keys):
  (i, 0)            individual i: pattern seed
  (i, 1)            encounter schedule
  (i, 2)            drift of the head band
  (i, 3, k)         factors of encounter k
  (i, 3, k, j)      image j of encounter k (warp, noise, orientation)
so rendering order and parallelism never change the output.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from pathlib import Path

import cv2
import numpy as np

from wildreid.catalog.manifest import BBox, Catalog, ImageRecord, Orientation, write_manifest
from wildreid.core.errors import ValidationError
from wildreid.core.pool import WorkerPool
from wildreid.synth.factors import DriftModel, blend_era, draw_encounter_factors, era_for
from wildreid.synth.patterns import VIEW_OFFSETS, IndividualPattern, make_pattern
from wildreid.synth.render import render_individual
from wildreid.utils.logger import get_logger

log = get_logger("synth")

META_FILE = "synth-meta.json"
MANIFEST_FILE = "manifest.csv"


class SynthError(ValidationError):
    pass


@dataclass
class SynthConfig:
    n_individuals: int = 50
    encounters_per_individual: int = 10
    images_per_encounter: int = 3
    image_size: int = 256
    date_start: date = date(2016, 1, 1)
    date_end: date = date(2020, 12, 31)
    drift_rate: float = 40.0          # shade std per sqrt(year)
    scratch_rate: float = 1.5         # scratches per year
    pigment_days: int = 60            # pigment renewal period
    tint_sigma: float = 0.06
    blur_max: float = 1.0
    noise_max: float = 4.0
    warp_max: float = 0.04            # corner jitter, fraction of image size
    era_strength: float = 1.0
    cells_min: int = 20
    cells_max: int = 40
    recruitment_spread: float = 0.6
    orientations: list[str] = field(default_factory=lambda: ["left"])
    bbox_margin: int = 0
    master_seed: int = 2023

    @property
    def n_days(self) -> int:
        return (self.date_end - self.date_start).days + 1

    def validate(self) -> None:
        for name in ("n_individuals", "encounters_per_individual", "images_per_encounter"):
            if getattr(self, name) < 1:
                raise SynthError(f"{name} must be at least 1")
        if self.date_end < self.date_start:
            raise SynthError(f"empty date range {self.date_start}..{self.date_end}")
        if self.image_size < 32:
            raise SynthError("image_size must be at least 32")
        if not 2 <= self.cells_min <= self.cells_max:
            raise SynthError("need 2 <= cells_min <= cells_max")
        for name in ("drift_rate", "scratch_rate", "tint_sigma", "blur_max", "noise_max", "warp_max",
                     "era_strength"):
            if getattr(self, name) < 0:
                raise SynthError(f"{name} must be nonnegative")
        if not 0.0 < self.recruitment_spread <= 1.0:
            raise SynthError("recruitment_spread must lie in (0, 1]")
        if self.pigment_days < 1:
            raise SynthError("pigment_days must be at least 1")
        if not self.orientations:
            raise SynthError("at least one orientation is required")
        for o in self.orientations:
            if o not in VIEW_OFFSETS:
                raise SynthError(f"'{o}' is not a renderable orientation")
        if self.bbox_margin < 0 or self.image_size - 2 * self.bbox_margin < 16:
            raise SynthError("bbox_margin leaves a head box smaller than 16 px")
        latest_first = int(self.recruitment_spread * self.n_days)
        if self.n_days - latest_first < self.encounters_per_individual:
            raise SynthError("date range too short for the requested encounters per individual")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["date_start"] = self.date_start.isoformat()
        d["date_end"] = self.date_end.isoformat()
        return d


def _stream(cfg: SynthConfig, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.master_seed, spawn_key=key)))


def individual_ids(cfg: SynthConfig) -> list[str]:
    width = max(3, len(str(cfg.n_individuals - 1)))
    return [f"t{i:0{width}d}" for i in range(cfg.n_individuals)]


def pattern_seed(cfg: SynthConfig, index: int) -> int:
    ss = np.random.SeedSequence(cfg.master_seed, spawn_key=(index, 0))
    return int(ss.generate_state(1, np.uint64)[0])


def individual_pattern(cfg: SynthConfig, index: int) -> IndividualPattern:
    """The head band of individual ``index``; every orientation renders a window of it."""
    return make_pattern(individual_ids(cfg)[index], pattern_seed(cfg, index), (cfg.cells_min, cfg.cells_max))


def encounter_days(cfg: SynthConfig, index: int) -> list[int]:
    """Distinct day offsets, after the individual's first possible sighting."""
    rng = _stream(cfg, index, 1)
    first = int(rng.integers(0, max(1, int(cfg.recruitment_spread * cfg.n_days))))
    days = rng.choice(np.arange(first, cfg.n_days), size=cfg.encounters_per_individual, replace=False)
    return sorted(int(d) for d in days)


@dataclass
class _Job:
    cfg: SynthConfig
    index: int
    out_dir: str


def _render_individual_images(job: _Job) -> dict:
    cfg, i = job.cfg, job.index
    ind = individual_ids(cfg)[i]
    pattern = individual_pattern(cfg, i)
    drift = DriftModel(pattern.n_cells, cfg.n_days, cfg.drift_rate, cfg.scratch_rate, _stream(cfg, i, 2),
                       renewal_days=cfg.pigment_days)
    img_dir = Path(job.out_dir) / "images" / ind
    img_dir.mkdir(parents=True, exist_ok=True)

    rows: list[dict] = []
    encounters: list[dict] = []
    for k, offset in enumerate(encounter_days(cfg, i)):
        day = cfg.date_start + timedelta(days=offset)
        era = blend_era(era_for(day, cfg.date_start, cfg.date_end), cfg.era_strength)
        factors = draw_encounter_factors(day, era, drift.state(offset), _stream(cfg, i, 3, k),
                                         cfg.tint_sigma, cfg.blur_max, cfg.noise_max, cfg.warp_max)
        images = []
        for j in range(cfg.images_per_encounter):
            img_rng = _stream(cfg, i, 3, k, j)
            o = cfg.orientations[int(img_rng.integers(0, len(cfg.orientations)))] \
                if len(cfg.orientations) > 1 else cfg.orientations[0]
            image_id = f"{ind}-{day.strftime('%Y%m%d')}-{j}"
            rgb = render_individual(pattern, factors, img_rng, cfg.image_size, o)
            rel = Path("images") / ind / f"{image_id}.png"
            if not cv2.imwrite(str(Path(job.out_dir) / rel), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR)):
                raise SynthError(f"cannot write image {rel}")
            rows.append({"image_id": image_id, "individual_id": ind, "date": day, "orientation": o,
                         "image_path": rel.as_posix()})
            images.append({"image_id": image_id, "orientation": o,
                           "pixel_sha256": hashlib.sha256(rgb.tobytes()).hexdigest()})
        encounters.append({
            "individual_id": ind,
            "factors": factors.record(),
            "factor_digest": factors.digest(),
            "images": images,
        })
    return {
        "individual": {
            "individual_id": ind,
            "pattern_seed": pattern.pattern_seed,
            "n_cells": pattern.n_cells,
        },
        "encounters": encounters,
        "rows": rows,
    }


def generate_dataset(cfg: SynthConfig, out_dir: str | Path, pool: WorkerPool | None = None) -> Catalog:
    """Render every image, then write ``manifest.csv`` and ``synth-meta.json`` under ``out_dir``."""
    cfg.validate()
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SynthError(f"cannot create output directory {out_dir}: {exc}") from exc

    jobs = [_Job(cfg, i, str(out_dir)) for i in range(cfg.n_individuals)]
    results = (pool or WorkerPool(1)).map(_render_individual_images, jobs)

    bbox = None
    if cfg.bbox_margin:
        m = cfg.bbox_margin
        bbox = BBox(m, m, cfg.image_size - 2 * m, cfg.image_size - 2 * m)
    records = [
        ImageRecord(r["image_id"], r["individual_id"], r["date"], Orientation(r["orientation"]),
                    r["image_path"], bbox)
        for res in results for r in res["rows"]
    ]
    catalog = Catalog(records, root=out_dir)
    write_manifest(catalog, out_dir / MANIFEST_FILE)

    meta = {
        "generator": "wildreid.synth",
        "config": cfg.to_dict(),
        "master_seed": cfg.master_seed,
        "individuals": [res["individual"] for res in results],
        "encounters": [e for res in results for e in res["encounters"]],
    }
    (out_dir / META_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for enc in meta["encounters"]:
        log.debug("encounter %s %s: %d images", enc["individual_id"],
                  enc["factors"]["date"], len(enc["images"]))
    log.info("Synthesized %d images of %d individuals under %s", len(catalog), cfg.n_individuals, out_dir)
    return catalog
