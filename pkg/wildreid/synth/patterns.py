"""
Per-individual scale patterns.

Each individual owns one head band: a seeded Voronoi tessellation over
[0, BAND_WIDTH) x [0, 1) with dark cell outlines, a fixed fine speckle and
a renewing pigment layer. A photo sees a unit-wide window of the band
chosen by its orientation. The left and right flank windows are disjoint;
the crown windows between them overlap both neighbours, so flank photos of
one animal only connect through intermediate poses. Front and underside
windows overlap nothing.

Cell geometry never changes over an individual's life; shading, pigment
and scratches drift.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import cv2
import numpy as np
from scipy.spatial import cKDTree

OUTLINE_WIDTH = 1.5     # pixels
OUTLINE_DEPTH = 35.0
SPECKLE_AMPLITUDE = 4.0
PIGMENT_AMPLITUDE = 30.0
PIGMENT_BLUR = 2.0      # pixels at the rendered size

BAND_WIDTH = 5.0
VIEW_OFFSETS: dict[str, float] = {
    "left": 0.0,
    "top-left": 0.375,
    "top": 0.75,
    "top-right": 1.125,
    "right": 1.5,
    "front": 2.75,
    "bottom": 4.0,
}


@dataclass(frozen=True, eq=False)
class IndividualPattern:
    individual_id: str
    pattern_seed: int
    sites: np.ndarray          # (n, 2) in band coordinates
    shades: np.ndarray         # (n,) base grey level per cell
    base_color: np.ndarray     # (3,) RGB multipliers
    speckle_seed: int
    pigment_seed: int

    @property
    def n_cells(self) -> int:
        return len(self.sites)


@dataclass(frozen=True, eq=False)
class PatternRaster:
    labels: np.ndarray         # (H, W) cell index per pixel
    outline: np.ndarray        # (H, W) in [0, 1], 1 on cell borders
    speckle: np.ndarray        # (H, W) zero-mean texture
    column: int                # first band column of the window


def make_pattern(
    individual_id: str,
    pattern_seed: int,
    cells: tuple[int, int] = (20, 40),
) -> IndividualPattern:
    """``cells`` bounds the number of cells per unit-wide view."""
    rng = np.random.Generator(np.random.PCG64(pattern_seed))
    per_view = int(rng.integers(cells[0], cells[1] + 1))
    n = int(round(per_view * BAND_WIDTH))
    sites = rng.random((n, 2))
    sites[:, 0] *= BAND_WIDTH
    return IndividualPattern(
        individual_id=individual_id,
        pattern_seed=int(pattern_seed),
        sites=sites,
        shades=rng.uniform(60.0, 200.0, n),
        base_color=rng.uniform(0.8, 1.0, 3) * np.array([0.95, 1.0, 0.8]),
        speckle_seed=int(rng.integers(0, 2**63 - 1)),
        pigment_seed=int(rng.integers(0, 2**63 - 1)),
    )


def view_column(orientation: str, size: int) -> int:
    try:
        return int(round(VIEW_OFFSETS[orientation] * size))
    except KeyError:
        raise ValueError(f"no band window for orientation '{orientation}'") from None


@lru_cache(maxsize=32)
def _band_noise(seed: int, size: int, sigma: float) -> np.ndarray:
    """Blurred unit-variance noise over the whole band at ``size`` px per view."""
    width = int(round(BAND_WIDTH * size))
    noise = np.random.Generator(np.random.PCG64(seed)).standard_normal((size, width)).astype(np.float32)
    field = cv2.GaussianBlur(noise, (0, 0), sigmaX=sigma, borderType=cv2.BORDER_REFLECT)
    field /= max(float(field.std()), 1e-6)
    field.setflags(write=False)
    return field


@lru_cache(maxsize=256)
def _raster(speckle_seed: int, sites_key: bytes, size: int, column: int) -> PatternRaster:
    sites = np.frombuffer(sites_key, dtype=np.float64).reshape(-1, 2)
    xs = (column + np.arange(size, dtype=np.float64) + 0.5) / size
    ys = (np.arange(size, dtype=np.float64) + 0.5) / size
    xx, yy = np.meshgrid(xs, ys)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    dist, idx = cKDTree(sites).query(pts, k=2)
    labels = idx[:, 0].reshape(size, size).astype(np.int32)
    gap = (dist[:, 1] - dist[:, 0]).reshape(size, size) * size
    outline = np.clip(1.0 - gap / OUTLINE_WIDTH, 0.0, 1.0).astype(np.float32)

    speckle = _band_noise(speckle_seed, size, 1.2)[:, column:column + size] * np.float32(SPECKLE_AMPLITUDE)
    for arr in (labels, outline, speckle):
        arr.setflags(write=False)
    return PatternRaster(labels, outline, speckle, column)


def rasterize(pattern: IndividualPattern, size: int, orientation: str = "left") -> PatternRaster:
    return _raster(pattern.speckle_seed, np.ascontiguousarray(pattern.sites, dtype=np.float64).tobytes(),
                   int(size), view_column(orientation, size))


def pigment_field(pattern: IndividualPattern, weights: tuple[tuple[int, float], ...],
                  raster: PatternRaster) -> np.ndarray:
    """Weighted sum of the pattern's pigment generations, cropped to the raster's window."""
    size = raster.labels.shape[0]
    out = np.zeros((size, size), dtype=np.float32)
    for generation, w in weights:
        if w == 0.0:
            continue
        seed = int(np.random.SeedSequence(pattern.pigment_seed, spawn_key=(generation,)).generate_state(1)[0])
        band = _band_noise(seed, size, PIGMENT_BLUR)
        out += np.float32(w * PIGMENT_AMPLITUDE) * band[:, raster.column:raster.column + size]
    return out


def shade_image(pattern: IndividualPattern, raster: PatternRaster,
                shade_offsets: np.ndarray | None = None,
                pigment: np.ndarray | None = None) -> np.ndarray:
    """Grey float32 image: cell shades (+ drift offsets), darkened outlines, speckle, pigment."""
    shades = pattern.shades if shade_offsets is None else pattern.shades + shade_offsets
    shades = np.clip(shades, 20.0, 235.0)
    img = shades[raster.labels].astype(np.float32)
    img -= OUTLINE_DEPTH * raster.outline
    img += raster.speckle
    if pigment is not None:
        img += pigment
    return img
