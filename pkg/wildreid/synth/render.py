"""
Rasterize one photo of an individual.

Order: band window, drift shading, pigment and scratches → projective warp →
tint, contrast and brightness → blur and resolution loss → sensor noise.
"""
from __future__ import annotations

import cv2
import numpy as np

from wildreid.synth.factors import EncounterFactors
from wildreid.synth.patterns import IndividualPattern, pigment_field, rasterize, shade_image


def _draw_scratches(img: np.ndarray, factors: EncounterFactors, size: int, column: int) -> None:
    for s in factors.drift.scratches:
        p0 = (int(round(s.p0[0] * size)) - column, int(round(s.p0[1] * size)))
        p1 = (int(round(s.p1[0] * size)) - column, int(round(s.p1[1] * size)))
        cv2.line(img, p0, p1, color=float(s.intensity), thickness=s.thickness, lineType=cv2.LINE_AA)


def random_warp(rng: np.random.Generator, magnitude: float, size: int) -> np.ndarray:
    corners = np.array([[0, 0], [size, 0], [size, size], [0, size]], dtype=np.float32)
    jitter = rng.uniform(-1.0, 1.0, (4, 2)).astype(np.float32) * np.float32(magnitude * size)
    return cv2.getPerspectiveTransform(corners, corners + jitter)


def render_with_warp(
    pattern: IndividualPattern,
    factors: EncounterFactors,
    rng_stream: np.random.Generator,
    size: int = 256,
    orientation: str = "left",
) -> tuple[np.ndarray, np.ndarray]:
    """Rendered uint8 RGB image and the 3×3 warp applied (identity when none)."""
    raster = rasterize(pattern, size, orientation)
    pigment = pigment_field(pattern, factors.drift.pigment, raster)
    grey = shade_image(pattern, raster, factors.drift.shade_offsets, pigment)
    _draw_scratches(grey, factors, size, raster.column)
    img = grey[:, :, None] * pattern.base_color[None, None, :].astype(np.float32)

    warp = np.eye(3)
    if factors.warp_magnitude > 0:
        warp = random_warp(rng_stream, factors.warp_magnitude, size)
        img = cv2.warpPerspective(img, warp, (size, size), flags=cv2.INTER_LINEAR,
                                  borderMode=cv2.BORDER_REFLECT)

    img = img * factors.tint[None, None, :].astype(np.float32)
    if factors.contrast != 1.0 or factors.brightness != 0.0:
        img = (img - 128.0) * np.float32(factors.contrast) + np.float32(128.0 + factors.brightness)

    if factors.blur_sigma > 0:
        img = cv2.GaussianBlur(img, (0, 0), sigmaX=factors.blur_sigma, borderType=cv2.BORDER_REFLECT)
    if factors.resolution_scale < 1.0:
        small = max(8, int(round(size * factors.resolution_scale)))
        img = cv2.resize(img, (small, small), interpolation=cv2.INTER_AREA)
        img = cv2.resize(img, (size, size), interpolation=cv2.INTER_LINEAR)

    if factors.noise_sigma > 0:
        img = img + rng_stream.standard_normal(img.shape).astype(np.float32) * np.float32(factors.noise_sigma)

    return np.clip(np.rint(img), 0, 255).astype(np.uint8), np.asarray(warp, dtype=np.float64)


def render_individual(
    pattern: IndividualPattern,
    factors: EncounterFactors,
    rng_stream: np.random.Generator,
    size: int = 256,
    orientation: str = "left",
) -> np.ndarray:
    return render_with_warp(pattern, factors, rng_stream, size, orientation)[0]
