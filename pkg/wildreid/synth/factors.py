"""
Capture factors and appearance drift.

EncounterFactors are drawn once per encounter and shared by its images.
Drift is a per-cell Brownian shade walk, a pigment layer that renews every
``renewal_days`` and Poisson-arriving permanent scratches, all fixed
functions of (individual stream, day). A zero drift rate freezes all three.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from wildreid.synth.patterns import BAND_WIDTH

KNOT_DAYS = 7
DAYS_PER_YEAR = 365.25


@dataclass(frozen=True)
class EraPreset:
    name: str
    resolution_scale: float
    contrast: float
    brightness: float
    base_blur: float


NEUTRAL_ERA = EraPreset("neutral", 1.0, 1.0, 0.0, 0.0)

ERA_PRESETS: tuple[EraPreset, ...] = (
    EraPreset("low_res_dull", 0.5, 0.8, -10.0, 0.6),
    EraPreset("high_res_dull", 1.0, 0.85, -5.0, 0.3),
    EraPreset("high_res_flash", 1.0, 1.15, 12.0, 0.0),
)


def era_for(day: date, start: date, end: date) -> EraPreset:
    """Era by which third of the date range the day falls in."""
    span = max((end - start).days + 1, 1)
    third = min(int(3 * (day - start).days / span), 2)
    return ERA_PRESETS[max(third, 0)]


def blend_era(era: EraPreset, strength: float) -> EraPreset:
    if strength >= 1.0:
        return era
    s = max(strength, 0.0)

    def mix(neutral: float, value: float) -> float:
        return neutral + s * (value - neutral)

    return EraPreset(
        era.name if s > 0 else NEUTRAL_ERA.name,
        mix(1.0, era.resolution_scale),
        mix(1.0, era.contrast),
        mix(0.0, era.brightness),
        mix(0.0, era.base_blur),
    )


@dataclass(frozen=True)
class Scratch:
    day: int            # days since range start
    p0: tuple[float, float]
    p1: tuple[float, float]
    thickness: int
    intensity: float


@dataclass(frozen=True, eq=False)
class DriftState:
    shade_offsets: np.ndarray
    scratches: tuple[Scratch, ...]
    pigment: tuple[tuple[int, float], ...] = ((0, 1.0),)   # (generation, weight)

    def summary(self) -> dict:
        return {
            "mean_abs_shade_offset": round(float(np.abs(self.shade_offsets).mean()), 6)
            if len(self.shade_offsets) else 0.0,
            "n_scratches": len(self.scratches),
            "pigment": [[g, round(w, 6)] for g, w in self.pigment],
        }


class DriftModel:
    """Drift trajectory of one head band over the whole date range."""

    def __init__(self, n_cells: int, n_days: int, drift_rate: float, scratch_rate: float,
                 rng: np.random.Generator, renewal_days: int = 60) -> None:
        self.frozen = drift_rate == 0
        self.renewal_days = max(int(renewal_days), 1)
        n_knots = n_days // KNOT_DAYS + 2
        self.knot_days = np.arange(n_knots) * KNOT_DAYS
        step_sd = drift_rate * math.sqrt(KNOT_DAYS / DAYS_PER_YEAR)
        steps = rng.standard_normal((n_knots - 1, n_cells)) * step_sd
        self.path = np.vstack([np.zeros((1, n_cells)), np.cumsum(steps, axis=0)])

        rate = 0.0 if self.frozen else scratch_rate
        n_scratch = int(rng.poisson(rate * n_days / DAYS_PER_YEAR)) if rate > 0 else 0
        days = np.sort(rng.integers(0, max(n_days, 1), n_scratch)) if n_scratch else np.zeros(0, int)
        scratches = []
        for d in days:
            x0, y0 = rng.random(2)
            x0 *= BAND_WIDTH
            angle = rng.uniform(0.0, math.pi)
            length = rng.uniform(0.08, 0.3)
            scratches.append(Scratch(
                day=int(d),
                p0=(float(x0), float(y0)),
                p1=(float(x0 + length * math.cos(angle)), float(y0 + length * math.sin(angle))),
                thickness=int(rng.integers(1, 3)),
                intensity=float(rng.uniform(200.0, 240.0)),
            ))
        self.scratches = tuple(scratches)

    def pigment(self, day: int) -> tuple[tuple[int, float], ...]:
        """Two consecutive pigment generations blended at constant variance."""
        if self.frozen:
            return ((0, 1.0),)
        t = max(float(day), 0.0) / self.renewal_days
        g = int(t)
        phase = 0.5 * math.pi * (t - g)
        return ((g, math.cos(phase)), (g + 1, math.sin(phase)))

    def state(self, day: int) -> DriftState:
        t = float(np.clip(day, 0, self.knot_days[-1]))
        k = min(int(t // KNOT_DAYS), len(self.knot_days) - 2)
        w = (t - self.knot_days[k]) / KNOT_DAYS
        offsets = (1.0 - w) * self.path[k] + w * self.path[k + 1]
        return DriftState(offsets, tuple(s for s in self.scratches if s.day <= day), self.pigment(day))


@dataclass(frozen=True, eq=False)
class EncounterFactors:
    date: date
    era: str
    tint: np.ndarray            # (3,) RGB multipliers
    blur_sigma: float
    noise_sigma: float
    warp_magnitude: float       # corner jitter as a fraction of image size
    contrast: float
    brightness: float
    resolution_scale: float
    drift: DriftState

    def record(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "era": self.era,
            "tint": [round(float(v), 6) for v in self.tint],
            "blur_sigma": round(self.blur_sigma, 6),
            "noise_sigma": round(self.noise_sigma, 6),
            "warp_magnitude": round(self.warp_magnitude, 6),
            "contrast": round(self.contrast, 6),
            "brightness": round(self.brightness, 6),
            "resolution_scale": round(self.resolution_scale, 6),
            "drift": self.drift.summary(),
        }

    def digest(self) -> str:
        h = hashlib.sha256(json.dumps(self.record(), sort_keys=True).encode())
        h.update(np.ascontiguousarray(self.drift.shade_offsets, dtype=np.float64).tobytes())
        return h.hexdigest()


def identity_factors(day: date, n_cells: int) -> EncounterFactors:
    return EncounterFactors(
        date=day, era=NEUTRAL_ERA.name, tint=np.ones(3), blur_sigma=0.0, noise_sigma=0.0,
        warp_magnitude=0.0, contrast=1.0, brightness=0.0, resolution_scale=1.0,
        drift=DriftState(np.zeros(n_cells), ()),
    )


def draw_encounter_factors(
    day: date,
    era: EraPreset,
    drift: DriftState,
    rng: np.random.Generator,
    tint_sigma: float,
    blur_max: float,
    noise_max: float,
    warp_max: float,
) -> EncounterFactors:
    tint = 1.0 + tint_sigma * rng.standard_normal(3)
    return EncounterFactors(
        date=day,
        era=era.name,
        tint=np.clip(tint, 0.5, 1.5),
        blur_sigma=era.base_blur + blur_max * float(rng.random()),
        noise_sigma=noise_max * float(rng.random()),
        warp_magnitude=warp_max * float(rng.random()),
        contrast=era.contrast,
        brightness=era.brightness,
        resolution_scale=era.resolution_scale,
        drift=drift,
    )
