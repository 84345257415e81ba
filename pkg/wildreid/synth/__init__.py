"""Deterministic synthetic encounter datasets."""
from wildreid.synth.factors import (
    ERA_PRESETS,
    DriftModel,
    DriftState,
    EncounterFactors,
    EraPreset,
    era_for,
    identity_factors,
)
from wildreid.synth.generator import SynthConfig, SynthError, generate_dataset, individual_pattern
from wildreid.synth.patterns import VIEW_OFFSETS, IndividualPattern, make_pattern, rasterize, shade_image
from wildreid.synth.render import render_individual, render_with_warp

__all__ = [
    "ERA_PRESETS", "DriftModel", "DriftState", "EncounterFactors", "EraPreset", "era_for",
    "identity_factors",
    "SynthConfig", "SynthError", "generate_dataset", "individual_pattern",
    "VIEW_OFFSETS", "IndividualPattern", "make_pattern", "rasterize", "shade_image",
    "render_individual", "render_with_warp",
]
