"""Dataset metadata: manifest IO, encounters, dataset statistics."""
from wildreid.catalog.encounters import DatasetStats, Encounter, compute_stats, derive_encounters
from wildreid.catalog.manifest import (
    BBox,
    Catalog,
    ImageRecord,
    ManifestError,
    Orientation,
    ingest_manifest,
    write_manifest,
)

__all__ = [
    "BBox", "Catalog", "ImageRecord", "ManifestError", "Orientation",
    "ingest_manifest", "write_manifest",
    "DatasetStats", "Encounter", "compute_stats", "derive_encounters",
]
