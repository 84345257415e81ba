"""Encounter grouping and dataset statistics."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from datetime import date

from wildreid.catalog.manifest import Catalog
from wildreid.utils.logger import get_logger

log = get_logger("catalog.encounters")


@dataclass(frozen=True)
class Encounter:
    """All images of one individual taken on one day."""
    individual_id: str
    date: date | None
    image_ids: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.image_ids)


@dataclass(frozen=True)
class DatasetStats:
    n_image: int
    n_indiv: int
    n_enc: int
    span_days: int
    timestamp_coverage: float

    def to_dict(self) -> dict:
        return asdict(self)


def _encounter_order(key: tuple[str, date | None]) -> tuple:
    ind, day = key
    return (ind, day is None, day or date.min)


def derive_encounters(catalog: Catalog) -> list[Encounter]:
    groups: dict[tuple[str, date | None], list[str]] = {}
    for rec in catalog:
        if rec.individual_id is None:
            continue
        groups.setdefault((rec.individual_id, rec.date), []).append(rec.image_id)
    if catalog.n_unlabelled:
        log.info("%d unlabelled images left out of encounters", catalog.n_unlabelled)
    return [
        Encounter(ind, day, tuple(sorted(ids)))
        for (ind, day), ids in sorted(groups.items(), key=lambda kv: _encounter_order(kv[0]))
    ]


def compute_stats(catalog: Catalog) -> DatasetStats:
    n_image = len(catalog)
    span = catalog.date_span()
    dated = sum(1 for r in catalog if r.date is not None)
    return DatasetStats(
        n_image=n_image,
        n_indiv=len(catalog.individuals),
        n_enc=len(derive_encounters(catalog)),
        span_days=(span[1] - span[0]).days if span else 0,
        timestamp_coverage=dated / n_image if n_image else 0.0,
    )
