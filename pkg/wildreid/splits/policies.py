"""
Split policies.

  time_proportion  per individual, the earliest ceil(p·D) observation days go to
                   reference, the remaining days to query; one-day individuals
                   are excluded
  time_cutoff      reference before the cutoff, query inside the window after it
  random_matched   per individual, the template's reference count drawn at random
                   from the images the template covers
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from enum import Enum
from typing import Any

import numpy as np

from wildreid.catalog.manifest import Catalog
from wildreid.core.errors import ValidationError
from wildreid.utils.logger import get_logger

log = get_logger("splits")

RNG_ALGORITHM = "PCG64"


class SplitError(ValidationError):
    pass


class SplitPolicy(str, Enum):
    RANDOM_MATCHED = "random_matched"
    TIME_PROPORTION = "time_proportion"
    TIME_CUTOFF = "time_cutoff"


@dataclass(frozen=True)
class Split:
    reference_ids: frozenset[str]
    query_ids: frozenset[str]
    policy: SplitPolicy
    params: dict[str, Any] = field(default_factory=dict)
    excluded_ids: frozenset[str] = frozenset()
    name: str = ""
    rng_algorithm: str = ""

    @property
    def covered_ids(self) -> frozenset[str]:
        return self.reference_ids | self.query_ids

    def role_of(self, image_id: str) -> str | None:
        if image_id in self.reference_ids:
            return "reference"
        if image_id in self.query_ids:
            return "query"
        if image_id in self.excluded_ids:
            return "excluded"
        return None

    def renamed(self, name: str) -> "Split":
        return replace(self, name=name)


# ── Helpers ───────────────────────────────────────────────────────────────────

def _add_years(d: date, years: int) -> date:
    try:
        return d.replace(year=d.year + years)
    except ValueError:  # Feb 29
        return d.replace(year=d.year + years, day=28)


def _window_end(cutoff: date, window: str | int) -> date | None:
    if window == "all":
        return None
    if window == "year":
        return _add_years(cutoff, 1)
    if isinstance(window, int) and not isinstance(window, bool) and window > 0:
        return cutoff + timedelta(days=window)
    raise SplitError(f"query window must be 'year', 'all' or a positive day count, got {window!r}")


def reference_day_count(p: float, n_days: int) -> int:
    """ceil(p·D) clamped to [1, D-1]."""
    k = math.ceil(round(p * n_days, 9))
    return min(max(k, 1), n_days - 1)


# ── Policies ──────────────────────────────────────────────────────────────────

def time_proportion_split(catalog: Catalog, p: float = 0.5, name: str = "") -> Split:
    if not 0.0 < p < 1.0:
        raise SplitError(f"proportion must lie in (0, 1), got {p}")

    reference: set[str] = set()
    query: set[str] = set()
    excluded: set[str] = {r.image_id for r in catalog if r.individual_id is None or r.date is None}
    n_single = 0

    for ind in catalog.individuals:
        days = catalog.dates_of(ind)
        dated = [i for i in catalog.images_of(ind) if catalog.record(i).date is not None]
        if len(days) < 2:
            excluded.update(dated)
            n_single += 1
            continue
        ref_days = set(days[:reference_day_count(p, len(days))])
        for image_id in dated:
            (reference if catalog.record(image_id).date in ref_days else query).add(image_id)

    if not reference or not query:
        raise SplitError("no individual has at least two observation days; time-proportion split unusable")

    log.info("time_proportion p=%s: %d reference, %d query, %d excluded (%d one-day individuals)",
             p, len(reference), len(query), len(excluded), n_single)
    return Split(
        reference_ids=frozenset(reference),
        query_ids=frozenset(query),
        policy=SplitPolicy.TIME_PROPORTION,
        params={"p": p},
        excluded_ids=frozenset(excluded),
        name=name or f"time_proportion_{p:g}",
    )


def time_cutoff_split(
    catalog: Catalog,
    cutoff: date,
    window: str | int = "year",
    name: str = "",
) -> Split:
    span = catalog.date_span()
    if span is None:
        raise SplitError("catalog has no dated images")
    lo, hi = span
    if not lo < cutoff <= hi:
        raise SplitError(f"cutoff {cutoff} outside catalog span ({lo}, {hi}]; one side would be empty")
    end = _window_end(cutoff, window)

    reference: set[str] = set()
    query: set[str] = set()
    excluded: set[str] = set()
    for rec in catalog:
        if rec.date is None:
            excluded.add(rec.image_id)
        elif rec.date < cutoff:
            (reference if rec.individual_id is not None else excluded).add(rec.image_id)
        elif end is None or rec.date < end:
            query.add(rec.image_id)
        else:
            excluded.add(rec.image_id)

    if not reference:
        raise SplitError(f"cutoff {cutoff}: empty reference set")
    if not query:
        raise SplitError(f"cutoff {cutoff}: empty query set")

    log.info("time_cutoff %s (window=%s): %d reference, %d query, %d excluded",
             cutoff, window, len(reference), len(query), len(excluded))
    return Split(
        reference_ids=frozenset(reference),
        query_ids=frozenset(query),
        policy=SplitPolicy.TIME_CUTOFF,
        params={"cutoff": cutoff.isoformat(), "window": window},
        excluded_ids=frozenset(excluded),
        name=name or f"time_cutoff_{cutoff.isoformat()}",
    )


def yearly_cutoff_splits(catalog: Catalog, window: str | int = "year", prefix: str = "cutoff") -> list[Split]:
    """One cutoff on 1 January of every year after the first in the catalog span."""
    span = catalog.date_span()
    if span is None:
        raise SplitError("catalog has no dated images")
    splits: list[Split] = []
    for year in range(span[0].year + 1, span[1].year + 1):
        cutoff = date(year, 1, 1)
        try:
            splits.append(time_cutoff_split(catalog, cutoff, window, name=f"{prefix}-{year}"))
        except SplitError as exc:
            log.warning("Skipping yearly cutoff %d: %s", year, exc)
    if not splits:
        raise SplitError("no usable yearly cutoff inside the catalog span")
    return splits


def random_split_matched(catalog: Catalog, template: Split, seed: int, name: str = "") -> Split:
    unknown = sorted((template.covered_ids | template.excluded_ids) - catalog.ids)
    if unknown:
        raise SplitError(f"template '{template.name}' names {len(unknown)} images absent from the catalog "
                         f"(first: {unknown[0]})")

    rng = np.random.Generator(np.random.PCG64(seed))
    covered = template.covered_ids
    reference: set[str] = set()
    query: set[str] = set()

    for ind in catalog.individuals:
        pool = sorted(i for i in catalog.images_of(ind) if i in covered)
        if not pool:
            continue
        n_ref = sum(1 for i in pool if i in template.reference_ids)
        picked = set(rng.choice(len(pool), size=n_ref, replace=False).tolist()) if n_ref else set()
        for k, image_id in enumerate(pool):
            (reference if k in picked else query).add(image_id)

    for image_id in covered:
        if catalog.identity(image_id) is None:
            (reference if image_id in template.reference_ids else query).add(image_id)

    log.info("random_matched seed=%d from '%s': %d reference, %d query",
             seed, template.name, len(reference), len(query))
    return Split(
        reference_ids=frozenset(reference),
        query_ids=frozenset(query),
        policy=SplitPolicy.RANDOM_MATCHED,
        params={"seed": int(seed), "template": template.name},
        excluded_ids=template.excluded_ids,
        name=name or f"random_{template.name}",
        rng_algorithm=RNG_ALGORITHM,
    )
