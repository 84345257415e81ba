"""
Match probability as a function of the time between two photos.

Eligible pairs: same individual, same known orientation. Buckets by day gap:
  same_day 0 | le_1_day 1 | le_1_week 2..7 | le_1_month 8..31 | le_1_year 32..365 | more >365
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from wildreid.catalog.manifest import Catalog, Orientation
from wildreid.evaluation.metrics import EvaluationError
from wildreid.utils.logger import get_logger
from wildreid.verify.verifier import VerificationDecision

log = get_logger("evaluation.timegap")

BUCKETS: tuple[tuple[str, int | None], ...] = (
    ("same_day", 0),
    ("le_1_day", 1),
    ("le_1_week", 7),
    ("le_1_month", 31),
    ("le_1_year", 365),
    ("more", None),
)


def bucket_of(days: int) -> str:
    days = abs(int(days))
    for name, upper in BUCKETS:
        if upper is None or days <= upper:
            return name
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class TimeGapBucket:
    name: str
    n_pairs: int
    n_accepted: int

    @property
    def proportion(self) -> float | None:
        return self.n_accepted / self.n_pairs if self.n_pairs else None


@dataclass(frozen=True)
class TimeGapCurve:
    buckets: tuple[TimeGapBucket, ...]
    n_eligible: int
    orientation: str = ""

    @property
    def n_covered(self) -> int:
        return sum(b.n_pairs for b in self.buckets)

    def bucket(self, name: str) -> TimeGapBucket:
        for b in self.buckets:
            if b.name == name:
                return b
        raise KeyError(name)

    def proportion(self, name: str) -> float | None:
        return self.bucket(name).proportion

    def is_non_increasing(self, tolerance: float = 0.0, min_pairs: int = 1) -> bool:
        """Buckets holding fewer than ``min_pairs`` pairs are left out of the comparison."""
        props = [b.proportion for b in self.buckets if b.n_pairs >= max(min_pairs, 1)]
        return all(later <= earlier + tolerance for earlier, later in zip(props, props[1:]))


def _eligible_universe(catalog: Catalog, orientation: Orientation | None) -> int:
    groups = Counter(
        (r.individual_id, r.orientation) for r in catalog
        if r.individual_id is not None and r.orientation is not Orientation.UNKNOWN
        and (orientation is None or r.orientation is orientation)
    )
    return sum(n * (n - 1) // 2 for n in groups.values())


def time_gap_curve(
    decisions: Iterable[VerificationDecision],
    catalog: Catalog,
    orientation: Orientation | str | None = None,
) -> TimeGapCurve:
    if isinstance(orientation, str):
        orientation = Orientation(orientation)

    seen: dict[tuple[str, str], bool] = {}
    for d in decisions:
        a, b = sorted(d.pair)
        if (a, b) in seen:
            continue
        ra, rb = catalog.record(a), catalog.record(b)
        if ra.individual_id is None or ra.individual_id != rb.individual_id:
            continue
        if ra.orientation is Orientation.UNKNOWN or ra.orientation is not rb.orientation:
            continue
        if orientation is not None and ra.orientation is not orientation:
            continue
        if ra.date is None or rb.date is None:
            raise EvaluationError(f"eligible pair ({a}, {b}) has a missing date")
        seen[(a, b)] = d.accepted

    n_pairs: Counter = Counter()
    n_acc: Counter = Counter()
    for (a, b), accepted in seen.items():
        name = bucket_of((catalog.record(b).date - catalog.record(a).date).days)
        n_pairs[name] += 1
        n_acc[name] += int(accepted)

    curve = TimeGapCurve(
        buckets=tuple(TimeGapBucket(name, n_pairs[name], n_acc[name]) for name, _ in BUCKETS),
        n_eligible=_eligible_universe(catalog, orientation),
        orientation=orientation.value if orientation else "",
    )
    if curve.n_covered < curve.n_eligible:
        log.warning("Time-gap curve covers %d of %d eligible pairs", curve.n_covered, curve.n_eligible)
    return curve
