"""Closed/open-set classification, split validation and split summaries."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from wildreid.catalog.encounters import derive_encounters
from wildreid.catalog.manifest import Catalog
from wildreid.splits.policies import Split, SplitPolicy
from wildreid.utils.logger import get_logger

log = get_logger("splits.validate")


class ProblemType(str, Enum):
    CLOSED_SET = "closed_set"
    OPEN_SET = "open_set"


@dataclass(frozen=True)
class ProblemKind:
    kind: ProblemType
    new_individual_ids: frozenset[str]
    absent_individual_ids: frozenset[str] = frozenset()

    @property
    def is_open(self) -> bool:
        return self.kind is ProblemType.OPEN_SET


def _identities(ids: frozenset[str], catalog: Catalog) -> set[str]:
    return {catalog.identity(i) for i in ids if i in catalog and catalog.identity(i) is not None}


def classify_problem(split: Split, catalog: Catalog) -> ProblemKind:
    """Open set when a query identity is missing from reference, or the reverse."""
    ref = _identities(split.reference_ids, catalog)
    qry = _identities(split.query_ids, catalog)
    new = frozenset(qry - ref)
    absent = frozenset(ref - qry)
    kind = ProblemType.OPEN_SET if new or absent else ProblemType.CLOSED_SET
    return ProblemKind(kind, new, absent)


# ── Validation ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Finding:
    check: str          # disjointness | excluded_overlap | unknown_id | empty_side | encounter_straddle | uncovered
    severity: str       # error | info
    message: str
    image_ids: tuple[str, ...] = ()


@dataclass
class SplitReport:
    split_name: str
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    def count(self, check: str) -> int:
        return sum(1 for f in self.findings if f.check == check)

    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]


def validate_split(split: Split, catalog: Catalog) -> SplitReport:
    report = SplitReport(split.name)
    add = report.findings.append

    overlap = split.reference_ids & split.query_ids
    if overlap:
        add(Finding("disjointness", "error",
                    f"{len(overlap)} images in both reference and query", tuple(sorted(overlap))))

    ex_overlap = split.excluded_ids & split.covered_ids
    if ex_overlap:
        add(Finding("excluded_overlap", "error",
                    f"{len(ex_overlap)} excluded images also assigned a role", tuple(sorted(ex_overlap))))

    unknown = (split.covered_ids | split.excluded_ids) - catalog.ids
    if unknown:
        add(Finding("unknown_id", "error",
                    f"{len(unknown)} images not in catalog", tuple(sorted(unknown))))

    for side, ids in (("reference", split.reference_ids), ("query", split.query_ids)):
        if not ids:
            add(Finding("empty_side", "error", f"{side} set is empty"))

    # Random splits leak encounters across sides on purpose; time-aware splits must not.
    straddle = "info" if split.policy is SplitPolicy.RANDOM_MATCHED else "error"
    for enc in derive_encounters(catalog):
        members = set(enc.image_ids)
        in_ref = members & split.reference_ids
        in_qry = members & split.query_ids
        if in_ref and in_qry:
            add(Finding("encounter_straddle", straddle,
                        f"encounter {enc.individual_id}@{enc.date} has {len(in_ref)} reference "
                        f"and {len(in_qry)} query images",
                        tuple(sorted(in_ref | in_qry))))

    uncovered = catalog.ids - split.covered_ids - split.excluded_ids
    if uncovered:
        add(Finding("uncovered", "info",
                    f"{len(uncovered)} catalog images not assigned by the split", tuple(sorted(uncovered))))

    for f in report.errors():
        log.warning("Split '%s': %s: %s", split.name, f.check, f.message)
    n_straddle = report.count("encounter_straddle")
    if n_straddle and straddle == "info":
        log.info("Split '%s': %d encounters have images on both sides", split.name, n_straddle)
    return report


# ── Summary ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SplitSummary:
    name: str
    policy: str
    n_reference: int
    n_query: int
    n_excluded: int
    n_reference_individuals: int
    n_query_individuals: int
    reference_counts: dict[str, int]

    def row(self) -> list:
        return [self.name, self.policy, self.n_reference, self.n_query, self.n_excluded,
                self.n_reference_individuals, self.n_query_individuals]


def split_summary(split: Split, catalog: Catalog) -> SplitSummary:
    counts = Counter(
        catalog.identity(i) for i in split.reference_ids
        if i in catalog and catalog.identity(i) is not None
    )
    return SplitSummary(
        name=split.name,
        policy=split.policy.value,
        n_reference=len(split.reference_ids),
        n_query=len(split.query_ids),
        n_excluded=len(split.excluded_ids),
        n_reference_individuals=len(counts),
        n_query_individuals=len(_identities(split.query_ids, catalog)),
        reference_counts=dict(sorted(counts.items())),
    )
