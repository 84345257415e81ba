"""
Closed- and open-set scoring.

Closed set: correct / wrong / no_prediction over labelled query images;
precision = correct / predictions, recall = correct / |query|.

Open set: every unpredicted image is read as a new individual.
  pred_correct, pred_wrong            predicted images
  new_correct                         unpredicted, identity absent from reference
  new_wrong                           unpredicted, identity present in reference
  precision = pred_correct / (pred_correct + pred_wrong)
  recall    = pred_correct / (query images whose identity is in reference)
            = pred_correct / (pred_correct + pred_wrong_known + new_wrong)
A naive recall over all of |query| is reported next to it.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable

from wildreid.catalog.manifest import Catalog
from wildreid.core.errors import ValidationError
from wildreid.graph.matchgraph import PredictionSet
from wildreid.splits.policies import Split
from wildreid.splits.problem import classify_problem
from wildreid.utils.logger import get_logger

log = get_logger("evaluation")


class EvaluationError(ValidationError):
    pass


def ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def format_percent(value: float | None) -> str:
    """One decimal, half away from zero; None → 'NA'."""
    if value is None:
        return "NA"
    pct = (Decimal(repr(value)) * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return f"{pct}"


def universe_digest(ids: Iterable[str]) -> str:
    """Digest of the labelled images a split partitions; random and time-aware splits of one universe agree."""
    return hashlib.sha256("\n".join(sorted(ids)).encode()).hexdigest()


@dataclass(frozen=True)
class IndividualScore:
    individual_id: str
    n_query: int
    correct: int
    wrong: int
    no_prediction: int


# ── Closed set ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ClosedSetReport:
    split_name: str
    correct: int
    wrong: int
    no_prediction: int
    per_individual: tuple[IndividualScore, ...] = ()
    universe_digest: str = ""

    def __post_init__(self) -> None:
        if min(self.correct, self.wrong, self.no_prediction) < 0:
            raise EvaluationError("counts must be nonnegative")

    @classmethod
    def from_counts(cls, correct: int, wrong: int, no_prediction: int,
                    n_query: int | None = None, split_name: str = "") -> "ClosedSetReport":
        if n_query is not None and correct + wrong + no_prediction != n_query:
            raise EvaluationError(
                f"counts {correct}+{wrong}+{no_prediction} do not add up to |query|={n_query}")
        return cls(split_name, correct, wrong, no_prediction)

    @property
    def n_query(self) -> int:
        return self.correct + self.wrong + self.no_prediction

    @property
    def n_predicted(self) -> int:
        return self.correct + self.wrong

    @property
    def precision(self) -> float | None:
        return ratio(self.correct, self.n_predicted)

    @property
    def recall(self) -> float | None:
        return ratio(self.correct, self.n_query)

    def row(self) -> list:
        return [self.split_name, self.n_query, self.correct, self.wrong, self.no_prediction,
                format_percent(self.precision), format_percent(self.recall)]


def _labelled_query(split: Split, catalog: Catalog) -> list[str]:
    return sorted(q for q in split.query_ids if catalog.identity(q) is not None)


def _labelled_universe(split: Split, catalog: Catalog) -> list[str]:
    return sorted(i for i in split.covered_ids if catalog.identity(i) is not None)


def _check_predictions(predictions: PredictionSet, split: Split) -> None:
    stray = sorted(set(predictions.predictions) - split.query_ids)
    if stray:
        raise EvaluationError(f"prediction for non-query image '{stray[0]}' ({len(stray)} total)")


def _per_individual(rows: dict[str, list[int]]) -> tuple[IndividualScore, ...]:
    return tuple(
        IndividualScore(ind, sum(c), c[0], c[1], c[2]) for ind, c in sorted(rows.items())
    )


def score_closed(predictions: PredictionSet, split: Split, catalog: Catalog) -> ClosedSetReport:
    _check_predictions(predictions, split)
    problem = classify_problem(split, catalog)
    if problem.is_open:
        log.warning("Split '%s' is open-set (%d new, %d absent identities); closed-set scores are optimistic",
                    split.name, len(problem.new_individual_ids), len(problem.absent_individual_ids))
    unlabelled = len(split.query_ids) - len(_labelled_query(split, catalog))
    if unlabelled:
        log.info("Split '%s': %d unlabelled query images not scored", split.name, unlabelled)

    correct = wrong = none = 0
    per: dict[str, list[int]] = {}
    for q in _labelled_query(split, catalog):
        truth = catalog.identity(q)
        counts = per.setdefault(truth, [0, 0, 0])
        pred = predictions.predictions.get(q)
        if pred is None:
            none += 1
            counts[2] += 1
        elif pred == truth:
            correct += 1
            counts[0] += 1
        else:
            wrong += 1
            counts[1] += 1
    return ClosedSetReport(split.name, correct, wrong, none, _per_individual(per),
                           universe_digest(_labelled_universe(split, catalog)))


def score_accuracy(predictions: PredictionSet, split: Split, catalog: Catalog) -> float:
    _check_predictions(predictions, split)
    query = _labelled_query(split, catalog)
    if not query:
        raise EvaluationError(f"split '{split.name}' has no labelled query images")
    unpredicted = [q for q in query if predictions.predictions.get(q) is None]
    if unpredicted:
        raise EvaluationError(
            f"accuracy requires a prediction for every query image; {len(unpredicted)} have none")
    correct = sum(1 for q in query if predictions.predictions[q] == catalog.identity(q))
    return correct / len(query)


# ── Open set ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class OpenSetReport:
    split_name: str
    pred_correct: int
    pred_wrong: int
    new_correct: int
    new_wrong: int
    pred_wrong_known: int = 0
    per_individual: tuple[IndividualScore, ...] = ()
    universe_digest: str = ""

    def __post_init__(self) -> None:
        if min(self.pred_correct, self.pred_wrong, self.new_correct, self.new_wrong, self.pred_wrong_known) < 0:
            raise EvaluationError("counts must be nonnegative")
        if self.pred_wrong_known > self.pred_wrong:
            raise EvaluationError("pred_wrong_known cannot exceed pred_wrong")

    @classmethod
    def from_counts(cls, pred_correct: int, pred_wrong: int, new_correct: int, new_wrong: int,
                    pred_wrong_known: int = 0, split_name: str = "") -> "OpenSetReport":
        """Build from table counts. Wrong predictions are taken to be on new identities
        unless ``pred_wrong_known`` says otherwise."""
        return cls(split_name, pred_correct, pred_wrong, new_correct, new_wrong, pred_wrong_known)

    @property
    def n_query(self) -> int:
        return self.pred_correct + self.pred_wrong + self.new_correct + self.new_wrong

    @property
    def n_known(self) -> int:
        return self.pred_correct + self.pred_wrong_known + self.new_wrong

    @property
    def precision(self) -> float | None:
        return ratio(self.pred_correct, self.pred_correct + self.pred_wrong)

    @property
    def recall(self) -> float | None:
        return ratio(self.pred_correct, self.n_known)

    @property
    def naive_recall(self) -> float | None:
        return ratio(self.pred_correct, self.n_query)

    def row(self) -> list:
        return [self.split_name, self.n_query, self.pred_correct, self.pred_wrong, self.new_correct,
                self.new_wrong, self.pred_wrong_known, format_percent(self.precision), format_percent(self.recall),
                format_percent(self.naive_recall)]


def score_open(predictions: PredictionSet, split: Split, catalog: Catalog) -> OpenSetReport:
    _check_predictions(predictions, split)
    ref_idents = {catalog.identity(r) for r in split.reference_ids if catalog.identity(r) is not None}
    pc = pw = pwk = nc = nw = 0
    per: dict[str, list[int]] = {}
    for q in _labelled_query(split, catalog):
        truth = catalog.identity(q)
        known = truth in ref_idents
        counts = per.setdefault(truth, [0, 0, 0])
        pred = predictions.predictions.get(q)
        if pred is not None:
            if pred == truth:
                pc += 1
                counts[0] += 1
            else:
                pw += 1
                pwk += known
                counts[1] += 1
        else:
            counts[2] += 1
            if known:
                nw += 1
            else:
                nc += 1
    return OpenSetReport(split.name, pc, pw, nc, nw, pwk, _per_individual(per),
                         universe_digest(_labelled_universe(split, catalog)))


def aggregate_open(reports: Iterable[OpenSetReport], split_name: str = "cumulative") -> OpenSetReport:
    """Sum the counts of several open-set reports (e.g. all yearly cutoffs)."""
    reports = list(reports)
    if not reports:
        raise EvaluationError("nothing to aggregate")
    return OpenSetReport(
        split_name,
        sum(r.pred_correct for r in reports),
        sum(r.pred_wrong for r in reports),
        sum(r.new_correct for r in reports),
        sum(r.new_wrong for r in reports),
        sum(r.pred_wrong_known for r in reports),
        universe_digest=universe_digest(r.universe_digest for r in reports)
        if all(r.universe_digest for r in reports) else "",
    )
