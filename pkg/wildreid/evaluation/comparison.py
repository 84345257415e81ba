"""Random-vs-time-aware bias summary between two reports over the same query universe."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from wildreid.evaluation.metrics import ClosedSetReport, EvaluationError, OpenSetReport, format_percent

Report = Union[ClosedSetReport, OpenSetReport]


@dataclass(frozen=True)
class BiasSummary:
    name_a: str
    name_b: str
    n_query: int
    precision_a: float | None
    precision_b: float | None
    recall_a: float | None
    recall_b: float | None

    @staticmethod
    def _delta(a: float | None, b: float | None) -> float | None:
        return None if a is None or b is None else a - b

    @property
    def precision_delta(self) -> float | None:
        return self._delta(self.precision_a, self.precision_b)

    @property
    def recall_delta(self) -> float | None:
        return self._delta(self.recall_a, self.recall_b)

    @property
    def recall_ratio(self) -> float | None:
        """Overestimation ratio recall_a / recall_b."""
        if self.recall_a is None or not self.recall_b:
            return None
        return self.recall_a / self.recall_b

    @property
    def recall_relative_delta(self) -> float | None:
        r = self.recall_ratio
        return None if r is None else r - 1.0

    @property
    def overestimation_percent(self) -> float | None:
        r = self.recall_relative_delta
        return None if r is None else 100.0 * r

    def row(self) -> list:
        ratio = self.recall_ratio
        over = self.overestimation_percent
        return [self.name_a, self.name_b, self.n_query,
                format_percent(self.recall_a), format_percent(self.recall_b),
                format_percent(self.recall_delta), "NA" if ratio is None else f"{ratio:.2f}",
                "NA" if over is None else f"{over:.1f}",
                format_percent(self.precision_delta)]


def compare_splits(report_a: Report, report_b: Report) -> BiasSummary:
    """Deltas of ``report_a`` (e.g. random) against ``report_b`` (e.g. time-aware)."""
    if type(report_a) is not type(report_b):
        raise EvaluationError("cannot compare a closed-set report with an open-set report")
    if report_a.n_query != report_b.n_query:
        raise EvaluationError(
            f"query sets differ: |{report_a.split_name}|={report_a.n_query} "
            f"vs |{report_b.split_name}|={report_b.n_query}")
    da, db = report_a.universe_digest, report_b.universe_digest
    if da and db and da != db:
        raise EvaluationError(f"splits '{report_a.split_name}' and '{report_b.split_name}' partition different images")
    return BiasSummary(
        name_a=report_a.split_name,
        name_b=report_b.split_name,
        n_query=report_a.n_query,
        precision_a=report_a.precision,
        precision_b=report_b.precision,
        recall_a=report_a.recall,
        recall_b=report_b.recall,
    )
