"""CSV report tables. Footnotes follow the table as ``# note:`` lines."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import pandas as pd

from wildreid.evaluation.comparison import BiasSummary
from wildreid.evaluation.metrics import ClosedSetReport, EvaluationError, IndividualScore, OpenSetReport
from wildreid.evaluation.timegap import TimeGapCurve

CLOSED_COLUMNS = ["split", "n_query", "correct", "wrong", "no_prediction", "precision", "recall"]
OPEN_COLUMNS = ["split", "n_query", "pred_correct", "pred_wrong", "new_correct", "new_wrong", "pred_wrong_known",
                "precision", "recall", "recall_all_query"]
INDIVIDUAL_COLUMNS = ["individual_id", "n_query", "correct", "wrong", "no_prediction"]
CURVE_COLUMNS = ["bucket", "n_pairs", "n_accepted", "proportion"]
COMPARISON_COLUMNS = ["split_a", "split_b", "n_query", "recall_a", "recall_b", "recall_delta_pp",
                      "recall_ratio", "overestimation_pct", "precision_delta_pp"]

OPEN_SET_NOTES = (
    "recall counts only query images whose identity occurs in the reference set; "
    "recall_all_query divides by the whole query set",
    "query images left without a prediction (including conflicting components) are read as new individuals",
)


def _write(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence], notes: Sequence[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        pd.DataFrame(list(rows), columns=list(columns)).to_csv(f, index=False, lineterminator="\n")
        for note in notes:
            f.write(f"# note: {note}\n")
    return path


def write_closed_reports(reports: Iterable[ClosedSetReport], path: str | Path) -> Path:
    return _write(path, CLOSED_COLUMNS, [r.row() for r in reports],
                  ["percentages rounded to one decimal, half away from zero"])


def write_open_reports(reports: Iterable[OpenSetReport], path: str | Path) -> Path:
    return _write(path, OPEN_COLUMNS, [r.row() for r in reports], OPEN_SET_NOTES)


def write_individual_scores(scores: Iterable[IndividualScore], path: str | Path) -> Path:
    rows = [[s.individual_id, s.n_query, s.correct, s.wrong, s.no_prediction] for s in scores]
    return _write(path, INDIVIDUAL_COLUMNS, rows)


def write_time_gap_curve(curve: TimeGapCurve, path: str | Path) -> Path:
    rows = [[b.name, b.n_pairs, b.n_accepted, "NA" if b.proportion is None else f"{b.proportion:.6f}"]
            for b in curve.buckets]
    notes = [f"eligible pairs: {curve.n_eligible}, covered by decisions: {curve.n_covered}"]
    if curve.orientation:
        notes.append(f"orientation: {curve.orientation}")
    return _write(path, CURVE_COLUMNS, rows, notes)


def write_comparisons(summaries: Iterable[BiasSummary], path: str | Path) -> Path:
    return _write(path, COMPARISON_COLUMNS, [s.row() for s in summaries],
                  ["recall_ratio = recall_a / recall_b; overestimation_pct = (ratio - 1) * 100"])


def _read(path: str | Path, columns: Sequence[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise EvaluationError(f"report table not found: {path}")
    df = pd.read_csv(path, comment="#", dtype={"split": str})
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise EvaluationError(f"{path}: missing columns {', '.join(missing)}")
    return df


def read_closed_reports(path: str | Path) -> dict[str, ClosedSetReport]:
    df = _read(path, CLOSED_COLUMNS)
    return {
        r.split: ClosedSetReport.from_counts(int(r.correct), int(r.wrong), int(r.no_prediction),
                                             n_query=int(r.n_query), split_name=r.split)
        for r in df.itertuples(index=False)
    }


def read_open_reports(path: str | Path) -> dict[str, OpenSetReport]:
    df = _read(path, OPEN_COLUMNS)
    return {
        r.split: OpenSetReport.from_counts(int(r.pred_correct), int(r.pred_wrong), int(r.new_correct),
                                           int(r.new_wrong), int(r.pred_wrong_known), split_name=r.split)
        for r in df.itertuples(index=False)
    }
