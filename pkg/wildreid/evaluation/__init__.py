"""Closed/open-set scoring, time-gap curves, split comparison and report files."""
from wildreid.evaluation.comparison import BiasSummary, compare_splits
from wildreid.evaluation.metrics import (
    ClosedSetReport,
    EvaluationError,
    IndividualScore,
    OpenSetReport,
    aggregate_open,
    format_percent,
    score_accuracy,
    score_closed,
    score_open,
)
from wildreid.evaluation.reports import (
    read_closed_reports,
    read_open_reports,
    write_closed_reports,
    write_comparisons,
    write_individual_scores,
    write_open_reports,
    write_time_gap_curve,
)
from wildreid.evaluation.timegap import BUCKETS, TimeGapBucket, TimeGapCurve, bucket_of, time_gap_curve

__all__ = [
    "BiasSummary", "compare_splits",
    "ClosedSetReport", "EvaluationError", "IndividualScore", "OpenSetReport", "aggregate_open",
    "format_percent", "score_accuracy", "score_closed", "score_open",
    "read_closed_reports", "read_open_reports",
    "write_closed_reports", "write_comparisons", "write_individual_scores", "write_open_reports",
    "write_time_gap_curve",
    "BUCKETS", "TimeGapBucket", "TimeGapCurve", "bucket_of", "time_gap_curve",
]
