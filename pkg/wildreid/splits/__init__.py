"""Reference/query split policies, problem classification, split files."""
from wildreid.splits.policies import (
    RNG_ALGORITHM,
    Split,
    SplitError,
    SplitPolicy,
    random_split_matched,
    time_cutoff_split,
    time_proportion_split,
    yearly_cutoff_splits,
)
from wildreid.splits.problem import (
    Finding,
    ProblemKind,
    ProblemType,
    SplitReport,
    SplitSummary,
    classify_problem,
    split_summary,
    validate_split,
)
from wildreid.splits.splitfile import read_split, write_split

__all__ = [
    "RNG_ALGORITHM", "Split", "SplitError", "SplitPolicy",
    "random_split_matched", "time_cutoff_split", "time_proportion_split", "yearly_cutoff_splits",
    "Finding", "ProblemKind", "ProblemType", "SplitReport", "SplitSummary",
    "classify_problem", "split_summary", "validate_split",
    "read_split", "write_split",
]
