"""Projective-transform fitting and condition-number pair verification."""
from wildreid.verify.homography import (
    DegenerateConfigurationError,
    FitError,
    InsufficientDataError,
    ProjectiveTransform,
    condition_number,
    fit_homography,
    fit_projective,
    symmetric_transfer_error,
)
from wildreid.verify.verifier import (
    VerificationDecision,
    VerifyParams,
    read_decisions,
    verify_pair,
    verify_pairs,
    write_decisions,
)

__all__ = [
    "DegenerateConfigurationError", "FitError", "InsufficientDataError", "ProjectiveTransform",
    "condition_number", "fit_homography", "fit_projective", "symmetric_transfer_error",
    "VerificationDecision", "VerifyParams", "read_decisions", "verify_pair", "verify_pairs",
    "write_decisions",
]
