"""
Normalized DLT homography fit and 2-norm condition numbers.

Each point set is translated to zero centroid and scaled to RMS distance √2,
the 2n×9 system is solved by its smallest right singular vector, and the
result is denormalized, scaled to unit Frobenius norm and sign-fixed so the
largest-magnitude entry is positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from wildreid.core.errors import WildReidError

if TYPE_CHECKING:
    from wildreid.features.matcher import CorrespondenceSet

RANK_TOL = 1e-9
SQRT2 = math.sqrt(2.0)


class FitError(WildReidError):
    pass


class InsufficientDataError(FitError):
    pass


class DegenerateConfigurationError(FitError):
    pass


@dataclass(frozen=True, eq=False)
class ProjectiveTransform:
    T: np.ndarray

    @property
    def T_tilde(self) -> np.ndarray:
        return self.T[:2, :2]

    def apply(self, pts: np.ndarray) -> np.ndarray:
        return apply_homography(self.T, pts)


def apply_homography(T: np.ndarray, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    h = np.hstack([pts, np.ones((len(pts), 1))]) @ T.T
    with np.errstate(divide="ignore", invalid="ignore"):
        return h[:, :2] / h[:, 2:3]


def normalize_points(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Similarity transform N with N·p centred at 0 and RMS distance √2."""
    pts = np.asarray(pts, dtype=np.float64)
    centroid = pts.mean(axis=0)
    centred = pts - centroid
    rms = math.sqrt(float(np.mean(np.sum(centred ** 2, axis=1))))
    if rms <= 1e-12 * (1.0 + float(np.abs(centroid).max())):
        raise DegenerateConfigurationError("all points coincide")
    s = SQRT2 / rms
    N = np.array([[s, 0.0, -s * centroid[0]],
                  [0.0, s, -s * centroid[1]],
                  [0.0, 0.0, 1.0]])
    return centred * s, N


def _is_collinear(pts: np.ndarray) -> bool:
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    return sv[0] == 0.0 or sv[1] <= RANK_TOL * sv[0]


def _design_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    n = len(src)
    x, y = src[:, 0], src[:, 1]
    u, v = dst[:, 0], dst[:, 1]
    zeros, ones = np.zeros(n), np.ones(n)
    A = np.empty((2 * n, 9))
    A[0::2] = np.column_stack([-x, -y, -ones, zeros, zeros, zeros, u * x, u * y, u])
    A[1::2] = np.column_stack([zeros, zeros, zeros, -x, -y, -ones, v * x, v * y, v])
    return A


def canonical_scale(T: np.ndarray) -> np.ndarray:
    T = T / np.linalg.norm(T, "fro")
    if T.flat[int(np.argmax(np.abs(T)))] < 0:
        T = -T
    return T


def fit_homography(src: np.ndarray, dst: np.ndarray) -> ProjectiveTransform:
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if len(src) != len(dst):
        raise ValueError(f"point count mismatch: {len(src)} vs {len(dst)}")
    if len(src) < 4:
        raise InsufficientDataError(f"need at least 4 correspondences, got {len(src)}")
    if not (np.isfinite(src).all() and np.isfinite(dst).all()):
        raise DegenerateConfigurationError("non-finite coordinates")

    src_n, N_a = normalize_points(src)
    dst_n, N_b = normalize_points(dst)
    if _is_collinear(src_n) or _is_collinear(dst_n):
        raise DegenerateConfigurationError("collinear point configuration")

    A = _design_matrix(src_n, dst_n)
    _, S, Vt = np.linalg.svd(A)
    if S[7] <= RANK_TOL * S[0]:
        raise DegenerateConfigurationError(f"rank-deficient system (σ8/σ1 = {S[7] / S[0]:.3e})")

    H_n = Vt[-1].reshape(3, 3)
    T = np.linalg.inv(N_b) @ H_n @ N_a
    return ProjectiveTransform(canonical_scale(T))


def fit_projective(correspondences: "CorrespondenceSet") -> ProjectiveTransform:
    return fit_homography(correspondences.pts_a, correspondences.pts_b)


def condition_number(M: np.ndarray) -> float:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"condition number needs a square matrix, got shape {M.shape}")
    s = np.linalg.svd(M, compute_uv=False)
    # the zero matrix counts as singular
    if not s[0] > 0.0 or s[-1] <= s[0] * np.finfo(np.float64).eps:
        return math.inf
    return float(s[0] / s[-1])


def symmetric_transfer_error(T: np.ndarray, src: np.ndarray, dst: np.ndarray) -> float:
    """RMS of forward and backward reprojection distances, in pixels."""
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if len(src) == 0 or condition_number(T) == math.inf:
        return math.inf
    fwd = apply_homography(T, src) - dst
    bwd = apply_homography(np.linalg.inv(T), dst) - src
    sq = np.concatenate([np.sum(fwd ** 2, axis=1), np.sum(bwd ** 2, axis=1)])
    if not np.isfinite(sq).all():
        return math.inf
    return math.sqrt(float(sq.mean()))
