"""
Top-k one-to-one descriptor correspondences.

similarity = -(Euclidean distance). Candidates are taken in order of
(distance, index_a, index_b); a candidate is kept when neither keypoint is
already used. With a nonzero min_separation, "used" extends to
every keypoint within that many pixels of a chosen one, so duplicate
detections at one location (several dominant orientations) count once.
No ratio test. Pairs are always computed in canonical
(image_id, digest) order, so matching (b, a) returns the swapped result of (a, b).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from wildreid.features.extractor import FeatureSet

SELECTIONS = ("greedy", "mutual")


@dataclass(frozen=True, eq=False)
class CorrespondenceSet:
    image_a: str
    image_b: str
    idx_a: np.ndarray
    idx_b: np.ndarray
    similarity: np.ndarray
    pts_a: np.ndarray
    pts_b: np.ndarray

    def __len__(self) -> int:
        return len(self.similarity)

    @property
    def s_max(self) -> float | None:
        """Image-pair similarity s_ij: the best correspondence similarity."""
        return float(self.similarity[0]) if len(self) else None

    def pairs(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(s)) for a, b, s in zip(self.idx_a, self.idx_b, self.similarity)]

    def swapped(self) -> "CorrespondenceSet":
        return CorrespondenceSet(self.image_b, self.image_a, self.idx_b, self.idx_a,
                                 self.similarity, self.pts_b, self.pts_a)


def _empty(fs_a: FeatureSet, fs_b: FeatureSet) -> CorrespondenceSet:
    z = np.zeros(0, dtype=np.int64)
    return CorrespondenceSet(fs_a.image_id, fs_b.image_id, z, z.copy(), np.zeros(0),
                             np.zeros((0, 2)), np.zeros((0, 2)))


def _ordered_candidates(dist: np.ndarray, limit: int | None) -> np.ndarray:
    """Flat indices sorted by (distance, row, col); all ties at the cut included."""
    flat = dist.ravel()
    if limit is not None and limit < flat.size:
        thresh = np.partition(flat, limit - 1)[limit - 1]
        cand = np.flatnonzero(flat <= thresh)
    else:
        cand = np.arange(flat.size)
    return cand[np.argsort(flat[cand], kind="stable")]


def _neighbours(points: np.ndarray, index: int, radius: float) -> np.ndarray:
    if radius <= 0:
        return np.array([index])
    d2 = np.sum((points - points[index]) ** 2, axis=1)
    return np.flatnonzero(d2 < radius * radius)


def _greedy(
    dist: np.ndarray,
    top_k: int,
    allowed: np.ndarray | None,
    pts_a: np.ndarray,
    pts_b: np.ndarray,
    min_separation: float = 0.0,
) -> list[tuple[int, int]]:
    n_rows, n_cols = dist.shape
    want = min(top_k, n_rows, n_cols)
    if allowed is not None:
        dist = np.where(allowed, dist, np.inf)
    limit = max(64 * top_k, 1024)
    while True:
        chosen: list[tuple[int, int]] = []
        used_a = np.zeros(n_rows, dtype=bool)
        used_b = np.zeros(n_cols, dtype=bool)
        order = _ordered_candidates(dist, limit)
        for flat_idx in order:
            i, j = divmod(int(flat_idx), n_cols)
            if not np.isfinite(dist[i, j]) or used_a[i] or used_b[j]:
                continue
            chosen.append((i, j))
            used_a[_neighbours(pts_a, i, min_separation)] = True
            used_b[_neighbours(pts_b, j, min_separation)] = True
            if len(chosen) == want:
                return chosen
        if limit is None or limit >= dist.size:
            return chosen
        limit = None


def _mutual_mask(dist: np.ndarray) -> np.ndarray:
    best_b = np.argmin(dist, axis=1)
    best_a = np.argmin(dist, axis=0)
    mask = np.zeros(dist.shape, dtype=bool)
    rows = np.arange(dist.shape[0])
    mutual = best_a[best_b] == rows
    mask[rows[mutual], best_b[mutual]] = True
    return mask


def _match(fs_a: FeatureSet, fs_b: FeatureSet, top_k: int, selection: str,
           min_separation: float) -> CorrespondenceSet:
    if len(fs_a) == 0 or len(fs_b) == 0 or top_k <= 0:
        return _empty(fs_a, fs_b)
    dist = cdist(fs_a.descriptors.astype(np.float64), fs_b.descriptors.astype(np.float64), "euclidean")
    allowed = _mutual_mask(dist) if selection == "mutual" else None
    pts_a = fs_a.points.astype(np.float64)
    pts_b = fs_b.points.astype(np.float64)
    chosen = _greedy(dist, top_k, allowed, pts_a, pts_b, min_separation)
    if not chosen:
        return _empty(fs_a, fs_b)
    ia = np.array([c[0] for c in chosen], dtype=np.int64)
    ib = np.array([c[1] for c in chosen], dtype=np.int64)
    return CorrespondenceSet(
        image_a=fs_a.image_id,
        image_b=fs_b.image_id,
        idx_a=ia,
        idx_b=ib,
        similarity=-dist[ia, ib],
        pts_a=pts_a[ia],
        pts_b=pts_b[ib],
    )


def match_descriptors(
    fs_a: FeatureSet,
    fs_b: FeatureSet,
    top_k: int = 10,
    selection: str = "greedy",
    min_separation: float = 0.0,
) -> CorrespondenceSet:
    if selection not in SELECTIONS:
        raise ValueError(f"selection must be one of {SELECTIONS}, got {selection!r}")
    if min_separation < 0:
        raise ValueError(f"min_separation must be nonnegative, got {min_separation}")
    if (fs_b.image_id, fs_b.digest) < (fs_a.image_id, fs_a.digest):
        return _match(fs_b, fs_a, top_k, selection, min_separation).swapped()
    return _match(fs_a, fs_b, top_k, selection, min_separation)
