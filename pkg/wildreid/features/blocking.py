"""Candidate-pair generation: all pairs, or top-k by mean descriptor (approximate)."""
from __future__ import annotations

from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from wildreid.features.extractor import DESC_DIM, FeatureSet
from wildreid.utils.logger import get_logger

log = get_logger("features.blocking")


def all_pairs(image_ids: Sequence[str]) -> list[tuple[str, str]]:
    return list(combinations(sorted(set(image_ids)), 2))


def _global_descriptor(fs: FeatureSet) -> np.ndarray:
    if len(fs) == 0:
        return np.zeros(DESC_DIM)
    mean = fs.descriptors.astype(np.float64).mean(axis=0)
    norm = np.linalg.norm(mean)
    return mean / norm if norm > 0 else mean


def candidate_pairs(feature_sets: Sequence[FeatureSet], k: int) -> list[tuple[str, str]]:
    """Union of each image's k nearest neighbours by mean descriptor, as sorted (a, b) pairs."""
    sets = sorted(feature_sets, key=lambda f: f.image_id)
    ids = [f.image_id for f in sets]
    if k <= 0 or k >= len(ids) - 1:
        return all_pairs(ids)
    glob = np.vstack([_global_descriptor(f) for f in sets])
    dist = cdist(glob, glob, "euclidean")
    np.fill_diagonal(dist, np.inf)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    pairs: set[tuple[str, str]] = set()
    for i, row in enumerate(nearest):
        for j in row:
            a, b = ids[i], ids[int(j)]
            pairs.add((a, b) if a < b else (b, a))
    out = sorted(pairs)
    log.info("Blocking k=%d: %d candidate pairs of %d", k, len(out), len(ids) * (len(ids) - 1) // 2)
    return out
