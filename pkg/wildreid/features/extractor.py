"""
Scale-space keypoints and 128-d gradient-histogram descriptors (OpenCV SIFT).

Keypoint rows are (x, y, scale, angle): pixel coordinates in the cropped
frame, scale = σ in pixels, angle in radians. Descriptors are unit L2.
Rows are ordered strongest response first, ties by position.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from functools import cached_property

import cv2
import numpy as np

from wildreid.catalog.manifest import BBox
from wildreid.core.errors import WildReidError
from wildreid.features.imageio import to_gray

MIN_SIDE = 16
DESC_DIM = 128


class FeatureError(WildReidError):
    pass


@dataclass(frozen=True)
class FeatureParams:
    n_octave_layers: int = 3
    sigma: float = 1.6
    contrast_threshold: float = 0.04
    edge_threshold: float = 10.0
    max_keypoints: int = 0      # 0 = unlimited

    def parameter_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


class FeatureSet:
    def __init__(self, image_id: str, keypoints: np.ndarray, descriptors: np.ndarray) -> None:
        kps = np.ascontiguousarray(keypoints, dtype=np.float32).reshape(-1, 4)
        desc = np.ascontiguousarray(descriptors, dtype=np.float32).reshape(-1, DESC_DIM)
        if len(kps) != len(desc):
            raise FeatureError(f"{image_id}: {len(kps)} keypoints but {len(desc)} descriptors")
        self.image_id = image_id
        self.keypoints = kps
        self.descriptors = desc

    def __len__(self) -> int:
        return len(self.keypoints)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return (self.image_id == other.image_id
                and np.array_equal(self.keypoints, other.keypoints)
                and np.array_equal(self.descriptors, other.descriptors))

    def __repr__(self) -> str:
        return f"FeatureSet({self.image_id!r}, n={len(self)})"

    @cached_property
    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.keypoints.tobytes())
        h.update(self.descriptors.tobytes())
        return h.hexdigest()

    @property
    def points(self) -> np.ndarray:
        return self.keypoints[:, :2]

    def with_id(self, image_id: str) -> "FeatureSet":
        return FeatureSet(image_id, self.keypoints, self.descriptors)


def crop(image: np.ndarray, bbox: BBox | tuple[int, int, int, int] | None) -> np.ndarray:
    if bbox is None:
        return image
    x, y, w, h = bbox.as_tuple() if isinstance(bbox, BBox) else bbox
    H, W = image.shape[:2]
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > W or y + h > H:
        raise FeatureError(f"bbox ({x}, {y}, {w}, {h}) not inside {W}x{H} image")
    return image[y:y + h, x:x + w]


def _sift(params: FeatureParams) -> "cv2.SIFT":
    return cv2.SIFT_create(
        nfeatures=0,
        nOctaveLayers=params.n_octave_layers,
        contrastThreshold=params.contrast_threshold,
        edgeThreshold=params.edge_threshold,
        sigma=params.sigma,
    )


def extract_features(
    image: np.ndarray,
    bbox: BBox | tuple[int, int, int, int] | None = None,
    params: FeatureParams | None = None,
    image_id: str = "",
) -> FeatureSet:
    params = params or FeatureParams()
    img = np.asarray(image)
    if img.size == 0:
        raise FeatureError(f"{image_id or 'image'}: empty raster")
    gray = crop(to_gray(img), bbox)
    if min(gray.shape[:2]) < MIN_SIDE:
        raise FeatureError(
            f"{image_id or 'image'}: {gray.shape[1]}x{gray.shape[0]} is below the {MIN_SIDE}px minimum"
        )

    kps, desc = _sift(params).detectAndCompute(np.ascontiguousarray(gray), None)
    if not kps or desc is None:
        return FeatureSet(image_id, np.zeros((0, 4)), np.zeros((0, DESC_DIM)))

    rows = np.array([(k.pt[0], k.pt[1], k.size / 2.0, np.deg2rad(k.angle)) for k in kps], dtype=np.float64)
    response = np.array([k.response for k in kps], dtype=np.float64)
    desc = desc.astype(np.float64)
    norms = np.linalg.norm(desc, axis=1)
    keep = norms > 0
    rows, response, desc = rows[keep], response[keep], desc[keep] / norms[keep, None]

    order = np.lexsort((rows[:, 3], rows[:, 2], rows[:, 1], rows[:, 0], -response))
    if params.max_keypoints > 0:
        order = order[:params.max_keypoints]
    return FeatureSet(image_id, rows[order], desc[order])
