"""
On-disk feature cache.

File layout (little-endian):
  header  magic b"WRFS", version u32, keypoint count u32
  body    per keypoint 4 float32 (x, y, scale, angle) + 128 float32 descriptor
Key: sha256 over (image content hash, bbox, feature parameter hash).
"""
from __future__ import annotations

import hashlib
import os
import struct
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from wildreid.features.extractor import DESC_DIM, FeatureError, FeatureSet
from wildreid.utils.logger import get_logger

if TYPE_CHECKING:
    from wildreid.core.store import CacheStore

log = get_logger("features.cache")

MAGIC = b"WRFS"
VERSION = 1
_HEADER = struct.Struct("<4sII")
_ROW = 4 + DESC_DIM


def feature_cache_key(content_hash: str, bbox: tuple[int, int, int, int] | None, params_hash: str) -> str:
    bbox_txt = ",".join(str(int(v)) for v in bbox) if bbox else "-"
    return hashlib.sha256(f"{content_hash}|{bbox_txt}|{params_hash}".encode()).hexdigest()


def write_feature_file(path: str | Path, fs: FeatureSet) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = np.hstack([fs.keypoints, fs.descriptors]).astype("<f4", copy=False)
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    with tmp.open("wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, len(fs)))
        f.write(body.tobytes())
    os.replace(tmp, path)
    return path


def read_feature_file(path: str | Path, image_id: str = "") -> FeatureSet:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FeatureError(f"{path}: truncated header")
    magic, version, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FeatureError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FeatureError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + count * _ROW * 4
    if len(data) != expected:
        raise FeatureError(f"{path}: size {len(data)} != expected {expected}")
    body = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(count, _ROW)
    return FeatureSet(image_id, body[:, :4], body[:, 4:])


class FeatureCache:
    """Feature files under ``<root>/<key[:2]>/<key>.wrfs``, indexed in the CacheStore."""

    def __init__(self, root: str | Path, store: "CacheStore | None" = None) -> None:
        self.root = Path(root)
        self.store = store
        self.hits = 0
        self.misses = 0

    def path_for(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.wrfs"

    def get(self, key: str, image_id: str = "") -> FeatureSet | None:
        path = self.path_for(key)
        if not path.is_file():
            self.misses += 1
            return None
        try:
            fs = read_feature_file(path, image_id)
        except FeatureError as exc:
            log.warning("Discarding corrupt cache file: %s", exc)
            path.unlink(missing_ok=True)
            if self.store is not None:
                self.store.forget_feature(key)
            self.misses += 1
            return None
        self.hits += 1
        return fs

    def put(self, key: str, fs: FeatureSet, params_hash: str = "") -> Path:
        path = write_feature_file(self.path_for(key), fs)
        if self.store is not None:
            self.store.record_feature(key, fs.image_id, path, len(fs), params_hash)
        return path
