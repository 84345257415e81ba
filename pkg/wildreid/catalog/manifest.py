"""
Manifest IO and the immutable Catalog.

Manifest: UTF-8 CSV, one row per image, columns
  image_id,individual_id,date,orientation,image_path,bbox_x,bbox_y,bbox_w,bbox_h
Empty cells mean "absent". The bbox columns are optional as a group.
Row numbers in errors are 1-based file lines (the header is line 1).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import pandas as pd

from wildreid.core.errors import ValidationError
from wildreid.utils.logger import get_logger

log = get_logger("catalog")

REQUIRED_COLUMNS = ["image_id", "individual_id", "date", "orientation", "image_path"]
BBOX_COLUMNS = ["bbox_x", "bbox_y", "bbox_w", "bbox_h"]
COLUMNS = REQUIRED_COLUMNS + BBOX_COLUMNS

_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_INT = re.compile(r"^[+-]?\d+$")


class ManifestError(ValidationError):
    """Carries every rejected row as (row_number, message)."""

    def __init__(self, path: str | Path, issues: list[tuple[int, str]]) -> None:
        self.path = str(path)
        self.issues = issues
        head = "; ".join(f"row {r}: {m}" if r else m for r, m in issues[:10])
        more = f" (+{len(issues) - 10} more)" if len(issues) > 10 else ""
        super().__init__(f"{self.path}: {head}{more}")


class Orientation(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    TOP = "top"
    TOP_LEFT = "top-left"
    TOP_RIGHT = "top-right"
    FRONT = "front"
    BOTTOM = "bottom"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class BBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"bbox extent must be positive, got w={self.w} h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"bbox origin must be nonnegative, got x={self.x} y={self.y}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    individual_id: str | None
    date: date | None
    orientation: Orientation
    image_path: str
    bbox: BBox | None = None

    @property
    def labelled(self) -> bool:
        return self.individual_id is not None


class Catalog:
    """Immutable, indexed view of a manifest. Records are kept sorted by image_id."""

    def __init__(self, records: Iterable[ImageRecord], root: str | Path | None = None) -> None:
        recs = sorted(records, key=lambda r: r.image_id)
        seen: set[str] = set()
        for r in recs:
            if r.image_id in seen:
                raise ValidationError(f"duplicate image_id: {r.image_id}")
            seen.add(r.image_id)
        self._records: tuple[ImageRecord, ...] = tuple(recs)
        self._by_id = {r.image_id: r for r in recs}
        self.root = Path(root) if root is not None else None

        by_ind: dict[str, list[str]] = {}
        by_date: dict[date, list[str]] = {}
        for r in recs:
            if r.individual_id is not None:
                by_ind.setdefault(r.individual_id, []).append(r.image_id)
            if r.date is not None:
                by_date.setdefault(r.date, []).append(r.image_id)
        self._by_ind = {k: tuple(v) for k, v in by_ind.items()}
        self._by_date = {k: tuple(v) for k, v in by_date.items()}

    # ── Container protocol ────────────────────────────────────────────────
    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[ImageRecord]:
        return iter(self._records)

    def __contains__(self, image_id: object) -> bool:
        return image_id in self._by_id

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Catalog):
            return NotImplemented
        return self._records == other._records

    def __repr__(self) -> str:
        return f"Catalog(n_image={len(self)}, n_indiv={len(self._by_ind)})"

    # ── Queries ───────────────────────────────────────────────────────────
    @property
    def records(self) -> tuple[ImageRecord, ...]:
        return self._records

    @property
    def ids(self) -> frozenset[str]:
        return frozenset(self._by_id)

    @property
    def individuals(self) -> list[str]:
        return sorted(self._by_ind)

    @property
    def n_unlabelled(self) -> int:
        return sum(1 for r in self._records if r.individual_id is None)

    def record(self, image_id: str) -> ImageRecord:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise KeyError(f"unknown image_id: {image_id}") from None

    def images_of(self, individual_id: str) -> tuple[str, ...]:
        return self._by_ind.get(individual_id, ())

    def images_on(self, day: date) -> tuple[str, ...]:
        return self._by_date.get(day, ())

    def dates_of(self, individual_id: str) -> list[date]:
        days = {self._by_id[i].date for i in self.images_of(individual_id)}
        return sorted(d for d in days if d is not None)

    def date_span(self) -> tuple[date, date] | None:
        if not self._by_date:
            return None
        return min(self._by_date), max(self._by_date)

    def identity(self, image_id: str) -> str | None:
        return self._by_id[image_id].individual_id

    def resolve_path(self, record: ImageRecord | str) -> Path:
        if isinstance(record, str):
            record = self.record(record)
        p = Path(record.image_path)
        if p.is_absolute() or self.root is None:
            return p
        return self.root / p


# ── Parsing ───────────────────────────────────────────────────────────────────

def _cell(row: dict, col: str) -> str:
    return str(row.get(col, "") or "").strip()


def _parse_date(text: str) -> date:
    if not _ISO_DATE.match(text):
        raise ValueError(f"malformed date '{text}' (expected YYYY-MM-DD)")
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise ValueError(f"malformed date '{text}': {exc}") from None


def _parse_bbox(row: dict) -> BBox | None:
    cells = [_cell(row, c) for c in BBOX_COLUMNS]
    if not any(cells):
        return None
    if not all(cells):
        raise ValueError("bbox columns must be all present or all empty")
    for name, c in zip(BBOX_COLUMNS, cells):
        if not _INT.match(c):
            raise ValueError(f"{name} must be an integer, got '{c}'")
    x, y, w, h = (int(c) for c in cells)
    if w <= 0 or h <= 0:
        raise ValueError(f"bbox with nonpositive extent (w={w}, h={h})")
    return BBox(x, y, w, h)


def _parse_row(row: dict, declared_span: tuple[date, date] | None) -> ImageRecord:
    image_id = _cell(row, "image_id")
    if not image_id:
        raise ValueError("empty image_id")
    image_path = _cell(row, "image_path")
    if not image_path:
        raise ValueError("empty image_path")

    raw_date = _cell(row, "date")
    day = _parse_date(raw_date) if raw_date else None
    if day is not None and declared_span is not None:
        lo, hi = declared_span
        if not lo <= day <= hi:
            raise ValueError(f"date {day} outside declared span {lo}..{hi}")

    raw_orient = _cell(row, "orientation").lower()
    try:
        orientation = Orientation(raw_orient) if raw_orient else Orientation.UNKNOWN
    except ValueError:
        raise ValueError(f"unknown orientation '{raw_orient}'") from None

    return ImageRecord(
        image_id=image_id,
        individual_id=_cell(row, "individual_id") or None,
        date=day,
        orientation=orientation,
        image_path=image_path,
        bbox=_parse_bbox(row),
    )


# ── Public API ────────────────────────────────────────────────────────────────

def ingest_manifest(
    manifest_path: str | Path,
    declared_span: tuple[date, date] | None = None,
    root: str | Path | None = None,
) -> Catalog:
    """Read and validate a manifest; every bad row is reported in one ManifestError.

    Relative image paths resolve against ``root`` (default: the manifest's directory).
    """
    path = Path(manifest_path)
    if not path.is_file():
        raise ManifestError(path, [(0, "manifest file not found")])
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    except pd.errors.EmptyDataError:
        raise ManifestError(path, [(0, "manifest is empty (no header row)")]) from None
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ManifestError(path, [(0, f"unparsable manifest: {exc}")]) from None

    df.columns = [str(c).strip() for c in df.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise ManifestError(path, [(1, f"missing required columns: {', '.join(missing)}")])
    present_bbox = [c for c in BBOX_COLUMNS if c in df.columns]
    if present_bbox and len(present_bbox) != len(BBOX_COLUMNS):
        raise ManifestError(path, [(1, "bbox columns must be given as a group of four")])

    issues: list[tuple[int, str]] = []
    records: list[ImageRecord] = []
    first_row: dict[str, int] = {}
    for idx, row in enumerate(df.to_dict(orient="records")):
        row_no = idx + 2
        try:
            rec = _parse_row(row, declared_span)
        except ValueError as exc:
            issues.append((row_no, str(exc)))
            continue
        if rec.image_id in first_row:
            issues.append((row_no, f"duplicate image_id '{rec.image_id}' "
                                   f"(first seen on row {first_row[rec.image_id]})"))
            continue
        first_row[rec.image_id] = row_no
        records.append(rec)

    if issues:
        for r, m in issues:
            log.warning("Rejected manifest row %d: %s", r, m)
        raise ManifestError(path, issues)

    catalog = Catalog(records, root=path.parent if root is None else root)
    log.info("Ingested %s: %d images, %d individuals, %d unlabelled",
             path.name, len(catalog), len(catalog.individuals), catalog.n_unlabelled)
    return catalog


def catalog_frame(catalog: Catalog) -> pd.DataFrame:
    rows = []
    for r in catalog:
        b = r.bbox.as_tuple() if r.bbox else ("", "", "", "")
        rows.append([
            r.image_id,
            r.individual_id or "",
            r.date.isoformat() if r.date else "",
            r.orientation.value,
            r.image_path,
            *[str(v) for v in b],
        ])
    return pd.DataFrame(rows, columns=COLUMNS, dtype=str)


def write_manifest(catalog: Catalog, path: str | Path) -> Path:
    """Write the catalog in manifest format, rows sorted by image_id."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    catalog_frame(catalog).to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path
