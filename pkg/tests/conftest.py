"""Shared builders: small catalogs, textured rasters and the two-identity match graph."""
import pytest
from datetime import date
from pathlib import Path

import sys
sys.path.insert(0, str(Path(__file__).parent.parent))


def make_catalog(rows, root=None):
    """rows: (image_id, individual_id | None, 'YYYY-MM-DD' | None[, orientation])."""
    from wildreid.catalog import Catalog, ImageRecord, Orientation
    records = []
    for row in rows:
        image_id, ind, day = row[:3]
        orient = Orientation(row[3]) if len(row) > 3 else Orientation.LEFT
        records.append(ImageRecord(
            image_id=image_id,
            individual_id=ind,
            date=date.fromisoformat(day) if day else None,
            orientation=orient,
            image_path=f"images/{image_id}.png",
        ))
    return Catalog(records, root=root)


def textured_image(seed=0, size=256, blobs=60):
    """Grayscale uint8 image of blurred random disks: plenty of stable keypoints."""
    import cv2
    import numpy as np
    rng = np.random.default_rng(seed)
    img = np.full((size, size), 128, dtype=np.uint8)
    for _ in range(blobs):
        c = tuple(int(v) for v in rng.integers(8, size - 8, size=2))
        r = int(rng.integers(3, max(4, size // 16)))
        cv2.circle(img, c, r, int(rng.integers(0, 256)), -1)
    return cv2.GaussianBlur(img, (0, 0), 1.2)


def two_identity_graph():
    """Ten reference images (five each of 'blue' and 'orange') and ten query images.

    Blue queries a5..a8 hang off reference a2 through a5; orange queries b5 and b9
    hang off reference b2 through b5. Queries b6, b7, b10 form their own component
    and b8 is isolated, so exactly six queries get a prediction.
    """
    from wildreid.graph import MatchGraph
    from wildreid.splits import Split, SplitPolicy

    rows = []
    for k in range(1, 5):
        rows.append((f"ra{k}", "blue", "2016-01-01"))
        rows.append((f"rb{k}", "orange", "2016-01-01"))
    rows.append(("ra0", "blue", "2016-01-01"))
    rows.append(("rb0", "orange", "2016-01-01"))
    for k in range(5, 9):
        rows.append((f"a{k}", "blue", "2020-01-01"))
    for k in (5, 6, 7, 8, 9, 10):
        rows.append((f"b{k}", "orange", "2020-01-01"))
    catalog = make_catalog(rows)

    ref_blue = ["ra0", "ra1", "ra2", "ra3", "ra4"]
    ref_orange = ["rb0", "rb1", "rb2", "rb3", "rb4"]
    edges = []
    for group in (ref_blue, ref_orange):
        edges += [(a, b) for i, a in enumerate(group) for b in group[i + 1:]]
    edges += [("ra2", "a5"), ("a5", "a6"), ("a6", "a7"), ("a7", "a8")]
    edges += [("rb2", "b5"), ("b5", "b9")]
    edges += [("b6", "b7"), ("b7", "b10")]

    graph = MatchGraph(catalog.ids, edges)
    split = Split(
        reference_ids=frozenset(ref_blue + ref_orange),
        query_ids=frozenset(["a5", "a6", "a7", "a8", "b5", "b6", "b7", "b8", "b9", "b10"]),
        policy=SplitPolicy.TIME_CUTOFF,
        name="fixture",
    )
    return catalog, graph, split


@pytest.fixture
def small_catalog():
    """Three individuals over several days plus one unlabelled and one undated image."""
    return make_catalog([
        ("t1-a", "t1", "2016-03-01"), ("t1-b", "t1", "2016-03-01"),
        ("t1-c", "t1", "2017-05-10"), ("t1-d", "t1", "2018-07-20"),
        ("t2-a", "t2", "2016-04-02"), ("t2-b", "t2", "2019-01-15"),
        ("t2-c", "t2", "2019-01-15"),
        ("t3-a", "t3", "2017-06-06"),
        ("u-1", None, "2018-01-01"),
        ("t1-x", "t1", None),
    ])
