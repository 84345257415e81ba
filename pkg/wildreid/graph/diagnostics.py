"""Per-individual edge breakdowns and graph export files."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import pandas as pd

from wildreid.catalog.manifest import Catalog
from wildreid.graph.matchgraph import MatchGraph, PredictionSet
from wildreid.splits.policies import Split


@dataclass
class EdgeBreakdown:
    individual_id: str
    reference_reference: int = 0
    query_query: int = 0
    reference_query: int = 0
    other: int = 0
    by_date_pair: dict[tuple[date | None, date | None], int] = field(default_factory=dict)
    n_query: int = 0
    n_query_linked: int = 0     # query images sharing a component with a same-identity reference image

    def date_pair_rows(self) -> list[tuple[str, str, int]]:
        return [(_iso(a), _iso(b), n) for (a, b), n in self.by_date_pair.items()]


def _iso(d: date | None) -> str:
    return d.isoformat() if d else "NA"


def _date_key(d: date | None) -> tuple:
    return (d is None, d or date.min)


def individual_edge_breakdown(graph: MatchGraph, split: Split, catalog: Catalog,
                              individual_id: str) -> EdgeBreakdown:
    own = set(catalog.images_of(individual_id))
    out = EdgeBreakdown(individual_id)
    dates: Counter = Counter()
    for a, b in graph.edges:
        if a not in own or b not in own:
            continue
        ra, rb = split.role_of(a), split.role_of(b)
        roles = {ra, rb}
        if roles == {"reference"}:
            out.reference_reference += 1
        elif roles == {"query"}:
            out.query_query += 1
        elif roles == {"reference", "query"}:
            out.reference_query += 1
        else:
            out.other += 1
        da, db = catalog.record(a).date, catalog.record(b).date
        if _date_key(db) < _date_key(da):
            da, db = db, da
        dates[(da, db)] += 1
    out.by_date_pair = dict(sorted(dates.items(), key=lambda kv: (_date_key(kv[0][0]), _date_key(kv[0][1]))))

    own_ref = own & split.reference_ids
    own_query = sorted(own & split.query_ids)
    out.n_query = len(own_query)
    out.n_query_linked = sum(
        1 for q in own_query if any(graph.connected(q, r) for r in own_ref)
    )
    return out


def export_graph(
    graph: MatchGraph,
    split: Split,
    catalog: Catalog,
    out_dir: str | Path,
    predictions: PredictionSet | None = None,
) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    edges_path = out_dir / "edges.txt"
    edges_path.write_text("".join(f"{a} {b}\n" for a, b in graph.edges), encoding="utf-8")
    written["edges"] = edges_path

    rows = []
    for cid, comp in enumerate(graph.components):
        idents = sorted({catalog.identity(n) for n in comp if catalog.identity(n) is not None})
        rows.append([
            cid, len(comp),
            sum(1 for n in comp if n in split.reference_ids),
            sum(1 for n in comp if n in split.query_ids),
            ";".join(idents),
        ])
    comp_path = out_dir / f"{split.name}_components.csv"
    pd.DataFrame(rows, columns=["component_id", "size", "n_reference", "n_query", "identities"]) \
        .to_csv(comp_path, index=False, lineterminator="\n")
    written["components"] = comp_path

    if predictions is not None:
        pred_rows = [
            [q, predictions.predictions[q] or "", predictions.status(q)]
            for q in sorted(predictions.predictions)
        ]
        pred_path = out_dir / f"{split.name}_predictions.csv"
        pd.DataFrame(pred_rows, columns=["image_id", "prediction", "status"]) \
            .to_csv(pred_path, index=False, lineterminator="\n")
        written["predictions"] = pred_path
    return written
