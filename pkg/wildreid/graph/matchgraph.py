"""
Undirected match graph over images and reference → query identity propagation.

A query image is predicted identity X when every labelled reference image
reachable from it carries X. Reachability is the whole connected component,
or a bounded BFS when max_hops is set. Two or more reference identities
give no prediction and a conflict record.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from wildreid.catalog.manifest import Catalog
from wildreid.core.errors import ValidationError
from wildreid.graph.unionfind import UnionFind
from wildreid.splits.policies import Split
from wildreid.utils.logger import get_logger
from wildreid.verify.verifier import VerificationDecision

log = get_logger("graph")

NO_PREDICTION = None


class GraphError(ValidationError):
    pass


class MatchGraph:
    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]] = ()) -> None:
        self.nodes: tuple[str, ...] = tuple(sorted(set(nodes)))
        node_set = set(self.nodes)
        clean: set[tuple[str, str]] = set()
        for a, b in edges:
            if a not in node_set or b not in node_set:
                raise GraphError(f"edge ({a}, {b}) names an unknown node")
            if a != b:
                clean.add((a, b) if a < b else (b, a))
        self.edges: tuple[tuple[str, str], ...] = tuple(sorted(clean))

        self.adjacency: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            self.adjacency[a].append(b)
            self.adjacency[b].append(a)
        for n in self.adjacency:
            self.adjacency[n].sort()

        uf = UnionFind(self.nodes)
        for a, b in self.edges:
            uf.union(a, b)
        self.components: list[tuple[str, ...]] = [tuple(g) for g in uf.groups()]
        self._component_of = {n: k for k, comp in enumerate(self.components) for n in comp}

    def __repr__(self) -> str:
        return f"MatchGraph(nodes={len(self.nodes)}, edges={len(self.edges)}, components={len(self.components)})"

    def component_of(self, node: str) -> tuple[str, ...]:
        return self.components[self._component_of[node]]

    def component_id(self, node: str) -> int:
        return self._component_of[node]

    def connected(self, a: str, b: str) -> bool:
        return self._component_of[a] == self._component_of[b]

    def within_hops(self, node: str, max_hops: int | None) -> tuple[str, ...]:
        if max_hops is None:
            return self.component_of(node)
        seen = {node: 0}
        queue = deque([node])
        while queue:
            cur = queue.popleft()
            if seen[cur] >= max_hops:
                continue
            for nxt in self.adjacency[cur]:
                if nxt not in seen:
                    seen[nxt] = seen[cur] + 1
                    queue.append(nxt)
        return tuple(sorted(seen))

    def shortest_path(self, a: str, b: str) -> list[str] | None:
        prev: dict[str, str | None] = {a: None}
        queue = deque([a])
        while queue:
            cur = queue.popleft()
            if cur == b:
                path = [cur]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            for nxt in self.adjacency[cur]:
                if nxt not in prev:
                    prev[nxt] = cur
                    queue.append(nxt)
        return None

    def without(self, removed: Iterable[str]) -> "MatchGraph":
        gone = set(removed)
        keep = [n for n in self.nodes if n not in gone]
        return MatchGraph(keep, [(a, b) for a, b in self.edges if a not in gone and b not in gone])


def build_match_graph(decisions: Iterable[VerificationDecision], catalog: Catalog) -> MatchGraph:
    edges = []
    for d in decisions:
        for image_id in d.pair:
            if image_id not in catalog:
                raise GraphError(f"decision names unknown image '{image_id}'")
        if d.accepted:
            edges.append(d.pair)
    graph = MatchGraph(catalog.ids, edges)
    log.info("Match graph: %d nodes, %d edges, %d components",
             len(graph.nodes), len(graph.edges), len(graph.components))
    return graph


# ── Propagation ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Conflict:
    component_id: int
    identities: tuple[str, ...]
    query_ids: tuple[str, ...] = ()
    reference_ids: tuple[str, ...] = ()


@dataclass
class PredictionSet:
    split_name: str
    predictions: dict[str, str | None]
    conflicts: list[Conflict] = field(default_factory=list)
    reference_conflicts: list[Conflict] = field(default_factory=list)

    def predicted(self) -> dict[str, str]:
        return {k: v for k, v in self.predictions.items() if v is not None}

    def status(self, image_id: str) -> str:
        if self.predictions.get(image_id) is not None:
            return "predicted"
        if any(image_id in c.query_ids for c in self.conflicts):
            return "conflict"
        return "no_prediction"

    @property
    def n_predicted(self) -> int:
        return sum(1 for v in self.predictions.values() if v is not None)


def propagate_identities(
    graph: MatchGraph,
    split: Split,
    catalog: Catalog,
    max_hops: int | None = None,
) -> PredictionSet:
    node_set = set(graph.nodes)
    missing = (split.reference_ids | split.query_ids) - node_set
    if missing:
        raise GraphError(f"{len(missing)} split images are not graph nodes")

    reference = split.reference_ids
    predictions: dict[str, str | None] = {}
    conflict_by_key: dict[tuple[int, tuple[str, ...]], list[str]] = {}

    for q in sorted(split.query_ids):
        reach = graph.within_hops(q, max_hops)
        idents = sorted({catalog.identity(r) for r in reach
                         if r in reference and catalog.identity(r) is not None})
        if len(idents) == 1:
            predictions[q] = idents[0]
        else:
            predictions[q] = NO_PREDICTION
            if len(idents) > 1:
                conflict_by_key.setdefault((graph.component_id(q), tuple(idents)), []).append(q)

    conflicts = [Conflict(cid, idents, tuple(qs)) for (cid, idents), qs in sorted(conflict_by_key.items())]

    reference_conflicts = []
    for cid, comp in enumerate(graph.components):
        refs = [n for n in comp if n in reference and catalog.identity(n) is not None]
        idents = sorted({catalog.identity(n) for n in refs})
        if len(idents) > 1:
            reference_conflicts.append(Conflict(cid, tuple(idents), reference_ids=tuple(refs)))

    for c in conflicts:
        log.info("Split '%s': component %d reaches identities %s; %d query images left unpredicted",
                 split.name, c.component_id, ", ".join(c.identities), len(c.query_ids))
    for c in reference_conflicts:
        log.warning("Split '%s': reference images of %s share component %d (possible label noise)",
                    split.name, ", ".join(c.identities), c.component_id)

    return PredictionSet(split.name, predictions, conflicts, reference_conflicts)
