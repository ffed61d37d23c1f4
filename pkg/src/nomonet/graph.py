"""Explorable network graph: dimensions as nodes, shared indicators as edges.

Each indicator has at most one primary dimension (its largest qualifying
absolute loading), so node sizes partition the indicators; cross-loading
indicators surface as weighted edges between the dimensions they load on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

from . import factor
from .network import NetworkModel

GRAPH_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class GraphNode:
    dim: int
    name: str
    size: int


@dataclass(frozen=True)
class GraphEdge:
    source: int
    target: int  # source < target
    weight: int


@dataclass(frozen=True)
class NetworkGraph:
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]


def build_graph(model: NetworkModel, min_edge_weight: int = 1) -> NetworkGraph:
    """Nodes for every dimension with a qualifying loading; edges for cross-loads.

    Node size counts primary assignments; edge weight counts indicators whose
    absolute loading meets the threshold on both endpoint dimensions. Edges
    below ``min_edge_weight`` are dropped.
    """
    assignments = factor.threshold_loadings(model.loadings, model.threshold)
    primary = factor.primary_assignments(model.loadings, model.threshold)

    dims_with_loadings = sorted({dim for _, dim, _ in assignments})
    sizes = {dim: 0 for dim in dims_with_loadings}
    for dim in primary.values():
        sizes[dim] += 1

    by_indicator: dict[int, list[int]] = {}
    for row, dim, _ in assignments:
        by_indicator.setdefault(row, []).append(dim)
    weights: dict[tuple[int, int], int] = {}
    for dims in by_indicator.values():
        for a, b in combinations(sorted(dims), 2):
            weights[(a, b)] = weights.get((a, b), 0) + 1

    nodes = tuple(
        GraphNode(dim=dim, name=model.dimension(dim).name, size=sizes[dim])
        for dim in dims_with_loadings
    )
    edges = tuple(
        GraphEdge(source=a, target=b, weight=w)
        for (a, b), w in sorted(weights.items())
        if w >= min_edge_weight
    )
    return NetworkGraph(nodes=nodes, edges=edges)


def export_graph(graph: NetworkGraph) -> str:
    """Schema-versioned JSON document with stable key order."""
    doc = {
        "version": GRAPH_SCHEMA_VERSION,
        "nodes": [{"dim": n.dim, "name": n.name, "size": n.size} for n in graph.nodes],
        "edges": [
            {"source": e.source, "target": e.target, "weight": e.weight}
            for e in graph.edges
        ],
    }
    return json.dumps(doc, separators=(",", ":"))


def adjacency_csv(graph: NetworkGraph) -> str:
    lines = ["source,target,weight"]
    lines.extend(f"{e.source},{e.target},{e.weight}" for e in graph.edges)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SearchMatch:
    dimension: int
    matched_in: str  # "name" | "definition" | "indicator"
    text: str  # what matched
    indicator_id: Optional[str] = None


_FIELD_RANK = {"name": 0, "definition": 1, "indicator": 2}


def search(
    model: NetworkModel,
    query: str,
    texts: Optional[Sequence[str]] = None,
    limit: int = 20,
) -> list[SearchMatch]:
    """Case-insensitive substring search over names, definitions, indicators.

    Results rank by match location (name before definition before indicator
    text) and then by dimension index. Indicator matches report the
    indicator's primary dimension; indicators without one are not listed.
    An empty query returns no results.
    """
    needle = query.strip().casefold()
    if not needle:
        return []
    matches: list[SearchMatch] = []
    for meta in model.dimensions:
        if needle in meta.name.casefold():
            matches.append(SearchMatch(meta.index, "name", meta.name))
        if needle in meta.definition.casefold():
            matches.append(SearchMatch(meta.index, "definition", meta.definition))
    if texts is not None:
        primary = model.primary_assignments()
        for row, text in enumerate(texts):
            if needle in text.casefold() and row in primary:
                matches.append(
                    SearchMatch(
                        primary[row],
                        "indicator",
                        text,
                        indicator_id=model.indicator_ids[row],
                    )
                )
    matches.sort(key=lambda m: (_FIELD_RANK[m.matched_in], m.dimension))
    return matches[:limit]
