"""Network graph construction, search, and export."""

import json
from itertools import combinations

import numpy as np
import pytest

from nomonet.graph import NetworkGraph, adjacency_csv, build_graph, export_graph, search
from nomonet.network import DimensionMeta, NetworkModel


def model_from_pattern(pattern, names=None, threshold=0.55, ids=None):
    pattern = np.asarray(pattern, dtype=np.float64)
    p, k = pattern.shape
    names = names or [f"Name {j}" for j in range(1, k + 1)]
    dims = tuple(
        DimensionMeta(j, names[j - 1], f"definition {j}", ("e1", "e2", "e3"), 0)
        for j in range(1, k + 1)
    )
    return NetworkModel(
        loadings=pattern,
        phi=np.eye(k),
        eigenvalues=np.arange(k, 0, -1).astype(float),
        threshold=threshold,
        indicator_ids=tuple(ids or (f"q{i}" for i in range(p))),
        dimensions=dims,
        extraction="pca",
    )


class TestBuildGraph:
    def test_two_clean_clusters(self):
        pattern = np.zeros((6, 2))
        pattern[:3, 0] = 0.8
        pattern[3:, 1] = 0.7
        graph = build_graph(model_from_pattern(pattern))
        assert [(n.dim, n.size) for n in graph.nodes] == [(1, 3), (2, 3)]
        assert graph.edges == ()

    def test_cross_loading_creates_edge_and_counts_once(self):
        pattern = np.array([[0.9, 0.0], [0.6, 0.6], [0.0, 0.8]])
        graph = build_graph(model_from_pattern(pattern))
        sizes = {n.dim: n.size for n in graph.nodes}
        # The cross-loader's primary is dim 1 (higher |loading| ties break low).
        assert sizes == {1: 2, 2: 1}
        assert len(graph.edges) == 1
        edge = graph.edges[0]
        assert (edge.source, edge.target, edge.weight) == (1, 2, 1)

    def test_all_below_threshold_empty_graph(self):
        pattern = np.full((4, 2), 0.3)
        graph = build_graph(model_from_pattern(pattern))
        assert graph.nodes == () and graph.edges == ()

    def test_min_edge_weight_filters(self):
        pattern = np.array([[0.6, 0.6], [0.7, 0.58], [0.9, 0.0]])
        model = model_from_pattern(pattern)
        assert len(build_graph(model, min_edge_weight=1).edges) == 1
        assert build_graph(model, min_edge_weight=3).edges == ()

    def test_node_sizes_partition_indicators(self):
        rng = np.random.default_rng(0)
        pattern = rng.uniform(-1, 1, size=(40, 4))
        graph = build_graph(model_from_pattern(pattern))
        assert sum(n.size for n in graph.nodes) <= 40

    def test_edge_weights_match_brute_force(self):
        rng = np.random.default_rng(1)
        pattern = rng.uniform(-1, 1, size=(100, 5))
        model = model_from_pattern(pattern)
        graph = build_graph(model)
        weights = {(e.source, e.target): e.weight for e in graph.edges}
        for a, b in combinations(range(1, 6), 2):
            count = sum(
                1
                for i in range(100)
                if abs(pattern[i, a - 1]) >= 0.55 and abs(pattern[i, b - 1]) >= 0.55
            )
            assert weights.get((a, b), 0) == count

    def test_permutation_invariant(self):
        rng = np.random.default_rng(2)
        pattern = rng.uniform(-1, 1, size=(30, 3))
        perm = rng.permutation(30)
        one = build_graph(model_from_pattern(pattern))
        two = build_graph(model_from_pattern(pattern[perm]))
        assert [(n.dim, n.size) for n in one.nodes] == [(n.dim, n.size) for n in two.nodes]
        assert one.edges == two.edges


class TestExportGraph:
    def test_empty_graph_exact_bytes(self):
        doc = export_graph(NetworkGraph(nodes=(), edges=()))
        assert doc == '{"version":1,"nodes":[],"edges":[]}'

    def test_round_trip_structural_equality(self):
        pattern = np.zeros((5, 2))
        pattern[:2, 0] = 0.9
        pattern[2:, 1] = 0.8
        graph = build_graph(model_from_pattern(pattern, names=["A", "B"]))
        parsed = json.loads(export_graph(graph))
        assert parsed["version"] == 1
        assert parsed["nodes"] == [
            {"dim": 1, "name": "A", "size": 2},
            {"dim": 2, "name": "B", "size": 3},
        ]
        assert parsed["edges"] == []

    def test_adjacency_csv(self):
        pattern = np.array([[0.6, 0.6]])
        graph = build_graph(model_from_pattern(pattern))
        assert adjacency_csv(graph) == "source,target,weight\n1,2,1\n"


class TestSearch:
    def make_model(self):
        pattern = np.zeros((4, 2))
        pattern[:2, 0] = 0.8
        pattern[2:, 1] = 0.7
        return model_from_pattern(
            pattern,
            names=["Sleep Quality", "Worry"],
            ids=["s1", "s2", "w1", "w2"],
        )

    def test_dimension_name_ranked_first(self):
        model = self.make_model()
        texts = ["sleeping badly", "slept ok", "worry worry", "worried sick"]
        matches = search(model, "worry", texts=texts)
        assert matches[0].matched_in == "name"
        assert matches[0].dimension == 2

    def test_empty_query_empty_result(self):
        assert search(self.make_model(), "") == []
        assert search(self.make_model(), "   ") == []

    def test_indicator_match_reports_primary_dimension_and_id(self):
        model = self.make_model()
        texts = ["sleeping badly", "slept ok", "worrying a lot", "fretting"]
        matches = search(model, "slept", texts=texts)
        assert len(matches) == 1
        assert matches[0].matched_in == "indicator"
        assert matches[0].dimension == 1
        assert matches[0].indicator_id == "s2"

    def test_definition_ranks_between_name_and_indicator(self):
        model = self.make_model()
        texts = ["definition 1 echoed in text", "b", "c", "d"]
        matches = search(model, "definition", texts=texts)
        kinds = [m.matched_in for m in matches]
        assert kinds == sorted(
            kinds, key=lambda k: {"name": 0, "definition": 1, "indicator": 2}[k]
        )

    def test_limit(self):
        model = self.make_model()
        texts = ["common word"] * 4
        matches = search(model, "common", texts=texts, limit=2)
        assert len(matches) == 2
