"""Label merging and triplet construction."""

import collections

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nomonet.constructs import (
    MergeMap,
    Triplet,
    build_triplets,
    edit_distance,
    load_triplets_csv,
    merge_constructs_edit,
    merge_constructs_semantic,
    merge_report,
    triplets_csv,
)
from nomonet.corpus import Corpus, Indicator, preprocess
from nomonet.embedding import trigram_embed


def oracle_edit_distance(a: str, b: str) -> int:
    """Independent full-matrix DP implementation."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        table[i][0] = i
    for j in range(len(b) + 1):
        table[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return table[len(a)][len(b)]


class TestEditDistance:
    def test_identity(self):
        assert edit_distance("abc", "abc") == 0

    def test_hyphen_space_variants_are_one_apart(self):
        a = preprocess("health self-efficacy")
        b = preprocess("health self efficacy")
        assert (a, b) == ("health selfefficacy", "health self efficacy")
        assert edit_distance(a, b) == 1

    def test_use_usage(self):
        assert edit_distance("alcohol use", "alcohol usage") == 2

    def test_against_oracle_random_pairs(self):
        rng = np.random.default_rng(0)
        alphabet = "abcde "
        for _ in range(2000):
            a = "".join(rng.choice(list(alphabet), size=rng.integers(0, 12)))
            b = "".join(rng.choice(list(alphabet), size=rng.integers(0, 12)))
            assert edit_distance(a, b) == oracle_edit_distance(a, b)


class TestMergeEdit:
    def test_distance_one_merges_hyphen_variant(self):
        merge = merge_constructs_edit(
            {"health selfefficacy", "health self efficacy"}, d=1
        )
        assert len(merge.groups) == 1

    def test_distance_one_keeps_use_usage_apart(self):
        merge = merge_constructs_edit({"alcohol use", "alcohol usage"}, d=1)
        assert len(merge.groups) == 2

    def test_transitive_closure(self):
        # aa~ab~bb chain: all three merge even though aa vs bb is distance 2.
        merge = merge_constructs_edit({"aa", "ab", "bb"}, d=1)
        assert len(merge.groups) == 1

    def test_partition_is_exact(self):
        labels = {"anxiety", "anxiet", "sleep", "slep", "mood"}
        merge = merge_constructs_edit(labels, d=1)
        flattened = [label for group in merge.groups for label in group]
        assert sorted(flattened) == sorted(labels)


class TestMergeSemantic:
    def test_threshold_straddling(self, provider):
        labels = ["alcohol use", "alcohol usage", "sleep quality"]
        vectors = {label: trigram_embed(label) for label in labels}
        close = float(vectors["alcohol use"] @ vectors["alcohol usage"])
        far = max(
            float(vectors["sleep quality"] @ vectors["alcohol use"]),
            float(vectors["sleep quality"] @ vectors["alcohol usage"]),
        )
        assert close >= 0.75 > far  # fixture precondition
        merge = merge_constructs_semantic(labels, provider, tau=0.75)
        assert merge.same_group("alcohol use", "alcohol usage")
        assert not merge.same_group("alcohol use", "sleep quality")

    def test_tau_near_one_keeps_singletons(self, provider):
        labels = ["anxiety", "worry", "sleep"]
        merge = merge_constructs_semantic(labels, provider, tau=0.9999)
        assert len(merge.groups) == 3

    def test_tau_minus_one_merges_everything(self, provider):
        labels = ["anxiety", "worry", "sleep"]
        merge = merge_constructs_semantic(labels, provider, tau=-1.0)
        assert len(merge.groups) == 1

    @settings(max_examples=25, deadline=None)
    @given(
        labels=st.sets(
            st.text(alphabet="abcdxyz ", min_size=1, max_size=8).map(str.strip).filter(bool),
            min_size=1,
            max_size=8,
        ),
        tau=st.floats(min_value=-1.0, max_value=1.0),
    )
    def test_partition_matches_connected_components(self, labels, tau):
        provider = __import__("nomonet.embedding", fromlist=["ProviderConfig"]).ProviderConfig()
        merge = merge_constructs_semantic(labels, provider, tau=tau)
        ordered = sorted(labels)
        vectors = np.vstack([trigram_embed(label) for label in ordered])
        sims = vectors @ vectors.T
        # BFS oracle over the >= tau graph.
        unvisited = set(range(len(ordered)))
        components = []
        while unvisited:
            queue = [unvisited.pop()]
            component = {queue[0]}
            while queue:
                node = queue.pop()
                neighbors = {
                    j for j in list(unvisited) if sims[node, j] >= tau
                }
                unvisited -= neighbors
                component |= neighbors
                queue.extend(neighbors)
            components.append(frozenset(ordered[i] for i in component))
        assert set(frozenset(g) for g in merge.groups) == set(components)


def _corpus(groups: dict[str, list[str]]) -> Corpus:
    indicators = []
    for label, ids in groups.items():
        for ind_id in ids:
            indicators.append(
                Indicator(
                    id=ind_id,
                    text=f"text for {ind_id}",
                    raw_text=f"text for {ind_id}",
                    construct_label=label,
                )
            )
    return Corpus.from_indicators(indicators)


class TestBuildTriplets:
    def test_availability_arithmetic(self):
        corpus = _corpus({"a": ["a1", "a2", "a3", "a4"], "b": ["b1", "b2"]})
        merge = MergeMap.identity(["a", "b"])
        build = build_triplets(corpus, merge, n_pos=3, n_neg=3, seed=0)
        per_anchor = collections.Counter(t.anchor for t in build.triplets)
        assert per_anchor["a1"] == 3
        assert per_anchor["b1"] == 1

    def test_single_group_yields_nothing(self):
        corpus = _corpus({"a": ["a1", "a2"]})
        merge = MergeMap.identity(["a"])
        build = build_triplets(corpus, merge)
        assert build.triplets == ()
        assert set(build.skipped_no_negative) == {"a1", "a2"}

    def test_singleton_group_skipped_and_reported(self):
        corpus = _corpus({"a": ["a1"], "b": ["b1", "b2"]})
        merge = MergeMap.identity(["a", "b"])
        build = build_triplets(corpus, merge)
        assert build.skipped_singleton == ("a1",)
        assert all(t.anchor != "a1" for t in build.triplets)

    def test_deterministic_under_seed(self):
        corpus = _corpus(
            {"a": [f"a{i}" for i in range(8)], "b": [f"b{i}" for i in range(5)]}
        )
        merge = MergeMap.identity(["a", "b"])
        one = build_triplets(corpus, merge, seed=42)
        two = build_triplets(corpus, merge, seed=42)
        assert one.triplets == two.triplets
        other = build_triplets(corpus, merge, seed=43)
        assert one.triplets != other.triplets

    def test_unlabeled_excluded_and_reported(self):
        indicators = [
            Indicator(id="u1", text="no label", raw_text="no label"),
            Indicator(id="a1", text="x", raw_text="x", construct_label="a"),
            Indicator(id="a2", text="y", raw_text="y", construct_label="a"),
            Indicator(id="b1", text="z", raw_text="z", construct_label="b"),
        ]
        corpus = Corpus.from_indicators(indicators)
        merge = MergeMap.identity(["a", "b"])
        build = build_triplets(corpus, merge)
        assert build.unlabeled == ("u1",)
        assert all("u1" not in (t.anchor, t.positive, t.negative) for t in build.triplets)

    def test_constraints_and_count_formula_random_corpora(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            n_labels = int(rng.integers(3, 10))
            labels = [f"label{i}" for i in range(n_labels)]
            groups: dict[str, list[str]] = {label: [] for label in labels}
            for i in range(int(rng.integers(20, 60))):
                groups[labels[int(rng.integers(0, n_labels))]].append(f"q{i}")
            groups = {k: v for k, v in groups.items() if v}
            corpus = _corpus(groups)
            merge = MergeMap.identity(groups.keys())
            build = build_triplets(corpus, merge, n_pos=3, n_neg=3, seed=1)

            label_of = {
                ind.id: ind.construct_label for ind in corpus
            }
            total_labeled = len(corpus.labeled())
            expected = 0
            for members in groups.values():
                if len(members) >= 2 and total_labeled - len(members) >= 1:
                    expected += len(members) * min(3, len(members) - 1)
            assert len(build.triplets) == expected
            for t in build.triplets:
                assert t.anchor != t.positive
                assert label_of[t.anchor] == label_of[t.positive]
                assert label_of[t.anchor] != label_of[t.negative]

    def test_merged_groups_respected(self):
        corpus = _corpus({"colour": ["c1", "c2"], "color": ["k1"], "sound": ["s1", "s2"]})
        merge = merge_constructs_edit({"colour", "color", "sound"}, d=1)
        build = build_triplets(corpus, merge, seed=0)
        anchors = {t.anchor for t in build.triplets}
        assert "k1" in anchors  # merged with colour, so it has positives
        for t in build.triplets:
            if t.anchor == "k1":
                assert t.positive in {"c1", "c2"}
                assert t.negative in {"s1", "s2"}


class TestSerialization:
    def test_csv_round_trip(self):
        triplets = (Triplet("a", "b", "c"), Triplet("d", "e", "f"))
        text = triplets_csv(triplets)
        assert text.splitlines()[0] == "anchor_id,positive_id,negative_id"
        assert tuple(load_triplets_csv(text)) == triplets

    def test_merge_report_lists_groups_and_skips(self):
        import json

        corpus = _corpus({"a": ["a1"], "b": ["b1", "b2"]})
        merge = MergeMap.identity(["a", "b"])
        build = build_triplets(corpus, merge)
        doc = json.loads(merge_report(merge, build))
        assert doc["groups"] == [["a"], ["b"]]
        assert doc["skipped_singleton"] == ["a1"]
