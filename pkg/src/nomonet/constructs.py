"""Construct-label merging and contrastive triplet construction.

Labels that differ only superficially ("health selfefficacy" vs "health self
efficacy") or that are near-synonyms are merged into canonical groups, either
by edit distance or by embedding similarity. Triplets pair two indicators
from the same group with one from a different group, balanced per anchor.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import Corpus, normalize_label
from .embedding import ProviderConfig, embed_batch
from .errors import NomonetError


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit-cost insert, delete, and substitute."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,  # delete
                    current[j - 1] + 1,  # insert
                    previous[j - 1] + (ca != cb),  # substitute
                )
            )
        previous = current
    return previous[-1]


class _DisjointSet:
    def __init__(self, items: Iterable[str]):
        self.parent = {item: item for item in items}

    def find(self, item: str) -> str:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


@dataclass(frozen=True)
class MergeMap:
    """A partition of construct labels into canonical groups.

    Groups are the connected components of the pairwise-match graph, so the
    partition is the transitive closure of the pairwise relation.
    """

    groups: tuple[tuple[str, ...], ...]
    method: str  # "edit", "semantic", or "identity"
    parameter: float

    def __post_init__(self):
        labels = [label for group in self.groups for label in group]
        if len(labels) != len(set(labels)):
            raise ValueError("merge groups must form a true partition")

    @property
    def label_to_group(self) -> dict[str, int]:
        try:
            return self._cache
        except AttributeError:
            mapping = {
                label: gi for gi, group in enumerate(self.groups) for label in group
            }
            object.__setattr__(self, "_cache", mapping)
            return mapping

    def group_of(self, label: str) -> int:
        try:
            return self.label_to_group[label]
        except KeyError:
            raise NomonetError(f"label {label!r} not covered by merge map") from None

    def same_group(self, a: str, b: str) -> bool:
        return self.group_of(a) == self.group_of(b)

    @staticmethod
    def identity(labels: Iterable[str]) -> "MergeMap":
        """Each label its own group (the pre-merge, stage-1 configuration)."""
        unique = sorted(set(labels))
        return MergeMap(
            groups=tuple((label,) for label in unique), method="identity", parameter=0.0
        )


def _components(labels: Sequence[str], matches: Iterable[tuple[str, str]]) -> tuple[tuple[str, ...], ...]:
    dsu = _DisjointSet(labels)
    for a, b in matches:
        dsu.union(a, b)
    grouped: dict[str, list[str]] = {}
    for label in labels:
        grouped.setdefault(dsu.find(label), []).append(label)
    return tuple(tuple(sorted(group)) for group in sorted(grouped.values()))


def merge_constructs_edit(labels: Iterable[str], d: int = 1) -> MergeMap:
    """Group labels whose pairwise edit distance is at most ``d``."""
    unique = sorted(set(labels))
    matches = []
    for i, a in enumerate(unique):
        for b in unique[i + 1 :]:
            if abs(len(a) - len(b)) <= d and edit_distance(a, b) <= d:
                matches.append((a, b))
    return MergeMap(groups=_components(unique, matches), method="edit", parameter=float(d))


def merge_constructs_semantic(
    labels: Iterable[str], provider: ProviderConfig, tau: float = 0.75
) -> MergeMap:
    """Group labels whose embedding cosine similarity is at least ``tau``."""
    unique = sorted(set(labels))
    if not unique:
        raise ValueError("labels must be nonempty")
    vectors = embed_batch(provider, unique)
    sims = vectors @ vectors.T  # unit rows
    matches = [
        (unique[i], unique[j])
        for i in range(len(unique))
        for j in range(i + 1, len(unique))
        if sims[i, j] >= tau
    ]
    return MergeMap(groups=_components(unique, matches), method="semantic", parameter=float(tau))


@dataclass(frozen=True)
class Triplet:
    anchor: str
    positive: str
    negative: str


@dataclass(frozen=True)
class TripletBuild:
    triplets: tuple[Triplet, ...]
    skipped_singleton: tuple[str, ...]  # anchors whose group offers no positive
    skipped_no_negative: tuple[str, ...]  # anchors with no out-group indicator
    unlabeled: tuple[str, ...]  # indicators excluded for missing labels


def _substream(seed: int, indicator_id: str) -> np.random.Generator:
    digest = hashlib.sha256(indicator_id.encode("utf-8")).digest()
    return np.random.default_rng((seed, int.from_bytes(digest[:8], "little")))


def build_triplets(
    corpus: Corpus,
    merge: MergeMap,
    n_pos: int = 3,
    n_neg: int = 3,
    seed: int = 0,
) -> TripletBuild:
    """Balanced triplets for every labeled indicator.

    Each anchor contributes ``min(n_pos, group size - 1)`` triplets: distinct
    positives from its own group, each paired with a negative from outside
    the group (distinct per anchor while the out-group allows, capped at
    ``n_neg`` distinct negatives). Sampling is deterministic for a given
    seed regardless of iteration order: every anchor draws from its own
    substream derived from (seed, indicator id).
    """
    if n_pos < 1 or n_neg < 1:
        raise ValueError("n_pos and n_neg must be >= 1")

    group_members: dict[int, list[str]] = {}
    anchor_group: dict[str, int] = {}
    unlabeled: list[str] = []
    for ind in corpus:
        label = normalize_label(ind.construct_label)
        if label is None:
            unlabeled.append(ind.id)
            continue
        group = merge.group_of(label)
        group_members.setdefault(group, []).append(ind.id)
        anchor_group[ind.id] = group

    total_labeled = len(anchor_group)
    triplets: list[Triplet] = []
    skipped_singleton: list[str] = []
    skipped_no_negative: list[str] = []
    for ind in corpus:
        if ind.id not in anchor_group:
            continue
        group = anchor_group[ind.id]
        members = group_members[group]
        positives_pool = [m for m in members if m != ind.id]
        if not positives_pool:
            skipped_singleton.append(ind.id)
            continue
        out_group_size = total_labeled - len(members)
        if out_group_size == 0:
            skipped_no_negative.append(ind.id)
            continue
        rng = _substream(seed, ind.id)
        m = min(n_pos, len(positives_pool))
        positives = rng.choice(positives_pool, size=m, replace=False)
        negatives_pool = [
            other
            for other_group, other_members in sorted(group_members.items())
            if other_group != group
            for other in other_members
        ]
        distinct = min(m, n_neg, len(negatives_pool))
        drawn = list(rng.choice(negatives_pool, size=distinct, replace=False))
        negatives = [drawn[i % distinct] for i in range(m)]
        for pos, neg in zip(positives, negatives):
            triplets.append(Triplet(anchor=ind.id, positive=str(pos), negative=str(neg)))

    return TripletBuild(
        triplets=tuple(triplets),
        skipped_singleton=tuple(skipped_singleton),
        skipped_no_negative=tuple(skipped_no_negative),
        unlabeled=tuple(unlabeled),
    )


def triplets_csv(triplets: Iterable[Triplet]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["anchor_id", "positive_id", "negative_id"])
    for t in triplets:
        writer.writerow([t.anchor, t.positive, t.negative])
    return buf.getvalue()


def load_triplets_csv(content: str) -> list[Triplet]:
    reader = csv.DictReader(io.StringIO(content))
    required = {"anchor_id", "positive_id", "negative_id"}
    if not required.issubset(reader.fieldnames or []):
        raise NomonetError("triplet CSV must have anchor_id,positive_id,negative_id")
    return [
        Triplet(row["anchor_id"], row["positive_id"], row["negative_id"])
        for row in reader
    ]


def merge_report(merge: MergeMap, build: Optional[TripletBuild] = None) -> str:
    """JSON report listing groups and, when available, skipped indicators."""
    doc: dict = {
        "method": merge.method,
        "parameter": merge.parameter,
        "groups": [list(group) for group in merge.groups],
    }
    if build is not None:
        doc["triplets"] = len(build.triplets)
        doc["skipped_singleton"] = list(build.skipped_singleton)
        doc["skipped_no_negative"] = list(build.skipped_no_negative)
        doc["unlabeled"] = list(build.unlabeled)
    return json.dumps(doc, indent=2)
