"""End-to-end workflows: build a network from a corpus, project new items.

The same projection code path backs both the CLI and the HTTP service, so
their CSV outputs are byte-identical by construction.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import factor
from .corpus import Corpus, preprocess
from .embedding import EmbeddingCache, ProviderConfig, embed_batch
from .errors import EmptyIndicator, NamingFailure, NomonetError
from .graph import NetworkGraph, build_graph
from .naming import (
    DimensionNaming,
    MockNamingClient,
    NameProposal,
    NamingClient,
    ensure_unique,
    name_dimension,
    weighted_sample,
)
from .network import (
    DimensionMeta,
    NetworkModel,
    load_embeddings,
    load_indicators,
    load_network,
    save_network,
)
from .similarity import SimilarityMatrix, similarity_matrix, similarity_rows


@dataclass(frozen=True)
class BuildArtifacts:
    model: NetworkModel
    similarity: SimilarityMatrix
    embeddings: np.ndarray
    corpus: Corpus
    graph: NetworkGraph


def build_network(
    corpus: Corpus,
    provider: ProviderConfig,
    components="kaiser",
    threshold: float = factor.DEFAULT_THRESHOLD,
    extraction: str = "pca",
    kappa: float = 4.0,
    naming_client: Optional[NamingClient] = None,
    cache_dir: Optional[str | Path] = None,
    naming_seed: int = 0,
    max_naming_sample: int = 1000,
) -> BuildArtifacts:
    """Run ingest -> embed -> similarity -> extraction -> rotation -> naming."""
    if len(corpus) < 2:
        raise NomonetError("need at least 2 indicators to build a network")
    texts = corpus.texts()
    if cache_dir is not None:
        vectors = EmbeddingCache(cache_dir).get_or_embed(provider, texts)
    else:
        vectors = embed_batch(provider, texts)
    sims = similarity_matrix(vectors, corpus.ids())

    if extraction == "pca":
        extracted = factor.extract_pca(sims.values, components)
    elif extraction == "paf":
        extracted = factor.extract_paf(sims.values, components)
    else:
        raise NomonetError(f"unknown extraction method {extraction!r}")

    rotated = factor.promax(extracted.loadings, kappa=kappa)
    pattern, phi = rotated.pattern, rotated.phi

    primary = factor.primary_assignments(pattern, threshold)
    counts = {dim: 0 for dim in range(1, pattern.shape[1] + 1)}
    for dim in primary.values():
        counts[dim] += 1

    client = naming_client if naming_client is not None else MockNamingClient()
    dimensions = _name_dimensions(
        client,
        pattern,
        threshold,
        corpus,
        counts,
        seed=naming_seed,
        max_sample=max_naming_sample,
    )

    model = NetworkModel(
        loadings=pattern,
        phi=phi,
        eigenvalues=extracted.eigenvalues,
        threshold=threshold,
        indicator_ids=tuple(corpus.ids()),
        dimensions=dimensions,
        extraction=extraction,
    )
    model.validate()
    return BuildArtifacts(
        model=model,
        similarity=sims,
        embeddings=vectors,
        corpus=corpus,
        graph=build_graph(model),
    )


def _name_dimensions(
    client: NamingClient,
    pattern: np.ndarray,
    threshold: float,
    corpus: Corpus,
    counts: dict[int, int],
    seed: int,
    max_sample: int,
) -> tuple[DimensionMeta, ...]:
    indicators = list(corpus)
    namings: list[DimensionNaming] = []
    for dim in range(1, pattern.shape[1] + 1):
        column = pattern[:, dim - 1]
        qualifying = [
            (row, float(column[row]))
            for row in range(len(indicators))
            if abs(column[row]) >= threshold
        ]
        pool = qualifying or [(row, float(column[row])) for row in range(len(indicators))]
        sample = weighted_sample(pool, max_n=max_sample, seed=seed + dim)
        rows = list(sample.items)
        sample_texts = tuple(indicators[row].text for row in rows)
        sample_labels = tuple(indicators[row].construct_label or "" for row in rows)
        try:
            proposal = name_dimension(
                client,
                sample_texts,
                sample_labels,
                dimension_index=dim,
            )
        except NamingFailure:
            proposal = NameProposal(
                name=f"Dim {dim}",
                definition="No stable name could be generated for this dimension.",
                examples=sample_texts[: min(3, len(sample_texts))],
            )
        namings.append(
            DimensionNaming(
                index=dim,
                sample_texts=sample_texts,
                sample_labels=sample_labels,
                proposal=proposal,
            )
        )
    finals = ensure_unique(namings, client)
    return tuple(
        DimensionMeta(
            index=naming.index,
            name=proposal.name,
            definition=proposal.definition,
            example_indicators=proposal.examples,
            indicator_count=counts.get(naming.index, 0),
        )
        for naming, proposal in zip(namings, finals)
    )


@dataclass(frozen=True)
class LoadedNetwork:
    """A network directory pulled into memory for projection and browsing."""

    network_id: str
    model: NetworkModel
    corpus: Corpus
    embeddings: np.ndarray

    @staticmethod
    def load(directory: str | Path) -> "LoadedNetwork":
        directory = Path(directory)
        return LoadedNetwork(
            network_id=directory.name,
            model=load_network(directory),
            corpus=load_indicators(directory),
            embeddings=load_embeddings(directory),
        )


def write_network(artifacts: BuildArtifacts, directory: str | Path) -> Path:
    return save_network(
        artifacts.model,
        directory,
        corpus=artifacts.corpus,
        embeddings=artifacts.embeddings,
        similarity=artifacts.similarity.values,
    )


@dataclass(frozen=True)
class ProjectedItem:
    id: str
    text: str
    loadings: tuple[float, ...]
    # Qualifying dimensions sorted by absolute loading, strongest first.
    assignments: tuple[tuple[int, str, float], ...]


@dataclass(frozen=True)
class ProjectionResult:
    network_id: str
    items: tuple[ProjectedItem, ...]
    similarity: np.ndarray  # m x p rows against the training corpus
    vectors: np.ndarray  # m x d embeddings of the new items


class EmptyItems(NomonetError):
    """Some uploaded items had no content left after preprocessing."""

    def __init__(self, ids: Sequence[str]):
        self.ids = tuple(ids)
        super().__init__(f"items empty after preprocessing: {', '.join(self.ids)}")


EmbedFn = Callable[[ProviderConfig, Sequence[str]], np.ndarray]


def project_items(
    network: LoadedNetwork,
    items: Sequence[tuple[str, str]],
    provider: ProviderConfig,
    embed_fn: EmbedFn = embed_batch,
) -> ProjectionResult:
    """Preprocess, embed, correlate, and project new indicators.

    ``items`` are (id, raw text) pairs. Items that preprocess to nothing are
    reported together via EmptyItems.
    """
    if not items:
        raise EmptyItems([])
    processed: list[tuple[str, str]] = []
    empty: list[str] = []
    for item_id, raw in items:
        try:
            processed.append((item_id, preprocess(raw)))
        except EmptyIndicator:
            empty.append(item_id)
    if empty:
        raise EmptyItems(empty)

    vectors = embed_fn(provider, [text for _, text in processed])
    rows = similarity_rows(vectors, network.embeddings)
    lam = factor.project(rows, network.model.loadings, network.model.phi)
    lam = np.atleast_2d(lam)

    model = network.model
    projected = []
    for (item_id, text), loadings in zip(processed, lam):
        qualifying = [
            (dim, model.dimension(dim).name, float(loadings[dim - 1]))
            for dim in range(1, model.k + 1)
            if abs(loadings[dim - 1]) >= model.threshold
        ]
        qualifying.sort(key=lambda entry: (-abs(entry[2]), entry[0]))
        projected.append(
            ProjectedItem(
                id=item_id,
                text=text,
                loadings=tuple(float(x) for x in loadings),
                assignments=tuple(qualifying),
            )
        )
    return ProjectionResult(
        network_id=network.network_id,
        items=tuple(projected),
        similarity=rows,
        vectors=np.atleast_2d(vectors),
    )


def projection_loadings_csv(result: ProjectionResult, k: int) -> str:
    lines = ["id," + ",".join(f"dim_{j}" for j in range(1, k + 1))]
    for item in result.items:
        lines.append(item.id + "," + ",".join(f"{x:.6f}" for x in item.loadings))
    return "\n".join(lines) + "\n"


def projection_correlations_csv(result: ProjectionResult, corpus_ids: Sequence[str]) -> str:
    lines = ["id," + ",".join(corpus_ids)]
    for item, row in zip(result.items, result.similarity):
        lines.append(item.id + "," + ",".join(f"{x:.6f}" for x in row))
    return "\n".join(lines) + "\n"


def projection_embeddings_csv(result: ProjectionResult) -> str:
    dim = result.vectors.shape[1]
    lines = ["id," + ",".join(f"v{j}" for j in range(dim))]
    for item, vector in zip(result.items, result.vectors):
        lines.append(item.id + "," + ",".join(f"{x:.6f}" for x in vector))
    return "\n".join(lines) + "\n"


def parse_items_csv(content: str) -> list[tuple[str, str]]:
    """Rows of (id, raw text) from a CSV with id,text columns."""
    import csv as _csv

    reader = _csv.DictReader(io.StringIO(content))
    if not {"id", "text"}.issubset(reader.fieldnames or []):
        raise NomonetError("items CSV must have id,text columns")
    return [(row["id"], row["text"] or "") for row in reader]
