"""The persisted network model: loadings, correlations, and dimension metadata.

A network directory contains a JSON ``manifest`` plus binary matrices:

    manifest         version, sizes, threshold, dimension metadata, checksums
    lambda.bin       p x k pattern loadings
    phi.bin          k x k component correlations
    indicators.csv   id,text,construct,source for the training corpus
    embeddings.bin   optional: corpus embedding vectors (needed to project)
    similarity.bin   optional: full training similarity matrix

Binary files are row-major little-endian float64 with two little-endian
uint32 dimensions in front. Every file is checksummed in the manifest;
round-trips are bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import factor
from .corpus import Corpus, parse_corpus
from .errors import CorruptNetwork

FORMAT_MAJOR = 1
FORMAT_MINOR = 1


@dataclass(frozen=True)
class DimensionMeta:
    """Name, definition, and representative examples for one dimension."""

    index: int  # 1-based, Dim 1 has the largest eigenvalue
    name: str
    definition: str
    example_indicators: tuple[str, ...]
    indicator_count: int = 0


@dataclass(frozen=True)
class NetworkModel:
    loadings: np.ndarray  # p x k pattern matrix
    phi: np.ndarray  # k x k component correlations
    eigenvalues: np.ndarray  # length k, descending
    threshold: float
    indicator_ids: tuple[str, ...]
    dimensions: tuple[DimensionMeta, ...]
    extraction: str  # "pca" or "paf"
    display_threshold: Optional[float] = None

    @property
    def p(self) -> int:
        return self.loadings.shape[0]

    @property
    def k(self) -> int:
        return self.loadings.shape[1]

    def dimension(self, index: int) -> DimensionMeta:
        return self.dimensions[index - 1]

    def validate(self) -> None:
        if self.loadings.shape != (len(self.indicator_ids), self.k):
            raise ValueError("loadings shape inconsistent with indicator ids")
        if self.phi.shape != (self.k, self.k):
            raise ValueError("phi shape inconsistent with loadings")
        if not np.allclose(self.phi, self.phi.T, atol=1e-10):
            raise ValueError("phi must be symmetric")
        if not np.allclose(np.diag(self.phi), 1.0, atol=1e-10):
            raise ValueError("phi must have unit diagonal")
        if np.linalg.eigvalsh(self.phi).min() <= 1e-10:
            raise ValueError("phi must be positive definite")
        if np.any(np.diff(self.eigenvalues) > 0):
            raise ValueError("eigenvalues must be in descending order")
        names = [d.name for d in self.dimensions]
        if len(set(names)) != len(names):
            raise ValueError("dimension names must be unique")
        if [d.index for d in self.dimensions] != list(range(1, self.k + 1)):
            raise ValueError("dimension indices must be 1..k in order")
        if self.extraction not in ("pca", "paf"):
            raise ValueError(f"unknown extraction {self.extraction!r}")

    def explained_variance(self) -> tuple[np.ndarray, np.ndarray]:
        return factor.explained_variance(self.eigenvalues, self.p)

    def project(self, similarity_rows: np.ndarray) -> np.ndarray:
        return factor.project(similarity_rows, self.loadings, self.phi)

    def assignments(self) -> list[tuple[int, int, float]]:
        return factor.threshold_loadings(self.loadings, self.threshold)

    def primary_assignments(self) -> dict[int, int]:
        return factor.primary_assignments(self.loadings, self.threshold)

    def with_dimensions(self, dimensions: tuple[DimensionMeta, ...]) -> "NetworkModel":
        return replace(self, dimensions=dimensions)


def _write_matrix(path: Path, matrix: np.ndarray) -> None:
    matrix = np.ascontiguousarray(matrix, dtype=np.float64)
    header = struct.pack("<II", matrix.shape[0], matrix.shape[1])
    path.write_bytes(header + matrix.astype("<f8").tobytes())


def _read_matrix(path: Path) -> np.ndarray:
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise CorruptNetwork(f"missing matrix file {path.name}") from exc
    if len(blob) < 8:
        raise CorruptNetwork(f"truncated matrix file {path.name}")
    rows, cols = struct.unpack("<II", blob[:8])
    expected = 8 + 8 * rows * cols
    if len(blob) != expected:
        raise CorruptNetwork(f"matrix file {path.name} has wrong length")
    return np.frombuffer(blob[8:], dtype="<f8").reshape(rows, cols).astype(np.float64)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_network(
    model: NetworkModel,
    directory: str | Path,
    corpus: Corpus | None = None,
    embeddings: np.ndarray | None = None,
    similarity: np.ndarray | None = None,
) -> Path:
    """Write a network directory; returns the directory path."""
    model.validate()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    files: dict[str, str] = {}
    _write_matrix(directory / "lambda.bin", model.loadings)
    files["lambda.bin"] = _sha256(directory / "lambda.bin")
    _write_matrix(directory / "phi.bin", model.phi)
    files["phi.bin"] = _sha256(directory / "phi.bin")
    if corpus is not None:
        (directory / "indicators.csv").write_bytes(corpus.canonical_csv())
        files["indicators.csv"] = _sha256(directory / "indicators.csv")
    if embeddings is not None:
        _write_matrix(directory / "embeddings.bin", embeddings)
        files["embeddings.bin"] = _sha256(directory / "embeddings.bin")
    if similarity is not None:
        _write_matrix(directory / "similarity.bin", similarity)
        files["similarity.bin"] = _sha256(directory / "similarity.bin")

    manifest = {
        "format_version": [FORMAT_MAJOR, FORMAT_MINOR],
        "p": model.p,
        "k": model.k,
        "threshold": model.threshold,
        "display_threshold": model.display_threshold,
        "extraction": model.extraction,
        "eigenvalues": [float(v) for v in model.eigenvalues],
        "indicator_ids": list(model.indicator_ids),
        "dimensions": [
            {
                "index": d.index,
                "name": d.name,
                "definition": d.definition,
                "example_indicators": list(d.example_indicators),
                "indicator_count": d.indicator_count,
            }
            for d in model.dimensions
        ],
        "checksums": files,
    }
    (directory / "manifest").write_text(
        json.dumps(manifest, indent=2, sort_keys=False) + "\n", encoding="utf-8"
    )
    return directory


def load_network(directory: str | Path) -> NetworkModel:
    directory = Path(directory)
    manifest = read_manifest(directory)
    _verify_checksums(directory, manifest)

    loadings = _read_matrix(directory / "lambda.bin")
    phi = _read_matrix(directory / "phi.bin")
    dimensions = tuple(
        DimensionMeta(
            index=d["index"],
            name=d["name"],
            definition=d["definition"],
            example_indicators=tuple(d["example_indicators"]),
            indicator_count=d["indicator_count"],
        )
        for d in manifest["dimensions"]
    )
    model = NetworkModel(
        loadings=loadings,
        phi=phi,
        eigenvalues=np.array(manifest["eigenvalues"], dtype=np.float64),
        threshold=float(manifest["threshold"]),
        indicator_ids=tuple(manifest["indicator_ids"]),
        dimensions=dimensions,
        extraction=manifest["extraction"],
        # Added in format 1.1; older networks load with no display threshold.
        display_threshold=manifest.get("display_threshold"),
    )
    model.validate()
    return model


def read_manifest(directory: str | Path) -> dict:
    path = Path(directory) / "manifest"
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CorruptNetwork(f"missing manifest in {directory}") from exc
    except json.JSONDecodeError as exc:
        raise CorruptNetwork(f"manifest is not valid JSON: {exc}") from exc
    version = manifest.get("format_version", [0, 0])
    if version[0] != FORMAT_MAJOR or version[1] > FORMAT_MINOR:
        raise CorruptNetwork(
            f"unsupported network format {version}; this build reads "
            f"{FORMAT_MAJOR}.0 through {FORMAT_MAJOR}.{FORMAT_MINOR}"
        )
    return manifest


def _verify_checksums(directory: Path, manifest: dict) -> None:
    for name, expected in manifest.get("checksums", {}).items():
        path = directory / name
        if not path.exists():
            raise CorruptNetwork(f"missing file {name}")
        actual = _sha256(path)
        if actual != expected:
            raise CorruptNetwork(f"checksum mismatch for {name}")


def load_embeddings(directory: str | Path) -> np.ndarray:
    return _read_matrix(Path(directory) / "embeddings.bin")


def load_similarity(directory: str | Path) -> np.ndarray:
    return _read_matrix(Path(directory) / "similarity.bin")


def load_indicators(directory: str | Path) -> Corpus:
    path = Path(directory) / "indicators.csv"
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptNetwork("missing indicators.csv") from exc
    return parse_corpus(content)


def loadings_csv(model: NetworkModel) -> str:
    """Loading matrix as CSV with 6-decimal fixed precision."""
    header = "id," + ",".join(f"dim_{d.index}" for d in model.dimensions)
    lines = [header]
    for ind_id, row in zip(model.indicator_ids, model.loadings):
        lines.append(ind_id + "," + ",".join(f"{x:.6f}" for x in row))
    return "\n".join(lines) + "\n"
