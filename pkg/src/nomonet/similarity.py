"""Cosine similarity and dense similarity matrices.

Matrices are computed row by row (one matrix-vector product per row) inside
row blocks, so the result is bit-identical for any block size: the summation
order within a row never changes. Dense float64 storage; intended ceiling is
p <= 50,000 indicators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroVector


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity <u,v> / (|u||v|)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} differ")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for zero vector")
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric p x p cosine matrix aligned with ``indicator_ids``."""

    values: np.ndarray
    indicator_ids: tuple[str, ...]

    @property
    def size(self) -> int:
        return self.values.shape[0]

    def row_for(self, indicator_id: str) -> np.ndarray:
        return self.values[self.indicator_ids.index(indicator_id)]


def similarity_matrix(
    vectors: np.ndarray,
    indicator_ids: list[str] | tuple[str, ...] | None = None,
    block: int = 256,
) -> SimilarityMatrix:
    """Compute all pairwise cosines of the rows of ``vectors``.

    ``block`` controls how many rows are materialized per chunk; it does not
    affect the numeric result.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < 2:
        raise DimensionMismatch("need at least 2 vectors of uniform dimension")
    if block < 1:
        raise ValueError("block must be positive")
    p = vectors.shape[0]
    norms = np.linalg.norm(vectors, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ZeroVector(f"zero vector at index {int(zero[0])}")

    out = np.empty((p, p), dtype=np.float64)
    for start in range(0, p, block):
        stop = min(start + block, p)
        for i in range(start, stop):
            # One gemv per row keeps the summation order fixed per row.
            out[i] = (vectors @ vectors[i]) / (norms * norms[i])
    if indicator_ids is None:
        indicator_ids = [str(i) for i in range(p)]
    if len(indicator_ids) != p:
        raise DimensionMismatch("indicator_ids length must match vector count")
    return SimilarityMatrix(values=out, indicator_ids=tuple(indicator_ids))


def similarity_rows(new_vectors: np.ndarray, corpus_vectors: np.ndarray) -> np.ndarray:
    """Cosines of each new vector against every corpus vector, shape (m, p)."""
    new_vectors = np.atleast_2d(np.asarray(new_vectors, dtype=np.float64))
    corpus_vectors = np.asarray(corpus_vectors, dtype=np.float64)
    if new_vectors.shape[1] != corpus_vectors.shape[1]:
        raise DimensionMismatch(
            f"dimension {new_vectors.shape[1]} vs corpus {corpus_vectors.shape[1]}"
        )
    corpus_norms = np.linalg.norm(corpus_vectors, axis=1)
    new_norms = np.linalg.norm(new_vectors, axis=1)
    if np.any(corpus_norms == 0.0) or np.any(new_norms == 0.0):
        raise ZeroVector("zero vector in similarity row computation")
    rows = np.empty((new_vectors.shape[0], corpus_vectors.shape[0]), dtype=np.float64)
    for i in range(new_vectors.shape[0]):
        rows[i] = (corpus_vectors @ new_vectors[i]) / (corpus_norms * new_norms[i])
    return rows


def export_matrix_csv(matrix: SimilarityMatrix) -> str:
    """CSV with indicator ids as header and 6-decimal fixed precision cells."""
    lines = ["id," + ",".join(matrix.indicator_ids)]
    for ind_id, row in zip(matrix.indicator_ids, matrix.values):
        lines.append(ind_id + "," + ",".join(f"{x:.6f}" for x in row))
    return "\n".join(lines) + "\n"
