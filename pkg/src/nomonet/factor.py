"""Latent-dimension extraction, rotation, thresholding, and projection.

The pipeline extracts components directly from a similarity matrix (treated
as a correlation-like matrix with unit diagonal), rotates them obliquely so
dimensions may correlate, keeps only strong loadings, and can project new
similarity rows into the fitted space.

All functions are pure and deterministic for fixed inputs; loading columns
are sign-fixed so the largest-magnitude entry of each column is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyExtraction,
    IllConditioned,
    InsufficientRank,
    SingularRotation,
)

DEFAULT_THRESHOLD = 0.55
_POSITIVE_EIGENVALUE = 1e-12


@dataclass(frozen=True)
class Extraction:
    """Unrotated loadings with their component eigenvalues (descending)."""

    loadings: np.ndarray
    eigenvalues: np.ndarray
    method: str
    converged: bool = True
    heywood: bool = False
    degenerate: bool = False
    iterations: int = 0
    communalities: np.ndarray | None = None  # final estimates (paf only)


@dataclass(frozen=True)
class VarimaxResult:
    loadings: np.ndarray
    rotation: np.ndarray
    criterion_path: tuple[float, ...]


@dataclass(frozen=True)
class PromaxResult:
    pattern: np.ndarray
    phi: np.ndarray
    rotation: np.ndarray
    fallback: bool = False


def _descending_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition sorted descending, stable under ties."""
    values, vectors = np.linalg.eigh(matrix)
    order = np.argsort(-values, kind="stable")
    return values[order], vectors[:, order]

def _fix_column_signs(loadings: np.ndarray) -> np.ndarray:
    fixed = loadings.copy()
    for j in range(fixed.shape[1]):
        col = fixed[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            fixed[:, j] = -col
    return fixed


def _resolve_k(eigenvalues: np.ndarray, k) -> int:
    positive = int(np.sum(eigenvalues > _POSITIVE_EIGENVALUE))
    if k == "kaiser":
        retained = int(np.sum(eigenvalues > 1.0))
        if retained == 0:
            raise EmptyExtraction("no eigenvalue exceeds 1; nothing to retain")
        return retained
    k = int(k)
    if k < 1:
        raise ValueError("component count must be >= 1")
    if k > positive:
        raise InsufficientRank(
            f"requested {k} components but only {positive} positive eigenvalues"
        )
    return k


def extract_pca(S: np.ndarray, k="kaiser") -> Extraction:
    """Principal components of a similarity matrix.

    Column j of the loadings is eigenvector_j scaled by sqrt(eigenvalue_j).
    ``k`` is an explicit component count or ``"kaiser"`` (retain eigenvalues
    greater than 1).
    """
    S = np.asarray(S, dtype=np.float64)
    values, vectors = _descending_eigh(S)
    k = _resolve_k(values, k)
    retained = values[:k]
    loadings = vectors[:, :k] * np.sqrt(retained)
    return Extraction(
        loadings=_fix_column_signs(loadings),
        eigenvalues=retained.copy(),
        method="pca",
    )


def extract_paf(
    S: np.ndarray, k, max_iter: int = 100, tol: float = 1e-6
) -> Extraction:
    """Principal axis factoring: iterated communalities on the reduced matrix.

    Initial communalities are the largest absolute off-diagonal entry per
    row. Communalities above 1 (Heywood cases) are clamped and flagged; if
    the communality updates do not settle within ``max_iter`` iterations the
    last iterate is returned flagged as non-converged.
    """
    S = np.asarray(S, dtype=np.float64)
    p = S.shape[0]
    off = np.abs(S - np.diag(np.diag(S)))
    communalities = off.max(axis=1)

    # Component count resolved against the full matrix so the kaiser rule
    # has its usual meaning.
    k = _resolve_k(_descending_eigh(S)[0], k)

    def reduced_loadings(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        reduced = S.copy()
        np.fill_diagonal(reduced, h)
        values, vectors = _descending_eigh(reduced)
        retained = values[:k]
        loadings = vectors[:, :k] * np.sqrt(np.maximum(retained, 0.0))
        return loadings, retained

    heywood = False
    loadings, values = reduced_loadings(communalities)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        updated = np.sum(loadings**2, axis=1)
        if np.any(updated > 1.0):
            heywood = True
            updated = np.minimum(updated, 1.0)
        delta = float(np.max(np.abs(updated - communalities)))
        communalities = updated
        if delta < tol:
            converged = True
            break
        loadings, values = reduced_loadings(communalities)

    degenerate = bool(np.all(values <= _POSITIVE_EIGENVALUE))
    return Extraction(
        loadings=_fix_column_signs(loadings),
        eigenvalues=values.copy(),
        method="paf",
        converged=converged,
        heywood=heywood,
        degenerate=degenerate,
        iterations=iterations if max_iter > 0 else 0,
        communalities=communalities.copy(),
    )


def varimax_criterion(loadings: np.ndarray) -> float:
    """Sum over columns of the variance of squared row-normalized loadings."""
    h = np.linalg.norm(loadings, axis=1)
    scale = np.where(h > 0, h, 1.0)
    squared = (loadings / scale[:, None]) ** 2
    return float(np.sum(squared.var(axis=0)))


def varimax(
    loadings: np.ndarray, tol: float = 1e-8, max_sweeps: int = 1000
) -> VarimaxResult:
    """Orthogonal rotation to simple structure via pairwise column rotations.

    Uses Kaiser row normalization. Each pairwise rotation maximizes the
    two-column criterion in closed form, so the criterion is non-decreasing
    by construction; sweeps stop once a full sweep improves it by less than
    ``tol``.
    """
    loadings = np.asarray(loadings, dtype=np.float64)
    p, k = loadings.shape
    if k == 1:
        return VarimaxResult(
            loadings=loadings.copy(),
            rotation=np.eye(1),
            criterion_path=(varimax_criterion(loadings),),
        )

    h = np.linalg.norm(loadings, axis=1)
    scale = np.where(h > 0, h, 1.0)
    X = loadings / scale[:, None]
    R = np.eye(k)
    path = [float(np.sum((X**2).var(axis=0)))]

    for _ in range(max_sweeps):
        for i in range(k - 1):
            for j in range(i + 1, k):
                x, y = X[:, i], X[:, j]
                u = x * x - y * y
                v = 2.0 * x * y
                a, b = u.sum(), v.sum()
                c = np.sum(u * u - v * v)
                d = 2.0 * np.sum(u * v)
                num = d - 2.0 * a * b / p
                den = c - (a * a - b * b) / p
                angle = 0.25 * math.atan2(num, den)
                if abs(angle) < 1e-14:
                    continue
                cs, sn = math.cos(angle), math.sin(angle)
                rot = np.array([[cs, -sn], [sn, cs]])
                X[:, [i, j]] = X[:, [i, j]] @ rot
                R[:, [i, j]] = R[:, [i, j]] @ rot
        path.append(float(np.sum((X**2).var(axis=0))))
        if path[-1] - path[-2] < tol:
            break

    return VarimaxResult(
        loadings=loadings @ R,
        rotation=R,
        criterion_path=tuple(path),
    )


def promax(loadings: np.ndarray, kappa: float = 4.0) -> PromaxResult:
    """Oblique rotation: varimax, then least-squares fit to a powered target.

    The target raises row-normalized varimax loadings to ``kappa`` with sign
    preserved; the fitted transformation is column-scaled so the component
    correlation matrix has a unit diagonal. The rank-k reconstruction
    ``pattern @ phi @ pattern.T`` equals ``loadings @ loadings.T`` exactly.

    A singular transformation falls back to the varimax solution with an
    identity correlation matrix, flagged via ``fallback=True``.
    """
    loadings = np.asarray(loadings, dtype=np.float64)
    p, k = loadings.shape
    if k == 1:
        return PromaxResult(
            pattern=_fix_column_signs(loadings),
            phi=np.ones((1, 1)),
            rotation=np.eye(1),
        )

    vm = varimax(loadings)
    try:
        pattern, phi, transform = _promax_transform(loadings, vm, kappa)
        fallback = False
    except SingularRotation:
        pattern, phi, transform = vm.loadings, np.eye(k), vm.rotation
        fallback = True

    signs = np.ones(k)
    for j in range(k):
        col = pattern[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            signs[j] = -1.0
    pattern = pattern * signs
    phi = phi * np.outer(signs, signs)
    transform = transform * signs
    phi = (phi + phi.T) / 2.0
    np.fill_diagonal(phi, 1.0)
    return PromaxResult(pattern=pattern, phi=phi, rotation=transform, fallback=fallback)


def _promax_transform(
    loadings: np.ndarray, vm: VarimaxResult, kappa: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    h = np.linalg.norm(loadings, axis=1)
    scale = np.where(h > 0, h, 1.0)
    X = vm.loadings / scale[:, None]
    target = np.abs(X) ** (kappa - 1.0) * X
    gram = X.T @ X
    if np.linalg.cond(gram) > 1e12:
        raise SingularRotation("varimax loadings are rank deficient")
    try:
        coef = np.linalg.solve(gram, X.T @ target)
        gram_inv = np.linalg.inv(coef.T @ coef)
        coef = coef @ np.diag(np.sqrt(np.diag(gram_inv)))
        coef_inv = np.linalg.inv(coef)
    except np.linalg.LinAlgError as exc:
        raise SingularRotation(str(exc)) from exc
    if not np.all(np.isfinite(coef)):
        raise SingularRotation("non-finite rotation transform")
    pattern = vm.loadings @ coef
    phi = coef_inv @ coef_inv.T
    return pattern, phi, vm.rotation @ coef


def threshold_loadings(
    pattern: np.ndarray, threshold: float = DEFAULT_THRESHOLD
) -> list[tuple[int, int, float]]:
    """Entries with absolute loading >= threshold (inclusive boundary).

    Returns (indicator_row, dimension, loading) tuples with 1-based
    dimensions; an indicator may appear under several dimensions or none.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    pattern = np.asarray(pattern, dtype=np.float64)
    rows, cols = np.nonzero(np.abs(pattern) >= threshold)
    return [(int(r), int(c) + 1, float(pattern[r, c])) for r, c in zip(rows, cols)]


def unassigned_indicators(
    pattern: np.ndarray, threshold: float = DEFAULT_THRESHOLD
) -> list[int]:
    """Row indices whose largest absolute loading falls below the threshold."""
    pattern = np.asarray(pattern, dtype=np.float64)
    return [int(i) for i in np.flatnonzero(np.max(np.abs(pattern), axis=1) < threshold)]


def primary_assignments(
    pattern: np.ndarray, threshold: float = DEFAULT_THRESHOLD
) -> dict[int, int]:
    """Map indicator row -> 1-based dimension with its largest qualifying loading.

    Ties in absolute loading break toward the lower dimension index; rows
    with no qualifying loading are absent from the map.
    """
    pattern = np.asarray(pattern, dtype=np.float64)
    out: dict[int, int] = {}
    magnitudes = np.abs(pattern)
    for i in range(pattern.shape[0]):
        best = int(np.argmax(magnitudes[i]))  # argmax returns first maximum
        if magnitudes[i, best] >= threshold:
            out[i] = best + 1
    return out


def project(
    similarity_rows: np.ndarray, pattern: np.ndarray, phi: np.ndarray
) -> np.ndarray:
    """Map similarity rows against the training corpus into loading space.

    Solves the model-implied covariance relation for the new loadings using
    the right pseudoinverse of the pattern transpose:
    ``rows @ pattern @ inv(pattern.T @ pattern) @ inv(phi)``.
    """
    rows = np.asarray(similarity_rows, dtype=np.float64)
    single = rows.ndim == 1
    rows = np.atleast_2d(rows)
    pattern = np.asarray(pattern, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if rows.shape[1] != pattern.shape[0]:
        raise DimensionMismatch(
            f"similarity row length {rows.shape[1]} != corpus size {pattern.shape[0]}"
        )
    gram = pattern.T @ pattern
    if np.linalg.cond(gram) > 1e12:
        raise IllConditioned("pattern gram matrix condition number exceeds 1e12")
    projected = np.linalg.solve(gram, (rows @ pattern).T).T
    projected = np.linalg.solve(phi, projected.T).T
    return projected[0] if single else projected


def explained_variance(eigenvalues: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension and cumulative variance fractions (eigenvalue / p)."""
    eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
    proportions = eigenvalues / float(p)
    return proportions, np.cumsum(proportions)


def reconstruction(pattern: np.ndarray, phi: np.ndarray | None = None) -> np.ndarray:
    """Rank-k model-implied similarity: pattern @ phi @ pattern.T."""
    pattern = np.asarray(pattern, dtype=np.float64)
    if phi is None:
        return pattern @ pattern.T
    return pattern @ np.asarray(phi, dtype=np.float64) @ pattern.T
