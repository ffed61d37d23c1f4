"""Embedding providers, batching, and a persistent on-disk cache.

Two providers are supported: a deterministic character-trigram embedder used
for tests and demos (no network, fully reproducible), and a remote batch
provider speaking a minimal JSON protocol. All vectors are L2-normalized
client-side so downstream cosine similarity reduces to a dot product.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
import zlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import httpx
import numpy as np

from .errors import DimensionMismatch, ProviderError

logger = logging.getLogger(__name__)

TEST_EMBEDDER_DIM = 256
ENDPOINT_ENV_VAR = "NOMONET_EMBED_ENDPOINT"


@dataclass(frozen=True)
class ProviderConfig:
    """How to obtain embeddings.

    ``prompt_template`` must contain exactly one ``{indicator}`` placeholder.
    For remote providers the template is applied client-side by default
    (``client_side_template=True``) so any embedding endpoint works; set it
    to False when the server applies its own prompt.
    """

    kind: str = "deterministic-test"  # or "remote-batch"
    endpoint: str = ""
    prompt_template: str = "{indicator}"
    max_batch: int = 100
    timeout: float = 30.0
    client_side_template: bool = True

    def __post_init__(self):
        if self.kind not in ("deterministic-test", "remote-batch"):
            raise ValueError(f"unknown provider kind: {self.kind!r}")
        if self.prompt_template.count("{indicator}") != 1:
            raise ValueError(
                "prompt_template must contain exactly one {indicator} placeholder"
            )
        if self.max_batch < 1:
            raise ValueError("max_batch must be positive")

    def resolved_endpoint(self) -> str:
        return os.environ.get(ENDPOINT_ENV_VAR, "") or self.endpoint

    def fingerprint(self) -> str:
        """Stable cache key component; changing the prompt invalidates entries."""
        payload = json.dumps(
            {
                "kind": self.kind,
                "endpoint": self.resolved_endpoint() if self.kind == "remote-batch" else "",
                "prompt_template": self.prompt_template,
                "client_side_template": self.client_side_template,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def trigram_embed(text: str, dim: int = TEST_EMBEDDER_DIM) -> np.ndarray:
    """Deterministic test embedder: hashed character-trigram counts, unit norm.

    The text is padded with sentinel characters so even one-character inputs
    produce at least one trigram. Lexically similar texts share trigrams and
    therefore score high cosine similarity; this is a test vehicle, not a
    semantic model.
    """
    if not text:
        raise ValueError("cannot embed empty text")
    padded = "\x02" + text + "\x03"
    counts = np.zeros(dim, dtype=np.float64)
    for i in range(len(padded) - 2):
        bucket = zlib.crc32(padded[i : i + 3].encode("utf-8")) % dim
        counts[bucket] += 1.0
    return counts / np.linalg.norm(counts)


def apply_template(provider: ProviderConfig, text: str) -> str:
    return provider.prompt_template.replace("{indicator}", text)


def embed_batch(provider: ProviderConfig, texts: Sequence[str]) -> np.ndarray:
    """Embed texts in input order, returning an (n, d) float64 unit-row matrix.

    Remote requests are chunked to ``provider.max_batch`` texts. Identical
    texts always map to identical vectors within one provider.
    """
    if len(texts) == 0:
        raise ValueError("texts must be nonempty")
    for i, text in enumerate(texts):
        if not text:
            raise ValueError(f"text at index {i} is empty")

    if provider.kind == "deterministic-test":
        return np.vstack([trigram_embed(t) for t in texts])
    return _embed_remote(provider, texts)


def _embed_remote(provider: ProviderConfig, texts: Sequence[str]) -> np.ndarray:
    endpoint = provider.resolved_endpoint()
    if not endpoint:
        raise ProviderError("remote provider has no endpoint configured")
    payload_texts = (
        [apply_template(provider, t) for t in texts]
        if provider.client_side_template
        else list(texts)
    )
    chunks: list[np.ndarray] = []
    dim: int | None = None
    with httpx.Client(timeout=provider.timeout) as client:
        for batch_index, start in enumerate(range(0, len(payload_texts), provider.max_batch)):
            chunk = payload_texts[start : start + provider.max_batch]
            try:
                response = client.post(endpoint, json={"texts": chunk})
                response.raise_for_status()
                body = response.json()
            except (httpx.HTTPError, ValueError) as exc:
                raise ProviderError(str(exc), batch_index=batch_index) from exc
            vectors = body.get("vectors") if isinstance(body, dict) else None
            if vectors is None or len(vectors) != len(chunk):
                raise ProviderError(
                    "malformed response: expected one vector per text",
                    batch_index=batch_index,
                )
            arr = np.asarray(vectors, dtype=np.float64)
            if arr.ndim != 2:
                raise ProviderError("malformed response: ragged vectors", batch_index=batch_index)
            if dim is None:
                dim = arr.shape[1]
            elif arr.shape[1] != dim:
                raise DimensionMismatch(
                    f"batch {batch_index} returned dimension {arr.shape[1]}, expected {dim}"
                )
            norms = np.linalg.norm(arr, axis=1)
            if not np.all(np.isfinite(arr)) or np.any(norms == 0.0):
                raise ProviderError("non-finite or zero vector in response", batch_index=batch_index)
            chunks.append(arr / norms[:, None])
    return np.vstack(chunks)


class EmbeddingCache:
    """One binary file per (provider fingerprint, text) key.

    Entry format: little-endian uint32 dimension header followed by ``dim``
    little-endian float64 values. Writes go to a temp file renamed into
    place, so readers never observe partial entries; corrupt entries are
    discarded and recomputed with a warning.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, provider: ProviderConfig, text: str) -> Path:
        digest = hashlib.sha256(
            (provider.fingerprint() + "\x00" + text).encode("utf-8")
        ).hexdigest()
        return self.directory / f"{digest}.vec"

    def _read(self, path: Path) -> np.ndarray | None:
        try:
            blob = path.read_bytes()
        except OSError:
            return None
        if len(blob) < 4:
            return self._discard(path)
        (dim,) = struct.unpack("<I", blob[:4])
        if len(blob) != 4 + 8 * dim or dim == 0:
            return self._discard(path)
        vector = np.frombuffer(blob[4:], dtype="<f8").astype(np.float64)
        if not np.all(np.isfinite(vector)):
            return self._discard(path)
        return vector

    def _discard(self, path: Path) -> None:
        logger.warning("discarding corrupt cache entry %s", path.name)
        try:
            path.unlink()
        except OSError:
            pass
        return None

    def _write(self, path: Path, vector: np.ndarray) -> None:
        blob = struct.pack("<I", vector.shape[0]) + vector.astype("<f8").tobytes()
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(blob)
        os.replace(tmp, path)

    def get_or_embed(self, provider: ProviderConfig, texts: Sequence[str]) -> np.ndarray:
        """Return vectors for all texts, calling the provider only for misses."""
        hits: dict[int, np.ndarray] = {}
        misses: list[int] = []
        for i, text in enumerate(texts):
            cached = self._read(self._path(provider, text))
            if cached is not None:
                hits[i] = cached
            else:
                misses.append(i)
        if misses:
            # Deduplicate miss texts so repeated indicators cost one call.
            unique: dict[str, list[int]] = {}
            for i in misses:
                unique.setdefault(texts[i], []).append(i)
            fresh = embed_batch(provider, list(unique.keys()))
            for vector, indices in zip(fresh, unique.values()):
                for i in indices:
                    hits[i] = vector
                self._write(self._path(provider, texts[indices[0]]), vector)
        dims = {v.shape[0] for v in hits.values()}
        if len(dims) != 1:
            raise DimensionMismatch(f"cache holds mixed dimensions: {sorted(dims)}")
        return np.vstack([hits[i] for i in range(len(texts))])


def cache_get_or_embed(
    cache_dir: str | Path, provider: ProviderConfig, texts: Sequence[str]
) -> np.ndarray:
    return EmbeddingCache(cache_dir).get_or_embed(provider, texts)
