"""HTTP service over persisted network directories.

Endpoints (all JSON unless noted):

    GET  /v1/networks                              list available networks
    GET  /v1/networks/{id}/graph?min_weight=       graph document
    GET  /v1/networks/{id}/dimensions/{k}?page=    dimension detail, paginated
    GET  /v1/networks/{id}/search?q=&limit=        ranked matches
    GET  /v1/networks/{id}/loadings.csv            full loading matrix (CSV)
    POST /v1/networks/{id}/project                 project uploaded indicators
    GET  /v1/downloads/{token}/{filename}          projection artifacts (CSV)

Networks are immutable once built; each is loaded once and shared read-only
across requests. Projection responses are pure functions of the network
directory content and the request body; download artifacts are content-
addressed, so repeated identical requests yield identical tokens and bytes.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from . import graph as netgraph
from .embedding import ProviderConfig, embed_batch
from .errors import CorruptNetwork, ProviderError
from .network import loadings_csv
from .pipeline import (
    EmptyItems,
    LoadedNetwork,
    ProjectionResult,
    project_items,
    projection_correlations_csv,
    projection_embeddings_csv,
    projection_loadings_csv,
)

logger = logging.getLogger("nomonet.api")

MAX_PAGE_SIZE = 1000
DEFAULT_PAGE_SIZE = 100


@dataclass
class ServiceConfig:
    networks_dir: Path
    port: int = 8000
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    max_upload_indicators: int = 10_000
    parallelism: int = 4
    batch_window_seconds: float = 0.05

    @staticmethod
    def from_file(path: str | Path) -> "ServiceConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        provider = ProviderConfig(**doc.get("provider", {}))
        return ServiceConfig(
            networks_dir=Path(doc["networks_dir"]),
            port=int(doc.get("port", 8000)),
            provider=provider,
            max_upload_indicators=int(doc.get("max_upload_indicators", 10_000)),
            parallelism=int(doc.get("parallelism", 4)),
            batch_window_seconds=float(doc.get("batch_window_seconds", 0.05)),
        ).with_env_overrides()

    def with_env_overrides(self) -> "ServiceConfig":
        if "NOMONET_NETWORKS_DIR" in os.environ:
            self.networks_dir = Path(os.environ["NOMONET_NETWORKS_DIR"])
        if "NOMONET_PORT" in os.environ:
            self.port = int(os.environ["NOMONET_PORT"])
        return self


class EmbedBatcher:
    """Gathers embed calls from concurrent requests into shared provider batches.

    Requests enqueue their texts; the queue flushes when the pending count
    reaches the provider's max batch or after a short window. Each caller
    receives exactly the vectors for its own texts.
    """

    def __init__(self, provider: ProviderConfig, window_seconds: float = 0.05):
        self.provider = provider
        self.window = window_seconds
        self._pending: list[tuple[list[str], asyncio.Future]] = []
        self._lock = asyncio.Lock()
        self._timer: Optional[asyncio.Task] = None

    async def embed(self, texts: Sequence[str]) -> np.ndarray:
        loop = asyncio.get_running_loop()
        future: asyncio.Future = loop.create_future()
        async with self._lock:
            self._pending.append((list(texts), future))
            total = sum(len(t) for t, _ in self._pending)
            if total >= self.provider.max_batch:
                await self._flush_locked()
            elif self._timer is None:
                self._timer = loop.create_task(self._flush_after_window())
        return await future

    async def _flush_after_window(self):
        await asyncio.sleep(self.window)
        async with self._lock:
            await self._flush_locked()

    async def _flush_locked(self):
        if self._timer is not None:
            if self._timer is not asyncio.current_task() and not self._timer.done():
                self._timer.cancel()
            self._timer = None
        batch, self._pending = self._pending, []
        if not batch:
            return
        texts = [t for chunk, _ in batch for t in chunk]
        try:
            vectors = await asyncio.to_thread(embed_batch, self.provider, texts)
        except Exception as exc:  # propagate to every waiting request
            for _, future in batch:
                if not future.done():
                    future.set_exception(exc)
            return
        offset = 0
        for chunk, future in batch:
            if not future.done():
                future.set_result(vectors[offset : offset + len(chunk)])
            offset += len(chunk)


class ProjectItem(BaseModel):
    id: str
    text: str


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="nomonet", version="0.1.0")
    # The browser UI may be served from a different origin (e.g. a dev
    # server); the service is read-only per network, so open CORS is safe.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
        expose_headers=["X-Total-Count"],
    )
    networks: dict[str, LoadedNetwork] = {}
    batcher = EmbedBatcher(config.provider, config.batch_window_seconds)
    downloads_dir = config.networks_dir / "_downloads"
    downloads_dir.mkdir(parents=True, exist_ok=True)

    @app.middleware("http")
    async def request_log(request: Request, call_next):
        started = time.monotonic()
        response = await call_next(request)
        logger.info(
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "ms": round((time.monotonic() - started) * 1000, 2),
                }
            )
        )
        return response

    def get_network(network_id: str) -> LoadedNetwork:
        if network_id not in networks:
            directory = config.networks_dir / network_id
            if not (directory / "manifest").exists():
                raise HTTPException(404, f"unknown network {network_id!r}")
            try:
                networks[network_id] = LoadedNetwork.load(directory)
            except CorruptNetwork as exc:
                raise HTTPException(500, f"network {network_id!r} is corrupt: {exc}")
        return networks[network_id]

    @app.get("/v1/networks")
    def list_networks():
        out = []
        for entry in sorted(config.networks_dir.iterdir()) if config.networks_dir.exists() else []:
            if not (entry / "manifest").exists():
                continue
            net = get_network(entry.name)
            proportions, cumulative = net.model.explained_variance()
            out.append(
                {
                    "id": entry.name,
                    "p": net.model.p,
                    "k": net.model.k,
                    "threshold": net.model.threshold,
                    "extraction": net.model.extraction,
                    "explained_variance": float(cumulative[-1]),
                }
            )
        return out

    @app.get("/v1/networks/{network_id}/graph")
    def get_graph(network_id: str, min_weight: int = Query(1, ge=1)):
        net = get_network(network_id)
        doc = netgraph.export_graph(netgraph.build_graph(net.model, min_weight))
        return Response(content=doc, media_type="application/json")

    @app.get("/v1/networks/{network_id}/dimensions/{dim}")
    def get_dimension(
        network_id: str,
        dim: int,
        page: int = Query(1),
        page_size: int = Query(DEFAULT_PAGE_SIZE),
    ):
        if page < 1 or page_size < 1 or page_size > MAX_PAGE_SIZE:
            raise HTTPException(400, "bad pagination: page >= 1, 1 <= page_size <= 1000")
        net = get_network(network_id)
        model = net.model
        if dim < 1 or dim > model.k:
            raise HTTPException(404, f"no dimension {dim}")
        meta = model.dimension(dim)
        column = model.loadings[:, dim - 1]
        qualifying = [
            row for row in range(model.p) if abs(column[row]) >= model.threshold
        ]
        qualifying.sort(key=lambda row: -abs(column[row]))
        total = len(qualifying)
        start = (page - 1) * page_size
        rows = qualifying[start : start + page_size]
        items = []
        for row in rows:
            cross = [
                {
                    "dim": other + 1,
                    "loading": float(model.loadings[row, other]),
                }
                for other in range(model.k)
                if other != dim - 1
                and abs(model.loadings[row, other]) >= model.threshold
            ]
            items.append(
                {
                    "id": model.indicator_ids[row],
                    "text": net.corpus.indicators[row].text,
                    "loading": float(column[row]),
                    "cross_loadings": cross,
                }
            )
        payload = {
            "dimension": {
                "index": meta.index,
                "name": meta.name,
                "definition": meta.definition,
                "example_indicators": list(meta.example_indicators),
                "indicator_count": meta.indicator_count,
            },
            "page": page,
            "page_size": page_size,
            "total": total,
            "items": items,
        }
        headers = {"X-Total-Count": str(total)}
        return Response(
            content=json.dumps(payload), media_type="application/json", headers=headers
        )

    @app.get("/v1/networks/{network_id}/search")
    def search_network(network_id: str, q: str = Query(""), limit: int = Query(20, ge=1, le=200)):
        if not q.strip():
            raise HTTPException(400, "query must be nonempty")
        net = get_network(network_id)
        matches = netgraph.search(net.model, q, texts=net.corpus.texts(), limit=limit)
        return [
            {
                "dimension": m.dimension,
                "matched_in": m.matched_in,
                "text": m.text,
                "indicator_id": m.indicator_id,
            }
            for m in matches
        ]

    @app.get("/v1/networks/{network_id}/loadings.csv")
    def download_loadings(network_id: str):
        net = get_network(network_id)
        return PlainTextResponse(loadings_csv(net.model), media_type="text/csv")

    def stash(content: str) -> str:
        token = hashlib.sha256(content.encode("utf-8")).hexdigest()[:32]
        path = downloads_dir / token
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_text(content, encoding="utf-8")
            os.replace(tmp, path)
        return token

    @app.post("/v1/networks/{network_id}/project")
    async def project(network_id: str, items: list[ProjectItem]):
        net = get_network(network_id)
        if len(items) == 0:
            raise HTTPException(422, "no items supplied")
        if len(items) > config.max_upload_indicators:
            raise HTTPException(
                413, f"too many items (limit {config.max_upload_indicators})"
            )
        pairs = [(item.id, item.text) for item in items]
        loop = asyncio.get_running_loop()

        def batched_embed(provider, texts):
            # Runs inside a worker thread; hop back to the event loop's batcher.
            return asyncio.run_coroutine_threadsafe(
                batcher.embed(texts), loop
            ).result()

        try:
            result = await asyncio.to_thread(
                project_items, net, pairs, config.provider, batched_embed
            )
        except EmptyItems as exc:
            raise HTTPException(422, {"empty_items": list(exc.ids)})
        except ProviderError as exc:
            raise HTTPException(502, f"embedding provider failed: {exc}")
        return _projection_payload(net, result)

    def _projection_payload(net: LoadedNetwork, result: ProjectionResult):
        model = net.model
        tokens = {
            "loadings": stash(projection_loadings_csv(result, model.k)),
            "correlations": stash(
                projection_correlations_csv(result, list(model.indicator_ids))
            ),
            "embeddings": stash(projection_embeddings_csv(result)),
        }
        return {
            "network": net.network_id,
            "items": [
                {
                    "id": item.id,
                    "text": item.text,
                    "loadings": list(item.loadings),
                    "assignments": [
                        {"dim": dim, "name": name, "loading": loading}
                        for dim, name, loading in item.assignments
                    ],
                }
                for item in result.items
            ],
            "downloads": {
                kind: f"/v1/downloads/{token}/{kind}.csv"
                for kind, token in tokens.items()
            },
        }

    @app.get("/v1/downloads/{token}/{filename}")
    def download(token: str, filename: str):
        path = downloads_dir / token
        if not token.isalnum() or not path.exists():
            raise HTTPException(404, "unknown download token")
        return PlainTextResponse(
            path.read_text(encoding="utf-8"),
            media_type="text/csv",
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    return app
