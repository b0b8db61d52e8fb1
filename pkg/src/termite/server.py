"""HTTP serving layer: read-only JSON API over a store + hubness metadata,
plus static files for the browser console.

Endpoints:
    GET /api/query?entity=E&k=K[&confidence=true]
    GET /api/entities?prefix=P&limit=L
    GET /api/stats
    GET /<path>   static files from the UI directory, / serves index.html

The store and metadata are immutable, so requests are served concurrently
without locks.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .join import EntityNotFound, JoinResult, termite_join
from .refine import HubnessMetadata
from .store import EmbeddingStore

logger = logging.getLogger(__name__)

DEFAULT_SUGGESTION_LIMIT = 10


@dataclass
class ServingContext:
    store: EmbeddingStore
    meta: HubnessMetadata
    input_dim: int = 0
    ui_dir: Path | None = None

    def __post_init__(self) -> None:
        self._sorted_entities = sorted(self.store.entities)
        self._sorted_folded = [e.lower() for e in self._sorted_entities]


def result_payload(result: JoinResult) -> dict:
    results = []
    for entry in result.results:
        item = {
            "entity": entry.entity,
            "distance": entry.distance,
            "hubness": entry.hubness,
        }
        if entry.confidence is not None:
            item["confidence"] = entry.confidence
        results.append(item)
    removed = [
        {"entity": e.entity, "distance": e.distance, "hubness": e.hubness}
        for e in result.removed_hubs
    ]
    return {"query": result.query, "results": results, "removed_hubs": removed}


def query_response(ctx: ServingContext, params: dict) -> tuple[int, dict]:
    entity = params.get("entity", [None])[0]
    if not entity:
        return 400, {"error": "missing entity parameter"}
    raw_k = params.get("k", ["10"])[0]
    try:
        k = int(raw_k)
    except ValueError:
        return 400, {"error": f"k must be an integer, got {raw_k!r}"}
    if k < 0:
        return 400, {"error": f"k must be >= 0, got {k}"}
    confidence = params.get("confidence", ["false"])[0].lower() in ("1", "true", "yes")
    try:
        result = termite_join(ctx.store, ctx.meta, entity, k, with_confidence=confidence)
    except EntityNotFound:
        return 404, {"error": "entity-not-found"}
    return 200, result_payload(result)


def entities_response(ctx: ServingContext, params: dict) -> tuple[int, object]:
    prefix = params.get("prefix", [""])[0].lower()
    raw_limit = params.get("limit", [str(DEFAULT_SUGGESTION_LIMIT)])[0]
    try:
        limit = int(raw_limit)
    except ValueError:
        return 400, {"error": f"limit must be an integer, got {raw_limit!r}"}
    matches = []
    for entity, folded in zip(ctx._sorted_entities, ctx._sorted_folded):
        if len(matches) >= max(0, limit):
            break
        if folded.startswith(prefix):
            matches.append(entity)
    return 200, matches


def stats_response(ctx: ServingContext) -> dict:
    return {
        "entities": len(ctx.store),
        "dim": ctx.store.dim,
        "input_dim": ctx.input_dim,
        "hubness_cutoff": ctx.meta.cutoff,
        "k_h": ctx.meta.k,
    }


def make_handler(ctx: ServingContext):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # route through logging, not stderr
            logger.debug("%s " + fmt, self.address_string(), *args)

        def _send_json(self, status: int, payload) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_file(self, path: Path) -> None:
            ctype = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
            body = path.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self) -> None:
            url = urlparse(self.path)
            params = parse_qs(url.query)
            if url.path == "/api/query":
                status, payload = query_response(ctx, params)
                self._send_json(status, payload)
            elif url.path == "/api/entities":
                status, payload = entities_response(ctx, params)
                self._send_json(status, payload)
            elif url.path == "/api/stats":
                self._send_json(200, stats_response(ctx))
            else:
                self._serve_static(url.path)

        def _serve_static(self, path: str) -> None:
            if ctx.ui_dir is None:
                if path == "/":
                    body = b"termite serving layer; API under /api/\n"
                    self.send_response(200)
                    self.send_header("Content-Type", "text/plain; charset=utf-8")
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                else:
                    self._send_json(404, {"error": "not found"})
                return
            rel = path.lstrip("/") or "index.html"
            target = (ctx.ui_dir / rel).resolve()
            root = ctx.ui_dir.resolve()
            if root not in target.parents and target != root:
                self._send_json(404, {"error": "not found"})
                return
            if target.is_file():
                self._send_file(target)
            else:
                self._send_json(404, {"error": "not found"})

    return Handler


def create_server(ctx: ServingContext, host: str = "127.0.0.1", port: int = 8000) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), make_handler(ctx))
    server.daemon_threads = True
    return server


def serve_forever(ctx: ServingContext, host: str, port: int) -> None:
    server = create_server(ctx, host, port)
    logger.info("serving %d entities on http://%s:%d", len(ctx.store), host, port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def start_background(ctx: ServingContext, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a daemon thread; returns (server, actual_port)."""
    server = create_server(ctx, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, server.server_address[1]
