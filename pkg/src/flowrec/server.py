"""HTTP session API for online recommendation.

JSON over HTTP/1.1, no authentication (a local tool). Sessions live in
memory with TTL eviction and do not survive restarts. The model and
graph are immutable after load; session mutations are serialized behind
one lock, so concurrent requests are safe.

Endpoints::

    POST /sessions                      -> {"id": ...}
    POST /sessions/{id}/select          body {"token": canonicalKey}
    GET  /sessions/{id}/recommend?k=K   -> ordered entry list
    GET  /catalog                       -> vocabulary listing
    GET  /health                        -> {"status", "vocabSize", "dim"}
"""

from __future__ import annotations

import json
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .corpus import ServiceToken
from .embed import EmbeddingModel
from .errors import ColdStartError, EmptySessionError, ValidationError
from .recommend import Session, recommend_top_k, select_token
from .wskg import Wskg

__all__ = ["ServiceState", "make_server", "serve_forever"]

DEFAULT_SESSION_TTL = 3600.0


class _HttpError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class ServiceState:
    """Shared state behind the HTTP handlers."""

    def __init__(
        self,
        model: EmbeddingModel | None = None,
        graph: Wskg | None = None,
        default_k: int = 5,
        session_ttl: float = DEFAULT_SESSION_TTL,
    ):
        self.model = model
        self.graph = graph
        self.default_k = default_k
        self.session_ttl = session_ttl
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def attach(self, model: EmbeddingModel, graph: Wskg) -> None:
        self.model = model
        self.graph = graph

    @property
    def ready(self) -> bool:
        return self.model is not None and self.graph is not None

    def _evict_expired(self) -> None:
        deadline = time.time() - self.session_ttl
        for sid in [s for s, sess in self._sessions.items() if sess.updated_at < deadline]:
            del self._sessions[sid]

    def create_session(self) -> Session:
        with self._lock:
            self._evict_expired()
            session = Session()
            self._sessions[session.id] = session
            return session

    def _session(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise _HttpError(404, f"unknown session {session_id!r}")
        return session

    def select(self, session_id: str, token_key: str) -> Session:
        with self._lock:
            session = self._session(session_id)
            try:
                token = ServiceToken.from_key(token_key)
            except ValidationError as exc:
                raise _HttpError(400, str(exc)) from exc
            return select_token(session, token, self.model)

    def recommend(self, session_id: str, k: int) -> list[dict]:
        with self._lock:
            session = self._session(session_id)
        try:
            entries = recommend_top_k(self.model, self.graph, session, k)
        except EmptySessionError as exc:
            raise _HttpError(409, f"empty session: {exc}") from exc
        except ColdStartError as exc:
            raise _HttpError(409, f"cold start: {exc}") from exc
        except ValidationError as exc:
            raise _HttpError(400, str(exc)) from exc
        return [entry.to_dict() for entry in entries]

    def session_view(self, session_id: str) -> dict:
        with self._lock:
            return self._session(session_id).to_dict()

    def catalog(self) -> list[dict]:
        return [
            {
                "token": key,
                "members": key.split("&"),
                "frequency": self.model.frequencies.get(key, 0),
            }
            for key in sorted(self.model.vocab)
        ]

    def health(self) -> tuple[int, dict]:
        if not self.ready:
            return 503, {"status": "loading"}
        return 200, {
            "status": "ok",
            "vocabSize": len(self.model.vocab),
            "dim": self.model.dim,
        }


_SELECT_RE = re.compile(r"^/sessions/([^/]+)/select$")
_RECOMMEND_RE = re.compile(r"^/sessions/([^/]+)/recommend$")
_SESSION_RE = re.compile(r"^/sessions/([^/]+)$")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "_Server"

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _reply(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):  # noqa: N802 - CORS preflight for browser clients
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            raise _HttpError(400, "request body required")
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise _HttpError(400, f"malformed JSON body: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise _HttpError(400, "body must be a JSON object")
        return doc

    def _query_k(self, query: str) -> int:
        from urllib.parse import parse_qs

        params = parse_qs(query)
        if "k" not in params:
            return self.server.state.default_k
        try:
            k = int(params["k"][0])
        except ValueError as exc:
            raise _HttpError(400, "k must be an integer") from exc
        if k < 1:
            raise _HttpError(400, "k must be >= 1")
        return k

    def _require_ready(self) -> None:
        if not self.server.state.ready:
            raise _HttpError(503, "model not loaded")

    def do_GET(self):  # noqa: N802 - stdlib naming
        state = self.server.state
        path, _, query = self.path.partition("?")
        try:
            if path == "/health":
                status, payload = state.health()
                self._reply(status, payload)
                return
            if path == "/catalog":
                self._require_ready()
                self._reply(200, state.catalog())
                return
            match = _RECOMMEND_RE.match(path)
            if match:
                self._require_ready()
                k = self._query_k(query)
                self._reply(200, state.recommend(match.group(1), k))
                return
            match = _SESSION_RE.match(path)
            if match:
                self._reply(200, state.session_view(match.group(1)))
                return
            raise _HttpError(404, f"no such resource {path!r}")
        except _HttpError as exc:
            self._reply(exc.status, {"error": exc.message})

    def do_POST(self):  # noqa: N802 - stdlib naming
        state = self.server.state
        path = self.path.partition("?")[0]
        try:
            if path == "/sessions":
                self._require_ready()
                session = state.create_session()
                self._reply(200, {"id": session.id})
                return
            match = _SELECT_RE.match(path)
            if match:
                self._require_ready()
                body = self._read_json()
                token = body.get("token")
                if not isinstance(token, str) or not token:
                    raise _HttpError(400, "field 'token' must be a non-empty string")
                session = state.select(match.group(1), token)
                self._reply(200, session.to_dict())
                return
            raise _HttpError(404, f"no such resource {path!r}")
        except _HttpError as exc:
            self._reply(exc.status, {"error": exc.message})


class _Server(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], state: ServiceState):
        super().__init__(address, _Handler)
        self.state = state


def make_server(state: ServiceState, host: str = "127.0.0.1", port: int = 0) -> _Server:
    """Create (but do not run) the HTTP server; port 0 picks a free port."""
    return _Server((host, port), state)


def serve_forever(state: ServiceState, host: str, port: int) -> None:
    server = make_server(state, host, port)
    actual = server.server_address
    print(f"listening on http://{actual[0]}:{actual[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
