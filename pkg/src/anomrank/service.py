"""Local HTTP service for human-oracle labeling and run telemetry.

The learning loop is the sole writer: it publishes an immutable telemetry
snapshot (with a checksum) after every completed iteration and blocks on the
board while analysts answer pending queries. Handlers only ever read the
latest snapshot or move a query from pending to answered, exactly once.

Endpoints (JSON over HTTP/1.1, UTF-8, local binding by default):

  GET  /api/state                     run telemetry snapshot
  GET  /api/queries                   unanswered queries, most uncertain first
  POST /api/queries/{id}/label        body {"label": "normal"|"anomalous"}
  GET  /api/ranking?iter=k&limit=n    top-n ranked records of iteration k
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from .active import OracleLabel, OracleQuery, OracleSuspended
from .data import BooleanDataset

SCHEMA_VERSION = 1
DEFAULT_PORT = 8423

_LABEL_PATH = re.compile(r"^/api/queries/([^/]+)/label$")


def _checksummed(payload: dict) -> dict:
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    out = dict(payload)
    out["checksum"] = hashlib.sha256(body.encode("utf-8")).hexdigest()
    return out


class RunBoard:
    """Thread-safe exchange between the learning loop and the service."""

    def __init__(self):
        self._cond = threading.Condition()
        self._snapshot: dict | None = None
        self._pending: dict[str, dict] = {}
        self._answered: dict[str, str] = {}
        self._rankings: dict[int, list[dict]] = {}
        self._closed = False

    # -- learning-loop side ------------------------------------------------

    def publish_iteration(self, telemetry: dict, iteration: int,
                          ranking_rows: list[dict] | None) -> None:
        snap = dict(telemetry)
        snap["schema_version"] = SCHEMA_VERSION
        snap = _checksummed(snap)
        with self._cond:
            self._snapshot = snap
            if ranking_rows is not None:
                self._rankings[iteration] = ranking_rows

    def request_labels(self, queries: list[OracleQuery],
                       attributes_of) -> dict[str, str]:
        """Publish pending queries and block until all are answered.

        Raises OracleSuspended if the board closes first.
        """
        issued = time.time()
        wire = [{"query_id": q.query_id, "record_id": q.record_id,
                 "anomaly_score": q.anomaly_score, "uncertainty": q.uncertainty,
                 "top_attributes": attributes_of(q.record_id),
                 "issued_at": issued} for q in queries]
        ids = [w["query_id"] for w in wire]
        with self._cond:
            if self._closed:
                raise OracleSuspended("oracle service is closed")
            self._pending = {w["query_id"]: w for w in wire}
            self._cond.notify_all()
            while not all(qid in self._answered for qid in ids):
                if self._closed:
                    self._pending = {}
                    raise OracleSuspended("oracle service closed while waiting for labels")
                self._cond.wait(timeout=0.1)
            return {qid: self._answered[qid] for qid in ids}

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    # -- service side --------------------------------------------------------

    def snapshot(self) -> dict | None:
        with self._cond:
            return self._snapshot

    def pending_queries(self) -> list[dict]:
        with self._cond:
            return list(self._pending.values())

    def submit_label(self, query_id: str, label) -> int:
        """HTTP status for a label submission: 200 recorded, 400 bad label,
        404 unknown query, 409 already answered."""
        if label not in ("normal", "anomalous"):
            return 400
        with self._cond:
            if query_id in self._answered:
                return 409
            if query_id not in self._pending:
                return 404
            del self._pending[query_id]
            self._answered[query_id] = label
            self._cond.notify_all()
            return 200

    def ranking(self, iteration: int) -> list[dict] | None:
        with self._cond:
            return self._rankings.get(iteration)


class HumanOracle:
    """Oracle that parks the loop on the board until analysts answer every
    pending query over HTTP."""

    def __init__(self, board: RunBoard, dataset: BooleanDataset):
        self.board = board
        self.dataset = dataset

    def label(self, queries: list[OracleQuery]) -> list[OracleLabel]:
        answered = self.board.request_labels(queries, self.dataset.active_attributes)
        return [OracleLabel(q.query_id, q.record_id, answered[q.query_id])
                for q in queries]


class _Handler(BaseHTTPRequestHandler):
    board: RunBoard  # bound by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        pass

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlsplit(self.path)
        if url.path == "/api/state":
            snap = self.board.snapshot()
            if snap is None:
                self._reply(404, {"error": "no run"})
            else:
                self._reply(200, snap)
        elif url.path == "/api/queries":
            self._reply(200, {"schema_version": SCHEMA_VERSION,
                              "queries": self.board.pending_queries()})
        elif url.path == "/api/ranking":
            params = parse_qs(url.query)
            try:
                iteration = int(params.get("iter", ["-1"])[0])
                limit = int(params["limit"][0]) if "limit" in params else None
            except ValueError:
                self._reply(400, {"error": "iter and limit must be integers"})
                return
            rows = self.board.ranking(iteration)
            if rows is None:
                self._reply(404, {"error": f"no completed iteration {iteration}"})
                return
            if limit is not None:
                rows = rows[:max(limit, 0)]
            self._reply(200, {"schema_version": SCHEMA_VERSION,
                              "iteration": iteration, "rows": rows})
        else:
            self._reply(404, {"error": "unknown endpoint"})

    def do_POST(self):
        match = _LABEL_PATH.match(urlsplit(self.path).path)
        if not match:
            self._reply(404, {"error": "unknown endpoint"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        try:
            payload = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            self._reply(400, {"error": "body must be JSON"})
            return
        status = self.board.submit_label(match.group(1), payload.get("label"))
        messages = {200: "ok", 400: "label must be 'normal' or 'anomalous'",
                    404: "unknown or expired query", 409: "query already labeled"}
        body = {"status": messages[status]} if status == 200 else {"error": messages[status]}
        self._reply(status, body)


def make_server(board: RunBoard, port: int = DEFAULT_PORT,
                host: str = "127.0.0.1") -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"board": board})
    return ThreadingHTTPServer((host, port), handler)


def serve_in_thread(board: RunBoard, port: int = DEFAULT_PORT,
                    host: str = "127.0.0.1"):
    """Start the service on a daemon thread. Returns (server, thread); the
    bound port is server.server_address[1]."""
    server = make_server(board, port, host)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
