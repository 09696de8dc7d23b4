"""Single-session HTTP endpoints consumed by the browser review UI.

GET  /api/session     -> session events, each change with a rendered unified diff
GET  /api/clustering  -> current proposed clustering (+ cluster titles)
POST /api/clustering  -> corrected clustering; validated as a partition, then
                         persisted atomically to the --out path
GET  /api/score?a=&b= -> model probability that two changes belong together

Responses wrap the same line-record schemas as the files in a single JSON
document. Input files are never mutated; corrected clusterings go only to the
explicitly given output path. Static UI assets are served from --ui when given.
"""

from __future__ import annotations

import difflib
import json
import mimetypes
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from untangler.clusterer import CutConfig, untangle
from untangler.events import ChangeEvent, Clustering, SessionLog, ValidationError
from untangler.ingest import (
    read_clustering,
    read_session,
    write_clustering,
    write_text_atomic,
)
from untangler.learner import predict, read_model
from untangler.learner.models import Model
from untangler.voters import SessionContext, VoterError


def render_diff(event: ChangeEvent) -> str:
    """Unified diff of the change; class events diff their variable lists."""
    if event.is_method_event:
        before = event.source_before.splitlines()
        after = event.source_after.splitlines()
    else:
        before = [f"instanceVar: {name}" for name in event.instance_vars_before]
        after = [f"instanceVar: {name}" for name in event.instance_vars_after]
    lines = difflib.unified_diff(before, after, fromfile="before", tofile="after",
                                 lineterm="")
    return "\n".join(lines)


@dataclass
class ServerState:
    log: SessionLog
    model: Model
    clustering: Clustering
    out_path: Path
    titles: dict[str, str] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self) -> None:
        self.context = SessionContext(self.log)
        self.changes = {c.id: c for c in self.log.change_events()}

    def session_document(self) -> dict:
        from untangler.ingest import _entry_record  # same record schema as files

        records = []
        for entry in self.log.entries:
            record = _entry_record(entry)
            if isinstance(entry, ChangeEvent):
                record["diff"] = render_diff(entry)
            records.append(record)
        return {"developerId": self.log.developer_id, "records": records}

    def clustering_document(self) -> dict:
        records = [
            {"changeId": change_id, "clusterId": cluster_id}
            for change_id, cluster_id in sorted(self.clustering.assignment.items())
        ]
        return {"records": records, "titles": dict(self.titles)}

    def accept_clustering(self, document: dict) -> dict:
        records = document.get("records")
        if not isinstance(records, list):
            raise ValidationError("body must carry a 'records' list")
        assignment: dict[str, str] = {}
        for record in records:
            change_id = str(record.get("changeId", ""))
            cluster_id = str(record.get("clusterId", ""))
            if not change_id or not cluster_id:
                raise ValidationError("each record needs changeId and clusterId")
            if change_id in assignment:
                raise ValidationError(f"change {change_id!r} assigned twice")
            assignment[change_id] = cluster_id
        candidate = Clustering(assignment)
        candidate.check_covers(self.log)
        titles_in = document.get("titles") or {}
        titles = {
            str(k): str(v) for k, v in titles_in.items() if str(k) in set(assignment.values())
        }
        with self.lock:
            self.clustering = candidate
            self.titles = titles
            write_clustering(candidate, self.out_path)
            if titles:
                write_text_atomic(
                    self.out_path.with_suffix(self.out_path.suffix + ".titles.json"),
                    json.dumps(titles, sort_keys=True) + "\n",
                )
        return {"ok": True, "clusters": len(candidate.clusters())}

    def score(self, id_a: str, id_b: str) -> dict:
        if id_a not in self.changes or id_b not in self.changes:
            missing = id_a if id_a not in self.changes else id_b
            raise ValidationError(f"unknown change id {missing!r}")
        if id_a == id_b:
            raise ValidationError("a and b must differ")
        vector = self.context.compute(self.changes[id_a], self.changes[id_b])
        return {"a": id_a, "b": id_b, "probability": predict(self.model, vector)}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def state(self) -> ServerState:
        return self.server.state  # type: ignore[attr-defined]

    @property
    def ui_dir(self) -> Path | None:
        return self.server.ui_dir  # type: ignore[attr-defined]

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib name
        pass

    def _send_json(self, payload: dict, status: int = 200) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def do_OPTIONS(self) -> None:  # noqa: N802 - stdlib casing
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:  # noqa: N802
        parsed = urlparse(self.path)
        if parsed.path == "/api/session":
            self._send_json(self.state.session_document())
            return
        if parsed.path == "/api/clustering":
            self._send_json(self.state.clustering_document())
            return
        if parsed.path == "/api/score":
            query = parse_qs(parsed.query)
            id_a = (query.get("a") or [""])[0]
            id_b = (query.get("b") or [""])[0]
            try:
                self._send_json(self.state.score(id_a, id_b))
            except (ValidationError, VoterError) as exc:
                self._send_json({"error": str(exc)}, status=400)
            return
        self._serve_static(parsed.path)

    def do_POST(self) -> None:  # noqa: N802
        parsed = urlparse(self.path)
        if parsed.path != "/api/clustering":
            self._send_json({"error": "unknown endpoint"}, status=404)
            return
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length)
        try:
            document = json.loads(raw.decode("utf-8"))
            self._send_json(self.state.accept_clustering(document))
        except json.JSONDecodeError:
            self._send_json({"error": "request body is not valid JSON"}, status=400)
        except ValidationError as exc:
            self._send_json({"error": str(exc)}, status=400)

    def _serve_static(self, path: str) -> None:
        root = self.ui_dir
        if root is None:
            self._send_json({"error": "not found"}, status=404)
            return
        relative = path.lstrip("/") or "index.html"
        target = (root / relative).resolve()
        if not target.is_relative_to(root.resolve()) or not target.is_file():
            self._send_json({"error": "not found"}, status=404)
            return
        body = target.read_bytes()
        content_type = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)


def build_state(
    session_path: str | Path,
    model_path: str | Path,
    out_path: str | Path,
    clustering_path: str | Path | None = None,
    low_sim_bound: float = 0.25,
    pair_window_seconds: float = 259200.0,
) -> ServerState:
    log = read_session(session_path)
    model = read_model(model_path)
    if clustering_path is not None:
        clustering = read_clustering(clustering_path, session=log)
    else:
        clustering = untangle(
            log, model,
            CutConfig(low_similarity_bound=low_sim_bound,
                      pair_window_seconds=pair_window_seconds),
        )
    return ServerState(log=log, model=model, clustering=clustering,
                       out_path=Path(out_path))


def make_server(state: ServerState, port: int = 0,
                ui_dir: str | Path | None = None) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
    server.state = state  # type: ignore[attr-defined]
    server.ui_dir = Path(ui_dir) if ui_dir else None  # type: ignore[attr-defined]
    return server


def serve_forever(
    session_path: str,
    model_path: str,
    out_path: str,
    port: int,
    clustering_path: str | None = None,
    ui_dir: str | None = None,
    low_sim_bound: float = 0.25,
    pair_window_seconds: float = 259200.0,
) -> int:
    state = build_state(session_path, model_path, out_path, clustering_path,
                        low_sim_bound, pair_window_seconds)
    server = make_server(state, port=port, ui_dir=ui_dir)
    host, bound_port = server.server_address[:2]
    print(f"serving session {session_path} on http://{host}:{bound_port} "
          f"({len(state.changes)} changes, corrections -> {out_path})",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0
