"""HTTP facade over run artifacts for the analyst explorer.

Read-only views of snapshots, entities, and detector reports, plus one
mutable artifact: the analyst tags file (append-only JSON lines, last write
per entity wins). Every response is a pure function of the run directory
plus that file; nothing else is ever written.

    GET  /api/runs
    GET  /api/runs/{run}/snapshots
    GET  /api/runs/{run}/snapshots/{iteration}?min_degree=&fincrime_only=&offset=&limit=
    GET  /api/runs/{run}/entities/{entity_id}?iter=
    POST /api/runs/{run}/tags
    GET  /api/runs/{run}/detections

Errors are JSON {code, message}.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .analysis import adjacency_lists
from .entitygraph import read_edges
from .training import read_snapshot_jsonl

TAGS_FILE = "tags.jsonl"
VERDICTS = ("suspicious", "clean", "unknown")


class TagBody(BaseModel):
    entity_id: str = Field(min_length=1)
    verdict: Literal["suspicious", "clean", "unknown"]
    note: str = ""


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


class RunRepository:
    """Filesystem access for one runs root; no caching beyond a tag lock."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._tag_lock = threading.Lock()

    def list_runs(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(
            p.name for p in self.root.iterdir()
            if p.is_dir() and (p / "manifest.json").exists()
        )

    def run_dir(self, run: str) -> Path:
        path = self.root / run
        if not path.is_dir() or not (path / "manifest.json").exists():
            raise _error(404, "not_found", f"run {run!r} does not exist")
        return path

    def manifest(self, run: str) -> dict:
        path = self.run_dir(run) / "manifest.json"
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise _error(
                500, "corrupt_manifest", f"manifest for {run!r} is unreadable: {err}"
            )

    def snapshot_iterations(self, run: str) -> list[int]:
        manifest = self.manifest(run)
        snaps = manifest.get("stages", {}).get("train", {}).get("snapshots", {})
        return sorted(int(i) for i in snaps)

    def snapshot_records(self, run: str, iteration: int) -> list[dict]:
        manifest = self.manifest(run)
        snaps = manifest.get("stages", {}).get("train", {}).get("snapshots", {})
        rel = snaps.get(str(iteration))
        if rel is None:
            raise _error(
                404, "not_found", f"run {run!r} has no snapshot at iteration {iteration}"
            )
        return read_snapshot_jsonl(self.run_dir(run) / rel)

    def node_ids(self, run: str) -> set[str]:
        path = self.run_dir(run) / "nodes.json"
        if not path.exists():
            raise _error(404, "not_found", f"run {run!r} has no node index")
        return set(json.loads(path.read_text(encoding="utf-8")))

    def adjacency(self, run: str) -> dict[str, list[str]]:
        path = self.run_dir(run) / "edges.tsv"
        if not path.exists():
            raise _error(404, "not_found", f"run {run!r} has no edge list")
        return adjacency_lists(read_edges(path))

    def tags(self, run: str) -> list[dict]:
        path = self.run_dir(run) / TAGS_FILE
        if not path.exists():
            return []
        out = []
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def latest_tags(self, run: str) -> dict[str, dict]:
        latest: dict[str, dict] = {}
        for tag in self.tags(run):  # file order; later lines win
            latest[tag["entity_id"]] = tag
        return latest

    def append_tag(self, run: str, tag: dict) -> None:
        path = self.run_dir(run) / TAGS_FILE
        line = json.dumps(tag, sort_keys=True)
        with self._tag_lock:
            with path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def detections(self, run: str) -> list[dict]:
        manifest = self.manifest(run)
        reports = manifest.get("stages", {}).get("detect", {}).get("reports", {})
        out = []
        for _, rel in sorted(reports.items()):
            path = self.run_dir(run) / rel
            if path.exists():
                out.append(json.loads(path.read_text(encoding="utf-8")))
        return out


def create_app(runs_root: str | Path) -> FastAPI:
    repo = RunRepository(runs_root)
    app = FastAPI(title="relation embedding workbench", version="0.1.0")

    @app.exception_handler(HTTPException)
    async def _http_error(_req: Request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict):
            detail = {"code": "error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "validation", "message": str(exc.errors())},
        )

    @app.get("/api/runs")
    def list_runs():
        return repo.list_runs()

    @app.get("/api/runs/{run}/snapshots")
    def list_snapshots(run: str):
        iterations = repo.snapshot_iterations(run)
        if not iterations:
            raise _error(404, "not_found", f"run {run!r} has no snapshots")
        return iterations

    @app.get("/api/runs/{run}/snapshots/{iteration}")
    def get_snapshot(
        run: str,
        iteration: int,
        min_degree: int | None = Query(default=None, ge=0),
        fincrime_only: bool = False,
        offset: int = Query(default=0, ge=0),
        limit: int | None = Query(default=None, ge=1),
    ):
        records = repo.snapshot_records(run, iteration)
        latest = repo.latest_tags(run)
        out = []
        for r in records:
            if min_degree is not None and r["degree"] < min_degree:
                continue
            if fincrime_only and not r["fincrime"]:
                continue
            tag = latest.get(r["id"])
            out.append({**r, "latest_tag": tag["verdict"] if tag else None})
        if offset:
            out = out[offset:]
        if limit is not None:
            out = out[:limit]
        return out

    @app.get("/api/runs/{run}/entities/{entity_id}")
    def get_entity(run: str, entity_id: str, iter: int | None = None):
        iterations = repo.snapshot_iterations(run)
        if not iterations:
            raise _error(404, "not_found", f"run {run!r} has no snapshots")
        iteration = iter if iter is not None else iterations[-1]
        records = repo.snapshot_records(run, iteration)
        by_id = {r["id"]: r for r in records}
        me = by_id.get(entity_id)
        if me is None:
            raise _error(404, "not_found", f"unknown entity {entity_id!r}")
        adjacency = repo.adjacency(run)
        links = [
            {"id": nb, "vec": by_id[nb]["vec"]}
            for nb in adjacency.get(entity_id, [])
            if nb in by_id
        ]
        tags = [t for t in repo.tags(run) if t["entity_id"] == entity_id]
        return {
            "id": entity_id,
            "iteration": iteration,
            "vec": me["vec"],
            "degree": me["degree"],
            "fincrime": me["fincrime"],
            "links": links,
            "link_count": len(links),
            "tags": tags,
            "latest_tag": tags[-1]["verdict"] if tags else None,
        }

    @app.post("/api/runs/{run}/tags")
    def post_tag(run: str, body: TagBody):
        nodes = repo.node_ids(run)
        if body.entity_id not in nodes:
            raise _error(404, "not_found", f"unknown entity {body.entity_id!r}")
        tag = {
            "entity_id": body.entity_id,
            "verdict": body.verdict,
            "note": body.note,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        repo.append_tag(run, tag)
        return {"ok": True, "tag": tag}

    @app.get("/api/runs/{run}/detections")
    def get_detections(run: str):
        repo.run_dir(run)
        return repo.detections(run)

    return app


def serve(runs_root: str | Path, host: str = "127.0.0.1", port: int = 8000,
          ui_dir: str | Path | None = None) -> None:
    """Run the service under uvicorn; optionally mount a built UI at /."""
    import uvicorn

    app = create_app(runs_root)
    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    uvicorn.run(app, host=host, port=port, log_level="info")
