"""HTTP annotation service over an AnnotationStore.

JSON API consumed by the browser UI and by scripts:

    GET  /api/runs
    GET  /api/tasks/next?annotator=ID&run=RID   -> task or 204
    POST /api/annotations {task_id, annotator_id, score}
    GET  /api/progress?run=RID
    GET  /api/summary?run=RID

Static UI assets, when built, are served from the root path.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .annotation import AnnotationStore, UnknownTaskError
from .histogram import BinGrid

__all__ = ["create_app"]


class SubmitBody(BaseModel):
    task_id: str
    annotator_id: str
    score: float = Field(ge=0.0, le=1.0)


def create_app(store: AnnotationStore, grid: BinGrid | None = None,
               frontend_dir: Path | None = None,
               blind: bool = False) -> FastAPI:
    app = FastAPI(title="omniinput annotation service")

    def bin_label(b: int) -> str:
        if grid is None:
            return f"bin {b}"
        return f"[{grid.edge_lo(b):g}, {grid.edge_hi(b):g})"

    @app.get("/api/runs")
    def runs():
        return [{"run_id": rid, "tasks": len(store.run_tasks(rid))}
                for rid in store.run_ids()]

    @app.get("/api/tasks/next")
    def next_task(annotator: str, run: str):
        task = store.next_pending(run, annotator)
        if task is None:
            return Response(status_code=204)
        progress = store.progress(run)
        done = sum(p["done"] for p in progress.values())
        total = sum(p["total"] for p in progress.values())
        body = {
            "task_id": task.task_id,
            "run_id": task.run_id,
            "display": task.display or " ".join(str(t) for t in task.tokens),
            "tokens": task.tokens,
            "progress": {"done": done, "total": total},
        }
        if not blind:
            body["bin"] = task.bin
            body["bin_label"] = bin_label(task.bin)
            body["z"] = task.z
        return body

    @app.post("/api/annotations")
    def submit(body: SubmitBody):
        try:
            rec = store.submit(body.task_id, body.annotator_id, body.score)
        except UnknownTaskError:
            raise HTTPException(status_code=404,
                                detail=f"unknown task {body.task_id}")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return rec.to_dict()

    @app.get("/api/progress")
    def progress(run: str):
        return {str(b): p for b, p in sorted(store.progress(run).items())}

    @app.get("/api/summary")
    def summary(run: str):
        if grid is None:
            raise HTTPException(status_code=400,
                                detail="service started without a bin grid")
        return [{"bin": s.bin, "bin_label": bin_label(s.bin), "mean": s.mean,
                 "std": s.std, "n_tasks": s.n_tasks, "n_records": s.n_records}
                for s in store.summaries(run, grid)]

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="ui")
    return app
