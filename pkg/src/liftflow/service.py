"""HTTP service for the review workflow.

Read side: paged anomaly records (score-descending), per-record evidence
(window flow series, 24-hour histogram, attribute means, stop excerpts), and
the exclusion list. Write side: review labels and exclusion entries, both
journaled by ReviewStore before the response is sent. Every response carries
an X-API-Version header.

Single-writer rule: FastAPI handlers here run in one event loop worker and
mutations go through one ReviewStore, which serializes journal appends.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import storage
from .errors import DataError
from .pipeline import AnomalyRecord

API_VERSION = "1"

ANOMALIES_FILE = "anomalies.jsonl"
LEDGER_FILE = "ledger.jsonl"
STOPS_FILE = "stops.jsonl"


class ReviewRequest(BaseModel):
    verdict: str
    reason: str
    note: str = ""
    reviewer_id: str = ""
    exclusion_scope: str = "floor"


class ExclusionRequest(BaseModel):
    estate: str
    elevator: str | None = None
    floor: int | None = None
    reason: str


def _exclusion_to_json(e) -> dict:
    return {"entry_id": e.entry_id, "estate": e.estate_id, "elevator": e.elevator_id,
            "floor": e.floor, "reason": e.reason, "created_at": e.created_at,
            "deleted": e.deleted}


def create_app(data_dir: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    data_dir = Path(data_dir)
    app = FastAPI(title="liftflow review service")
    store = storage.ReviewStore(data_dir)

    records: dict[str, AnomalyRecord] = {}
    anomalies_path = data_dir / ANOMALIES_FILE
    if anomalies_path.exists():
        for r in storage.read_records(anomalies_path):
            records[r.record_id] = r
    ordered_ids = [r.record_id for r in
                   sorted(records.values(), key=lambda r: (-r.r2_score, r.record_id))]

    ledger = {}
    ledger_path = data_dir / LEDGER_FILE
    if ledger_path.exists():
        ledger = storage.read_ledger(ledger_path)
    stop_summaries = []
    stops_path = data_dir / STOPS_FILE
    if stops_path.exists():
        stop_summaries = storage.read_stop_summaries(stops_path)

    @app.middleware("http")
    async def add_version_header(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-API-Version"] = API_VERSION
        return response

    def record_summary(r: AnomalyRecord) -> dict:
        d = storage.record_to_json(r)
        d["status"] = "reviewed" if r.record_id in store.labels else "open"
        return d

    @app.get("/health")
    def health():
        return {"status": "ok", "records": len(records)}

    @app.get("/anomalies")
    def list_anomalies(page: int = 1, page_size: int = 50):
        if page < 1 or page_size < 1:
            raise HTTPException(422, "page and page_size must be >= 1")
        start = (page - 1) * page_size
        ids = ordered_ids[start:start + page_size]
        return {
            "total": len(ordered_ids),
            "page": page,
            "page_size": page_size,
            "records": [record_summary(records[i]) for i in ids],
        }

    @app.get("/anomalies/{record_id}")
    def anomaly_detail(record_id: str):
        r = records.get(record_id)
        if r is None:
            raise HTTPException(404, f"unknown record {record_id}")
        window_days = 15
        dates = [r.window_end - dt.timedelta(days=window_days - 1 - i)
                 for i in range(window_days)]
        flow = []
        for d in dates:
            agg = ledger.get((r.estate_id, r.elevator_id, r.floor, d))
            flow.append({"date": d.isoformat(),
                         "in": agg.in_count if agg else 0,
                         "out": agg.out_count if agg else 0})
        date_set = {d.isoformat() for d in dates}
        excerpts = [s for s in stop_summaries
                    if s["estate"] == r.estate_id and s["elevator"] == r.elevator_id
                    and s["floor"] == r.floor and s["ts"][:10] in date_set
                    and (s["boarded"] or s["alighted"])]
        detail = record_summary(r)
        label = store.labels.get(record_id)
        detail.update({
            "label": None if label is None else {
                "verdict": label.verdict, "reason": label.reason, "note": label.note,
                "reviewer_id": label.reviewer_id, "reviewed_at": label.reviewed_at,
            },
            "flow_series": flow,
            # R2 layout: [0:12] stats, [12] Num, [13:35] t, [35:57] ts, [57:81] h
            "headcount": r.feature_r2[12],
            "hour_histogram": r.feature_r2[57:81],
            "attribute_class_means": r.feature_r2[13:35],
            "attribute_score_means": r.feature_r2[35:57],
            "stop_excerpts": excerpts[:200],
        })
        return detail

    @app.post("/anomalies/{record_id}/review", status_code=201)
    def submit_review(record_id: str, body: ReviewRequest):
        r = records.get(record_id)
        if r is None:
            raise HTTPException(404, f"unknown record {record_id}")
        label = storage.ReviewLabel(
            record_id=record_id, verdict=body.verdict, reason=body.reason,
            note=body.note, reviewer_id=body.reviewer_id,
            exclusion_scope=body.exclusion_scope)
        try:
            entry = store.add_label(label, record=r)
        except storage.DuplicateLabelError:
            raise HTTPException(409, f"record {record_id} already labeled")
        except DataError as exc:
            raise HTTPException(422, str(exc))
        return {
            "record_id": record_id,
            "status": "reviewed",
            "exclusion": None if entry is None else _exclusion_to_json(entry),
        }

    @app.get("/exclusions")
    def list_exclusions(include_deleted: bool = False):
        entries = (list(store.exclusions.values()) if include_deleted
                   else store.active_exclusions())
        return {"exclusions": [_exclusion_to_json(e) for e in entries]}

    @app.post("/exclusions", status_code=201)
    def create_exclusion(body: ExclusionRequest):
        try:
            entry = store.add_exclusion(body.estate, body.elevator, body.floor, body.reason)
        except DataError as exc:
            raise HTTPException(422, str(exc))
        return _exclusion_to_json(entry)

    @app.delete("/exclusions/{entry_id}")
    def delete_exclusion(entry_id: str):
        if not store.delete_exclusion(entry_id):
            raise HTTPException(404, f"unknown or already-deleted exclusion {entry_id}")
        return {"entry_id": entry_id, "deleted": True}

    if ui_dir is not None and Path(ui_dir).exists():
        ui_path = Path(ui_dir)

        @app.get("/")
        def index():
            return FileResponse(ui_path / "index.html")

        app.mount("/ui", StaticFiles(directory=ui_path), name="ui")

    return app
