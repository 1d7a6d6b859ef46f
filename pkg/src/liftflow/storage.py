"""File formats and the journaled review store.

Trip logs, flow ledgers, and anomaly records are line-delimited JSON: one
independently parseable record per line, append-friendly, and splittable for
parallel ingestion. Unknown fields are ignored on read for forward
compatibility. All writes used for determinism contracts serialize with
sorted keys and compact separators so identical inputs give identical bytes.

Review labels and exclusion entries live in append-only journals (exclusions
with tombstones); state is rebuilt by replay, which doubles as crash
recovery.
"""

from __future__ import annotations

import datetime as dt
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .features import ATTRIBUTE_COUNT, DayKey, FloorDayAggregate
from .matching import StopFlowRecord
from .pipeline import AnomalyRecord, ExclusionEntry
from .simulate import GroundTruthLedger, PassengerObservation, StopEvent, StopTruth

VERDICTS = ("suspected_hazard", "no_hazard", "data_exception")

#: review reason codes, one per manually-confirmed outcome category
REASONS = (
    "needs_property_manager_check",
    "sensor_malfunction",
    "decoration",
    "dormitory_hotel",
    "shopping_entertainment",
    "office_building",
    "catering_in_apartment",
    "overcrowded_residence",
)

#: reasons that, with a non-hazard verdict, push the key onto the exclusion list
EXCLUSION_REASONS = frozenset({
    "sensor_malfunction", "decoration", "dormitory_hotel",
    "shopping_entertainment", "office_building",
})


class DuplicateLabelError(Exception):
    """The record already has a label (version conflict)."""


class UnknownRecordError(KeyError):
    """Label submitted for a record id the store has never seen."""


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _ts_to_iso(ts: int) -> str:
    return dt.datetime.fromtimestamp(ts, tz=dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _iso_to_ts(s: str) -> int:
    moment = dt.datetime.strptime(s, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=dt.timezone.utc)
    return int(moment.timestamp())


# ---------------------------------------------------------------- trip logs

def _obs_to_json(o: PassengerObservation) -> dict:
    return {
        "e": [float(v) for v in o.embedding],
        "c": [int(v) for v in o.attr_class],
        "s": [float(v) for v in o.attr_score],
    }


def _obs_from_json(d: dict) -> PassengerObservation:
    emb = np.asarray(d["e"], dtype=float)
    cls = np.asarray(d["c"], dtype=np.int8)
    score = np.asarray(d["s"], dtype=float)
    if len(cls) != ATTRIBUTE_COUNT or len(score) != ATTRIBUTE_COUNT:
        raise DataError(f"attribute vectors must have {ATTRIBUTE_COUNT} entries")
    return PassengerObservation(embedding=emb, attr_class=cls, attr_score=score)


def event_to_line(ev: StopEvent) -> str:
    return _dump({
        "estate": ev.estate_id,
        "elevator": ev.elevator_id,
        "floor": ev.floor,
        "ts": _ts_to_iso(ev.timestamp),
        "pre": [_obs_to_json(o) for o in ev.pre_obs],
        "post": [_obs_to_json(o) for o in ev.post_obs],
    })


def event_from_line(line: str) -> StopEvent:
    d = json.loads(line)
    floor = int(d["floor"])
    if floor < 1:
        raise DataError(f"floor must be >= 1, got {floor}")
    return StopEvent(
        estate_id=str(d["estate"]),
        elevator_id=str(d["elevator"]),
        floor=floor,
        timestamp=_iso_to_ts(d["ts"]),
        pre_obs=[_obs_from_json(o) for o in d["pre"]],
        post_obs=[_obs_from_json(o) for o in d["post"]],
    )


def write_trip_log(events: list[StopEvent], path: str | Path) -> None:
    with open(path, "w") as f:
        for ev in events:
            f.write(event_to_line(ev) + "\n")


def ingest(path: str | Path, max_reject_fraction: float = 0.1,
           ) -> tuple[list[StopEvent], list[tuple[int, str]]]:
    """Parse a trip log, collecting malformed lines instead of aborting.

    Returns events ordered by (timestamp, estate, elevator) and a rejects
    report of (line_number, message). More than ``max_reject_fraction``
    malformed lines is a hard failure.
    """
    events: list[StopEvent] = []
    rejects: list[tuple[int, str]] = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(event_from_line(line))
            except (DataError, KeyError, ValueError, TypeError) as exc:
                rejects.append((lineno, f"{type(exc).__name__}: {exc}"))
    total = len(events) + len(rejects)
    if total and len(rejects) / total > max_reject_fraction:
        raise DataError(
            f"{len(rejects)}/{total} lines malformed exceeds "
            f"{max_reject_fraction:.0%} limit; first: line {rejects[0][0]}")
    events.sort(key=lambda e: (e.timestamp, e.estate_id, e.elevator_id))
    return events, rejects


# ------------------------------------------------------- ground-truth sidecar

def _agg_to_json(agg: FloorDayAggregate) -> dict:
    return {
        "estate": agg.estate_id,
        "elevator": agg.elevator_id,
        "floor": agg.floor,
        "date": agg.date.isoformat(),
        "in": agg.in_count,
        "out": agg.out_count,
        "hours": [int(v) for v in agg.hour_histogram],
        "tc": [float(v) for v in agg.attr_class_sum],
        "tsc": [float(v) for v in agg.attr_score_sum],
    }


def _agg_from_json(d: dict) -> FloorDayAggregate:
    agg = FloorDayAggregate(
        estate_id=str(d["estate"]),
        elevator_id=str(d["elevator"]),
        floor=int(d["floor"]),
        date=dt.date.fromisoformat(d["date"]),
        in_count=int(d["in"]),
        out_count=int(d["out"]),
        hour_histogram=np.asarray(d["hours"], dtype=np.int64),
        attr_class_sum=np.asarray(d["tc"], dtype=float),
        attr_score_sum=np.asarray(d["tsc"], dtype=float),
    )
    return agg


def write_sidecar(ledger: GroundTruthLedger, path: str | Path) -> None:
    data = {
        "aggregates": [_agg_to_json(a) for _, a in sorted(ledger.aggregates.items(),
                                                          key=lambda kv: str(kv[0]))],
        "stops": [{"b": t.boarded_post_idx, "a": t.alighted_pre_idx,
                   "bid": t.boarded_ids, "aid": t.alighted_ids}
                  for t in ledger.stop_truth],
        "anomaly_day_keys": sorted([e, el, f, d.isoformat()]
                                   for (e, el, f, d) in ledger.anomaly_day_keys),
        "planted_keys": sorted([e, el, f] for (e, el, f) in ledger.planted_keys),
    }
    Path(path).write_text(_dump(data) + "\n")


def read_sidecar(path: str | Path) -> GroundTruthLedger:
    d = json.loads(Path(path).read_text())
    ledger = GroundTruthLedger()
    for a in d["aggregates"]:
        agg = _agg_from_json(a)
        ledger.aggregates[agg.key] = agg
    ledger.stop_truth = [StopTruth(boarded_post_idx=s["b"], alighted_pre_idx=s["a"],
                                   boarded_ids=s["bid"], alighted_ids=s["aid"])
                         for s in d["stops"]]
    ledger.anomaly_day_keys = {(e, el, int(f), dt.date.fromisoformat(ds))
                               for e, el, f, ds in d["anomaly_day_keys"]}
    ledger.planted_keys = {(e, el, int(f)) for e, el, f in d["planted_keys"]}
    return ledger


# ------------------------------------------------------------- ledger files

def write_ledger(aggregates: dict[DayKey, FloorDayAggregate], path: str | Path) -> None:
    with open(path, "w") as f:
        for _, agg in sorted(aggregates.items(), key=lambda kv: str(kv[0])):
            f.write(_dump(_agg_to_json(agg)) + "\n")


def read_ledger(path: str | Path) -> dict[DayKey, FloorDayAggregate]:
    out: dict[DayKey, FloorDayAggregate] = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                agg = _agg_from_json(json.loads(line))
                out[agg.key] = agg
    return out


# ------------------------------------------------------------ stop summaries

def write_stop_summaries(stops: list[StopFlowRecord], path: str | Path) -> None:
    with open(path, "w") as f:
        for s in stops:
            f.write(_dump({"estate": s.estate_id, "elevator": s.elevator_id,
                           "floor": s.floor, "ts": _ts_to_iso(s.timestamp),
                           "boarded": len(s.boarded), "alighted": len(s.alighted)}) + "\n")


def read_stop_summaries(path: str | Path) -> list[dict]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


# ------------------------------------------------------------ anomaly records

def record_to_json(r: AnomalyRecord) -> dict:
    return {
        "record_id": r.record_id,
        "estate": r.estate_id,
        "elevator": r.elevator_id,
        "floor": r.floor,
        "r1_score": r.r1_score,
        "r2_score": r.r2_score,
        "feature_r1": r.feature_r1,
        "feature_r2": r.feature_r2,
        "window_end": r.window_end.isoformat(),
        "status": r.status,
    }


def record_from_json(d: dict) -> AnomalyRecord:
    return AnomalyRecord(
        record_id=str(d["record_id"]),
        estate_id=str(d["estate"]),
        elevator_id=str(d["elevator"]),
        floor=int(d["floor"]),
        r1_score=float(d["r1_score"]),
        r2_score=float(d["r2_score"]),
        feature_r1=[float(v) for v in d["feature_r1"]],
        feature_r2=[float(v) for v in d["feature_r2"]],
        window_end=dt.date.fromisoformat(d["window_end"]),
        status=str(d.get("status", "open")),
    )


def write_records(records: list[AnomalyRecord], path: str | Path) -> None:
    with open(path, "w") as f:
        for r in records:
            f.write(_dump(record_to_json(r)) + "\n")


def read_records(path: str | Path) -> list[AnomalyRecord]:
    out = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(record_from_json(json.loads(line)))
    return out


# -------------------------------------------------------------- review store

@dataclass
class ReviewLabel:
    record_id: str
    verdict: str
    reason: str
    note: str = ""
    reviewer_id: str = ""
    reviewed_at: str = ""
    exclusion_scope: str = "floor"  # "floor" or "estate"; reviewer's choice

    def validate(self) -> None:
        if self.verdict not in VERDICTS:
            raise DataError(f"unknown verdict {self.verdict!r}")
        if self.reason not in REASONS:
            raise DataError(f"unknown reason {self.reason!r}")
        if self.exclusion_scope not in ("floor", "estate"):
            raise DataError(f"unknown exclusion_scope {self.exclusion_scope!r}")

    @property
    def creates_exclusion(self) -> bool:
        return (self.verdict in ("no_hazard", "data_exception")
                and self.reason in EXCLUSION_REASONS)


def _append_journal(path: Path, obj: dict) -> None:
    # open in append mode, write one line, fsync before acknowledging
    with open(path, "a") as f:
        f.write(_dump(obj) + "\n")
        f.flush()
        os.fsync(f.fileno())


def _replay_journal(path: Path) -> list[dict]:
    """Parse a journal file, dropping a torn final line (crash mid-append).

    A malformed line anywhere else means real corruption and raises.
    """
    if not path.exists():
        return []
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    out: list[dict] = []
    for i, line in enumerate(lines):
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                break
            raise DataError(f"corrupt journal {path.name}: line {i + 1}")
    return out


def read_exclusions_journal(path: str | Path) -> list[ExclusionEntry]:
    """Replay an exclusions journal (adds + tombstones) into entry objects."""
    entries: dict[str, ExclusionEntry] = {}
    for d in _replay_journal(Path(path)):
        if d["op"] == "add":
            entries[d["entry_id"]] = ExclusionEntry(
                estate_id=d["estate"], elevator_id=d.get("elevator"),
                floor=d.get("floor"), reason=d["reason"],
                created_at=d["created_at"], entry_id=d["entry_id"])
        elif d["entry_id"] in entries:
            entries[d["entry_id"]].deleted = True
    return list(entries.values())


class ReviewStore:
    """Label and exclusion persistence for one data directory.

    All mutations append to journals and fsync before returning, so an
    acknowledged write survives a crash; construction replays the journals.
    """

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.labels_path = self.data_dir / "reviews.jsonl"
        self.exclusions_path = self.data_dir / "exclusions.jsonl"
        self.labels: dict[str, ReviewLabel] = {}
        self.exclusions: dict[str, ExclusionEntry] = {}
        self._next_exclusion = 1
        self._replay()

    def _replay(self) -> None:
        for d in _replay_journal(self.labels_path):
            self.labels[d["record_id"]] = ReviewLabel(**d)
        for d in _replay_journal(self.exclusions_path):
            if d["op"] == "add":
                entry = ExclusionEntry(
                    estate_id=d["estate"],
                    elevator_id=d.get("elevator"),
                    floor=d.get("floor"),
                    reason=d["reason"],
                    created_at=d["created_at"],
                    entry_id=d["entry_id"],
                )
                self.exclusions[entry.entry_id] = entry
                num = int(entry.entry_id.split("-")[-1])
                self._next_exclusion = max(self._next_exclusion, num + 1)
            elif d["entry_id"] in self.exclusions:  # tombstone
                self.exclusions[d["entry_id"]].deleted = True

    # -- labels

    def add_label(self, label: ReviewLabel,
                  record: AnomalyRecord | None = None) -> ExclusionEntry | None:
        """Persist a label; returns the exclusion entry it created, if any."""
        label.validate()
        if label.record_id in self.labels:
            raise DuplicateLabelError(label.record_id)
        if not label.reviewed_at:
            label.reviewed_at = dt.datetime.now(dt.timezone.utc).strftime(
                "%Y-%m-%dT%H:%M:%SZ")
        _append_journal(self.labels_path, {
            "record_id": label.record_id,
            "verdict": label.verdict,
            "reason": label.reason,
            "note": label.note,
            "reviewer_id": label.reviewer_id,
            "reviewed_at": label.reviewed_at,
            "exclusion_scope": label.exclusion_scope,
        })
        self.labels[label.record_id] = label
        if label.creates_exclusion and record is not None:
            return self.add_exclusion(
                estate_id=record.estate_id,
                elevator_id=None if label.exclusion_scope == "estate" else record.elevator_id,
                floor=None if label.exclusion_scope == "estate" else record.floor,
                reason=label.reason,
            )
        return None

    # -- exclusions

    def add_exclusion(self, estate_id: str, elevator_id: str | None,
                      floor: int | None, reason: str) -> ExclusionEntry:
        if reason not in REASONS:
            raise DataError(f"unknown reason {reason!r}")
        entry = ExclusionEntry(
            estate_id=estate_id,
            elevator_id=elevator_id,
            floor=floor,
            reason=reason,
            created_at=dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            entry_id=f"x-{self._next_exclusion:06d}",
        )
        self._next_exclusion += 1
        _append_journal(self.exclusions_path, {
            "op": "add", "entry_id": entry.entry_id, "estate": entry.estate_id,
            "elevator": entry.elevator_id, "floor": entry.floor,
            "reason": entry.reason, "created_at": entry.created_at,
        })
        self.exclusions[entry.entry_id] = entry
        return entry

    def delete_exclusion(self, entry_id: str) -> bool:
        entry = self.exclusions.get(entry_id)
        if entry is None or entry.deleted:
            return False
        _append_journal(self.exclusions_path, {"op": "delete", "entry_id": entry_id})
        entry.deleted = True
        return True

    def active_exclusions(self) -> list[ExclusionEntry]:
        return [e for e in self.exclusions.values() if not e.deleted]
