"""Association-matrix matching and per-floor flow reconstruction.

For each stop, passengers observed before the stop (p1) and after it (p2) are
paired by Euclidean distance between their appearance embeddings. Mutual
nearest neighbors within a threshold are the same person riding through;
unmatched p2 observations boarded at that floor, unmatched p1 observations
alighted there. Boarders and alighters are accumulated into per
(estate, elevator, floor, date) aggregates.

Mutual-NN (rather than one-sided row minima) keeps the matching one-to-one
without an assignment solver; ties on exact distance equality break toward
the smaller index, so results do not depend on scan order.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .features import DayKey, FloorDayAggregate
from .simulate import PassengerObservation, StopEvent

DEFAULT_MATCH_THRESHOLD = 0.5


@dataclass
class MatchResult:
    matched: list[tuple[int, int]]
    boarded: list[int]  # p2 indices with no p1 match
    alighted: list[int]  # p1 indices with no p2 match
    threshold_used: float


@dataclass
class FlowLedger:
    aggregates: dict[DayKey, FloorDayAggregate] = field(default_factory=dict)

    def get_or_create(self, estate_id: str, elevator_id: str, floor: int,
                      date: dt.date) -> FloorDayAggregate:
        key = (estate_id, elevator_id, floor, date)
        agg = self.aggregates.get(key)
        if agg is None:
            agg = FloorDayAggregate(estate_id, elevator_id, floor, date)
            self.aggregates[key] = agg
        return agg

    def merge(self, other: "FlowLedger") -> None:
        """Associative/commutative merge, safe across per-elevator shards."""
        for key, agg in other.aggregates.items():
            mine = self.aggregates.get(key)
            if mine is None:
                self.aggregates[key] = agg
            else:
                mine.merge(agg)


@dataclass
class StopFlowRecord:
    """Per-stop reconstruction summary, kept for review-tool evidence."""

    estate_id: str
    elevator_id: str
    floor: int
    timestamp: int
    boarded: list[int]
    alighted: list[int]


def association_matrix(pre_obs: list[PassengerObservation],
                       post_obs: list[PassengerObservation]) -> np.ndarray:
    """M x N Euclidean distances between p1 and p2 embeddings."""
    if not pre_obs or not post_obs:
        return np.zeros((len(pre_obs), len(post_obs)))
    dims = {o.embedding.shape[0] for o in pre_obs + post_obs}
    if len(dims) > 1:
        for i, o in enumerate(pre_obs + post_obs):
            if o.embedding.shape[0] != pre_obs[0].embedding.shape[0]:
                which = "pre" if i < len(pre_obs) else "post"
                idx = i if i < len(pre_obs) else i - len(pre_obs)
                raise DataError(
                    f"embedding dimension mismatch at {which}_obs[{idx}]: "
                    f"{o.embedding.shape[0]} != {pre_obs[0].embedding.shape[0]}")
    a = np.stack([o.embedding for o in pre_obs])
    b = np.stack([o.embedding for o in post_obs])
    sq = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.sqrt(np.maximum(sq, 0.0))


def match_passengers(d: np.ndarray, t: float = DEFAULT_MATCH_THRESHOLD) -> MatchResult:
    """Mutual-nearest-neighbor matching under threshold ``t``.

    (i, j) is matched iff j is the argmin of row i, i is the argmin of column
    j, and d[i, j] <= t. np.argmin returns the first minimum, which implements
    the smaller-index tie rule.
    """
    if t <= 0:
        raise DataError(f"match threshold must be > 0, got {t}")
    m, n = d.shape
    matched: list[tuple[int, int]] = []
    if m > 0 and n > 0:
        row_best = d.argmin(axis=1)
        col_best = d.argmin(axis=0)
        for i in range(m):
            j = int(row_best[i])
            if int(col_best[j]) == i and d[i, j] <= t:
                matched.append((i, j))
    matched_rows = {i for i, _ in matched}
    matched_cols = {j for _, j in matched}
    return MatchResult(
        matched=matched,
        boarded=[j for j in range(n) if j not in matched_cols],
        alighted=[i for i in range(m) if i not in matched_rows],
        threshold_used=t,
    )


def _stop_date_hour(timestamp: int) -> tuple[dt.date, int]:
    moment = dt.datetime.fromtimestamp(timestamp, tz=dt.timezone.utc)
    return moment.date(), moment.hour


def reconstruct(events: list[StopEvent], t: float = DEFAULT_MATCH_THRESHOLD,
                collect_stops: bool = False,
                ) -> FlowLedger | tuple[FlowLedger, list[StopFlowRecord]]:
    """Accumulate boarded/alighted passengers of every stop into a FlowLedger.

    Events must be time-ordered within each elevator. With
    ``collect_stops=True`` also returns one StopFlowRecord per event
    (index-aligned), used by the review service and fidelity tests.
    """
    last_ts: dict[tuple[str, str], int] = {}
    ledger = FlowLedger()
    stops: list[StopFlowRecord] = []
    for idx, ev in enumerate(events):
        ek = (ev.estate_id, ev.elevator_id)
        if ek in last_ts and ev.timestamp < last_ts[ek]:
            raise DataError(
                f"out-of-order timestamp for elevator {ev.elevator_id!r} at event {idx}")
        last_ts[ek] = ev.timestamp

        result = match_passengers(association_matrix(ev.pre_obs, ev.post_obs), t)
        date, hour = _stop_date_hour(ev.timestamp)
        agg = ledger.get_or_create(ev.estate_id, ev.elevator_id, ev.floor, date)
        for j in result.boarded:
            o = ev.post_obs[j]
            agg.add_passenger(True, hour, o.attr_class, o.attr_score)
        for i in result.alighted:
            o = ev.pre_obs[i]
            agg.add_passenger(False, hour, o.attr_class, o.attr_score)
        if collect_stops:
            stops.append(StopFlowRecord(ev.estate_id, ev.elevator_id, ev.floor,
                                        ev.timestamp, result.boarded, result.alighted))
    if collect_stops:
        return ledger, stops
    return ledger
