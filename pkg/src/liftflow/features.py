"""Per-floor daily aggregates and the two detection feature vectors.

Round 1 uses a 13-value flow-count vector per (elevator, floor):
mean/std of daily flow at three scopes (floor, elevator, estate), split
weekday/weekend over the selected window, plus the floor number.

Round 2 replaces the floor number with attribute means: headcount, 22
attribute classification rates, 22 attribute score means, and the
normalized 24-hour appearance histogram (81 values total).
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

ATTRIBUTE_COUNT = 22
R1_LENGTH = 13
R2_LENGTH = 81

R1_COLUMNS = [f"m{i}" for i in range(1, 7)] + [f"s{i}" for i in range(1, 7)] + ["floor"]
R2_COLUMNS = (
    [f"m{i}" for i in range(1, 7)]
    + [f"s{i}" for i in range(1, 7)]
    + ["Num"]
    + [f"t{i}" for i in range(1, ATTRIBUTE_COUNT + 1)]
    + [f"ts{i}" for i in range(1, ATTRIBUTE_COUNT + 1)]
    + [f"h{i}" for i in range(1, 25)]
)
assert len(R2_COLUMNS) == R2_LENGTH

#: (estate_id, elevator_id, floor) — the unit of detection.
FloorKey = tuple[str, str, int]
#: FloorKey plus the civil date of the aggregate.
DayKey = tuple[str, str, int, dt.date]


@dataclass
class FloorDayAggregate:
    """Accumulated boardings/alightings for one floor of one elevator on one day."""

    estate_id: str
    elevator_id: str
    floor: int
    date: dt.date
    in_count: int = 0
    out_count: int = 0
    hour_histogram: np.ndarray = field(default_factory=lambda: np.zeros(24, dtype=np.int64))
    attr_class_sum: np.ndarray = field(default_factory=lambda: np.zeros(ATTRIBUTE_COUNT))
    attr_score_sum: np.ndarray = field(default_factory=lambda: np.zeros(ATTRIBUTE_COUNT))

    @property
    def key(self) -> DayKey:
        return (self.estate_id, self.elevator_id, self.floor, self.date)

    @property
    def floor_key(self) -> FloorKey:
        return (self.estate_id, self.elevator_id, self.floor)

    @property
    def passenger_count(self) -> int:
        return self.in_count + self.out_count

    @property
    def day_kind(self) -> str:
        return "weekend" if self.date.weekday() >= 5 else "weekday"

    def add_passenger(self, boarded: bool, hour: int, attr_class, attr_score) -> None:
        if boarded:
            self.in_count += 1
        else:
            self.out_count += 1
        self.hour_histogram[hour] += 1
        self.attr_class_sum += np.asarray(attr_class, dtype=float)
        self.attr_score_sum += np.asarray(attr_score, dtype=float)

    def merge(self, other: "FloorDayAggregate") -> None:
        assert self.key == other.key
        self.in_count += other.in_count
        self.out_count += other.out_count
        self.hour_histogram += other.hour_histogram
        self.attr_class_sum += other.attr_class_sum
        self.attr_score_sum += other.attr_score_sum


class WindowView:
    """Aggregates of one trailing window, with zero-imputed missing days.

    Built by :func:`window_select`; feeds :func:`build_r1` / :func:`build_r2`.
    Scope sums (per elevator, per estate) are computed lazily and cached so
    per-key feature building stays O(window).
    """

    def __init__(self, dates: list[dt.date], keys: list[FloorKey],
                 aggregates: dict[DayKey, FloorDayAggregate]):
        self.dates = dates
        self.keys = keys
        self.weekday_mask = np.array([d.weekday() < 5 for d in dates])
        self._aggs = aggregates
        n = len(dates)
        self.flows: dict[FloorKey, np.ndarray] = {}
        for key in keys:
            f = np.zeros(n)
            for i, d in enumerate(dates):
                agg = aggregates.get(key + (d,))
                if agg is not None:
                    f[i] = agg.passenger_count
            self.flows[key] = f
        self._elevator_flow: dict[tuple[str, str], np.ndarray] = {}
        self._estate_flow: dict[str, np.ndarray] = {}

    def aggregates_for(self, key: FloorKey) -> list[FloorDayAggregate | None]:
        return [self._aggs.get(key + (d,)) for d in self.dates]

    def elevator_flow(self, estate_id: str, elevator_id: str) -> np.ndarray:
        ek = (estate_id, elevator_id)
        if ek not in self._elevator_flow:
            total = np.zeros(len(self.dates))
            for key in self.keys:
                if (key[0], key[1]) == ek:
                    total += self.flows[key]
            self._elevator_flow[ek] = total
        return self._elevator_flow[ek]

    def estate_flow(self, estate_id: str) -> np.ndarray:
        if estate_id not in self._estate_flow:
            total = np.zeros(len(self.dates))
            for key in self.keys:
                if key[0] == estate_id:
                    total += self.flows[key]
            self._estate_flow[estate_id] = total
        return self._estate_flow[estate_id]


def window_select(ledger: dict[DayKey, FloorDayAggregate], end_date: dt.date,
                  window_days: int = 15,
                  keys: list[FloorKey] | None = None) -> WindowView:
    """Select the trailing window ending at ``end_date`` (inclusive).

    Days with no traffic for a key contribute zero flow rather than being
    skipped; a key absent from the ledger entirely yields an all-zero series.
    When ``keys`` is not given, the key universe is everything the ledger has
    ever seen.
    """
    if window_days < 1:
        raise ValueError(f"window_days must be >= 1, got {window_days}")
    dates = [end_date - dt.timedelta(days=window_days - 1 - i) for i in range(window_days)]
    if keys is None:
        keys = sorted({(e, el, f) for (e, el, f, _) in ledger})
    return WindowView(dates, list(keys), ledger)


def _mean_std(series: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    sel = series[mask]
    if sel.size == 0:
        return 0.0, 0.0
    return float(sel.mean()), float(sel.std())  # population std


def build_r1(view: WindowView, key: FloorKey) -> np.ndarray:
    """13-value flow-count feature vector for one (estate, elevator, floor)."""
    estate_id, elevator_id, floor = key
    floor_f = view.flows.get(key)
    if floor_f is None:
        floor_f = np.zeros(len(view.dates))
    elev_f = view.elevator_flow(estate_id, elevator_id)
    estate_f = view.estate_flow(estate_id)
    wk = view.weekday_mask
    we = ~wk
    m1, s1 = _mean_std(floor_f, wk)
    m2, s2 = _mean_std(elev_f, wk)
    m3, s3 = _mean_std(estate_f, wk)
    m4, s4 = _mean_std(floor_f, we)
    m5, s5 = _mean_std(elev_f, we)
    m6, s6 = _mean_std(estate_f, we)
    vec = np.array([m1, m2, m3, m4, m5, m6, s1, s2, s3, s4, s5, s6, float(floor)])
    assert vec.shape == (R1_LENGTH,)
    return vec


def build_r2(view: WindowView, key: FloorKey, r1: np.ndarray) -> np.ndarray:
    """81-value attribute feature vector; copies r1's 12 statistics, drops the floor."""
    assert r1.shape == (R1_LENGTH,)
    num = 0
    class_sum = np.zeros(ATTRIBUTE_COUNT)
    score_sum = np.zeros(ATTRIBUTE_COUNT)
    hours = np.zeros(24)
    for agg in view.aggregates_for(key):
        if agg is None:
            continue
        num += agg.passenger_count
        class_sum += agg.attr_class_sum
        score_sum += agg.attr_score_sum
        hours += agg.hour_histogram
    if num > 0:
        t = class_sum / num
        ts = score_sum / num
        h = hours / num
    else:
        t = class_sum
        ts = score_sum
        h = hours
    vec = np.concatenate([r1[:12], [float(num)], t, ts, h])
    assert vec.shape == (R2_LENGTH,)
    return vec
