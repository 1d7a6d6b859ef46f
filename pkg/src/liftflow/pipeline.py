"""Two-round hierarchical detection with exclusion-list filtering.

Round 1 fits a forest on the 13-value flow-count vectors of every key that
survives exclusion filtering and keeps the top contamination_r1 fraction.
Round 2 builds the 81-value attribute vectors only for those survivors, fits
a second forest on them, and emits the top contamination_r2 fraction as
anomaly records sorted by score. Review exclusions are applied before round 1
so confirmed non-hazards never pollute the training population.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field

import numpy as np

from . import features, iforest
from .errors import ConfigurationError, HarnessError
from .features import DayKey, FloorDayAggregate, FloorKey

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    end_date: dt.date
    window_days: int = 15
    contamination_r1: float = 0.2
    contamination_r2: float = 0.01
    match_threshold: float = 0.5
    tree_count: int = iforest.DEFAULT_TREE_COUNT
    subsample_size: int = iforest.DEFAULT_SUBSAMPLE
    seed: int = 0

    def validate(self) -> None:
        if not 0 < self.contamination_r2 <= self.contamination_r1 < 1:
            raise ConfigurationError(
                "need 0 < contamination_r2 <= contamination_r1 < 1, got "
                f"r1={self.contamination_r1} r2={self.contamination_r2}")
        if self.window_days < 1:
            raise ConfigurationError(f"window_days must be >= 1, got {self.window_days}")


@dataclass
class ExclusionEntry:
    estate_id: str
    elevator_id: str | None = None  # None = whole-estate scope
    floor: int | None = None
    reason: str = ""
    created_at: str = ""
    entry_id: str = ""
    deleted: bool = False

    def matches(self, key: FloorKey) -> bool:
        if self.estate_id != key[0]:
            return False
        if self.elevator_id is not None and self.elevator_id != key[1]:
            return False
        if self.floor is not None and self.floor != key[2]:
            return False
        return True


@dataclass
class AnomalyRecord:
    record_id: str
    estate_id: str
    elevator_id: str
    floor: int
    r1_score: float
    r2_score: float
    feature_r1: list[float]
    feature_r2: list[float]
    window_end: dt.date
    status: str = "open"

    @property
    def key(self) -> FloorKey:
        return (self.estate_id, self.elevator_id, self.floor)


def expected_emission_count(n_keys: int, contamination_r1: float,
                            contamination_r2: float) -> int:
    """Exact output size implied by the two-round count contract."""
    if n_keys == 0:
        return 0
    survivors = int(np.ceil(contamination_r1 * n_keys))
    if survivors < 2:
        return 0
    return int(np.ceil(contamination_r2 * survivors))


def run(ledger: dict[DayKey, FloorDayAggregate], config: RunConfig,
        exclusions: list[ExclusionEntry] = ()) -> list[AnomalyRecord]:
    """One detection run over the trailing window ending at config.end_date."""
    config.validate()
    active = [e for e in exclusions if not e.deleted]
    all_keys = sorted({(e, el, f) for (e, el, f, _) in ledger})
    keys = [k for k in all_keys if not any(x.matches(k) for x in active)]
    if not keys:
        return []

    view = features.window_select(ledger, config.end_date, config.window_days, keys)
    r1_vectors = {k: features.build_r1(view, k) for k in keys}
    r1_matrix = np.stack([r1_vectors[k] for k in keys])

    if len(keys) < 2:
        logger.warning("only %d key(s) to score; emitting nothing", len(keys))
        return []
    forest1 = iforest.fit(r1_matrix, config.tree_count, config.subsample_size,
                          seed=config.seed)
    r1_scores = forest1.scores(r1_matrix)
    _, r1_flags = iforest.threshold_by_contamination(r1_scores, config.contamination_r1)
    survivors = [k for k, flagged in zip(keys, r1_flags) if flagged]

    if len(survivors) < 2:
        logger.warning("round 2 degenerate: %d survivor(s) from round 1", len(survivors))
        return []
    r2_vectors = {k: features.build_r2(view, k, r1_vectors[k]) for k in survivors}
    r2_matrix = np.stack([r2_vectors[k] for k in survivors])
    forest2 = iforest.fit(r2_matrix, config.tree_count, config.subsample_size,
                          seed=config.seed + 1)
    r2_scores = forest2.scores(r2_matrix)
    _, r2_flags = iforest.threshold_by_contamination(r2_scores, config.contamination_r2)

    score1 = dict(zip(keys, r1_scores))
    emitted = [(k, float(s)) for k, s, f in zip(survivors, r2_scores, r2_flags) if f]
    emitted.sort(key=lambda item: (-item[1], item[0]))
    records = []
    for k, s2 in emitted:
        estate_id, elevator_id, floor = k
        records.append(AnomalyRecord(
            record_id=f"{estate_id}.{elevator_id}.{floor}.{config.end_date.isoformat()}",
            estate_id=estate_id,
            elevator_id=elevator_id,
            floor=floor,
            r1_score=float(score1[k]),
            r2_score=s2,
            feature_r1=[float(v) for v in r1_vectors[k]],
            feature_r2=[float(v) for v in r2_vectors[k]],
            window_end=config.end_date,
        ))
    return records


def evaluate(records: list[AnomalyRecord],
             planted_keys: set[FloorKey] | None) -> dict[str, float | None]:
    """Recall/precision of emitted records against planted anomaly keys."""
    if planted_keys is None:
        raise HarnessError("ground-truth sidecar with planted keys is required")
    emitted_keys = {r.key for r in records}
    hits = len(emitted_keys & planted_keys)
    recall = hits / len(planted_keys) if planted_keys else None
    precision = hits / len(emitted_keys) if emitted_keys else 0.0
    return {"recall": recall, "precision": precision,
            "emitted": len(emitted_keys), "planted": len(planted_keys)}
