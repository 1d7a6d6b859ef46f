"""Seeded building/passenger-flow simulator.

Replaces the camera + encoder front end of a real deployment: residents with
fixed appearance-embedding centroids ride elevators between their home floor
and the lobby, and every elevator stop yields a pair of observation lists
(pre-stop and post-stop occupants), each occupant re-observed with fresh
noise. Planted anomalies (overcrowding, office-style traffic, late-night
gatherings) come with a ground-truth sidecar for evaluation.

Everything is deterministic for a fixed (spec, plans, seed): randomness is
drawn from numpy SeedSequence children keyed by (seed, purpose, day, ...) so
independent parts of the simulation never share a stream.
"""

from __future__ import annotations

import datetime as dt
import heapq
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .features import ATTRIBUTE_COUNT, DayKey, FloorDayAggregate, FloorKey

SECONDS_PER_DAY = 86400
#: latest second-of-day a boarding may be scheduled, leaving room for travel
LAST_BOARD_SECOND = 85800
#: events at the same floor within this many seconds collapse into one stop
STOP_MERGE_WINDOW = 15
_PER_FLOOR_TRAVEL = 8
_STOP_OVERHEAD = 12

SCHEDULE_KINDS = ("resident_weekday", "resident_weekend", "office_hours", "nocturnal", "custom")

# Hourly departure weights. Residents use the weekday table Mon-Fri and the
# weekend table Sat/Sun; office/nocturnal kinds use their table every day.
_RESIDENT_WEEKDAY = np.array(
    [0.2, 0.1, 0.05, 0.05, 0.1, 0.5, 2.0, 4.0, 3.0, 1.5, 1.0, 1.2,
     1.5, 1.0, 0.8, 1.0, 1.5, 3.0, 4.0, 3.0, 2.0, 1.5, 1.0, 0.5])
_RESIDENT_WEEKEND = np.array(
    [0.3, 0.15, 0.05, 0.05, 0.05, 0.1, 0.3, 0.8, 1.5, 2.5, 3.0, 3.0,
     2.5, 2.5, 2.5, 2.5, 2.0, 2.0, 2.0, 2.0, 1.8, 1.5, 1.0, 0.5])
_OFFICE_HOURS = np.array(
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 1.5, 4.0, 2.0, 1.5,
     2.5, 2.0, 1.5, 1.5, 1.5, 3.0, 3.5, 1.0, 0.3, 0.1, 0.0, 0.0])
_NOCTURNAL = np.array(
    [3.0, 2.0, 1.0, 0.5, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.2, 0.3,
     0.3, 0.3, 0.3, 0.3, 0.3, 0.5, 0.5, 1.0, 1.5, 2.5, 3.5, 3.5])

_TABLES = {
    "resident_weekday": (_RESIDENT_WEEKDAY, _RESIDENT_WEEKEND),
    "resident_weekend": (_RESIDENT_WEEKEND, _RESIDENT_WEEKEND),
    "office_hours": (_OFFICE_HOURS, _OFFICE_HOURS),
    "nocturnal": (_NOCTURNAL, _NOCTURNAL),
    "custom": (_RESIDENT_WEEKDAY, _RESIDENT_WEEKEND),
}

ANOMALY_KINDS = ("overcrowded_floor", "office_pattern", "late_night_gathering")


@dataclass(frozen=True)
class BuildingSpec:
    estate_id: str
    elevator_count: int
    floor_count: int
    residents_per_floor: int
    embedding_dim: int = 128
    noise_sigma: float = 0.05
    day_count: int = 15
    start_date: dt.date = dt.date(2021, 3, 1)  # a Monday
    elevator_capacity: int = 20
    trips_per_day: float = 2.0

    def validate(self) -> None:
        if self.elevator_count < 1:
            raise ConfigurationError(f"elevator_count must be >= 1, got {self.elevator_count}")
        if self.floor_count < 2:
            raise ConfigurationError(f"floor_count must be >= 2, got {self.floor_count}")
        if self.residents_per_floor < 0:
            raise ConfigurationError(
                f"residents_per_floor must be >= 0, got {self.residents_per_floor}")
        if self.embedding_dim < 2:
            raise ConfigurationError(f"embedding_dim must be >= 2, got {self.embedding_dim}")
        if self.noise_sigma < 0:
            raise ConfigurationError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.day_count < 1:
            raise ConfigurationError(f"day_count must be >= 1, got {self.day_count}")
        if self.elevator_capacity < 1:
            raise ConfigurationError(
                f"elevator_capacity must be >= 1, got {self.elevator_capacity}")
        if self.trips_per_day < 0:
            raise ConfigurationError(f"trips_per_day must be >= 0, got {self.trips_per_day}")

    @property
    def elevator_ids(self) -> list[str]:
        return [f"E{i + 1}" for i in range(self.elevator_count)]


@dataclass
class ResidentProfile:
    resident_id: str
    home_floor: int
    embedding_centroid: np.ndarray  # unit norm
    attribute_truth: np.ndarray  # 22 values in [0, 1]
    schedule_kind: str = "resident_weekday"
    trips_per_day: float = 2.0


@dataclass(frozen=True)
class AnomalyPlan:
    kind: str
    estate_id: str
    elevator_id: str
    floor: int
    magnitude: float
    active_days: frozenset[dt.date] = frozenset()

    def validate(self, spec: BuildingSpec) -> None:
        if self.kind not in ANOMALY_KINDS:
            raise ConfigurationError(f"unknown anomaly kind {self.kind!r}")
        if self.estate_id != spec.estate_id:
            raise ConfigurationError(f"plan estate_id {self.estate_id!r} not in spec")
        if self.elevator_id not in spec.elevator_ids:
            raise ConfigurationError(f"plan elevator_id {self.elevator_id!r} not in spec")
        if not 1 <= self.floor <= spec.floor_count:
            raise ConfigurationError(
                f"plan floor {self.floor} outside 1..{spec.floor_count}")
        if self.magnitude <= 0:
            raise ConfigurationError(f"magnitude must be > 0, got {self.magnitude}")
        if self.kind == "overcrowded_floor" and self.magnitude <= 1:
            raise ConfigurationError(
                f"overcrowded_floor magnitude must be > 1, got {self.magnitude}")

    @property
    def floor_key(self) -> FloorKey:
        return (self.estate_id, self.elevator_id, self.floor)


@dataclass
class PassengerObservation:
    embedding: np.ndarray  # unit norm
    attr_class: np.ndarray  # 22 ints in {0, 1}
    attr_score: np.ndarray  # 22 reals in [0, 1]
    true_resident_id: str | None = None  # ground truth, stripped before detection


@dataclass
class StopEvent:
    estate_id: str
    elevator_id: str
    floor: int
    timestamp: int  # UTC epoch seconds
    pre_obs: list[PassengerObservation]
    post_obs: list[PassengerObservation]


@dataclass
class StopTruth:
    """Per-stop ground truth, index-aligned with the simulated event list."""

    boarded_post_idx: list[int]
    alighted_pre_idx: list[int]
    boarded_ids: list[str]
    alighted_ids: list[str]


@dataclass
class GroundTruthLedger:
    aggregates: dict[DayKey, FloorDayAggregate] = field(default_factory=dict)
    stop_truth: list[StopTruth] = field(default_factory=list)
    anomaly_day_keys: set[DayKey] = field(default_factory=set)
    planted_keys: set[FloorKey] = field(default_factory=set)


def generate_building(spec: BuildingSpec, seed: int) -> list[ResidentProfile]:
    """Deterministic resident population: centroids uniform on the unit sphere."""
    spec.validate()
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0xB11D]))
    population = []
    kinds = np.array(["resident_weekday", "office_hours", "nocturnal"])
    kind_p = np.array([0.8, 0.12, 0.08])
    for floor in range(1, spec.floor_count + 1):
        for i in range(spec.residents_per_floor):
            centroid = rng.standard_normal(spec.embedding_dim)
            centroid /= np.linalg.norm(centroid)
            population.append(ResidentProfile(
                resident_id=f"{spec.estate_id}-f{floor:03d}-r{i:03d}",
                home_floor=floor,
                embedding_centroid=centroid,
                attribute_truth=rng.uniform(0.0, 1.0, ATTRIBUTE_COUNT),
                schedule_kind=str(rng.choice(kinds, p=kind_p)),
                trips_per_day=spec.trips_per_day * rng.uniform(0.7, 1.3),
            ))
    return population


def observe(profile: ResidentProfile, sigma: float,
            rng: int | np.random.Generator) -> PassengerObservation:
    """One noisy snapshot of a resident.

    ``sigma`` is the expected norm of the embedding perturbation (the
    per-component deviation is sigma/sqrt(dim)), so matching behavior does not
    depend on the embedding dimension. sigma=0 returns the centroid exactly.
    """
    if sigma < 0:
        raise ConfigurationError(f"sigma must be >= 0, got {sigma}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    d = profile.embedding_centroid.shape[0]
    if sigma == 0:
        emb = profile.embedding_centroid.copy()
        score = profile.attribute_truth.copy()
    else:
        emb = profile.embedding_centroid + (sigma / np.sqrt(d)) * rng.standard_normal(d)
        emb /= np.linalg.norm(emb)
        score = np.clip(profile.attribute_truth + sigma * rng.standard_normal(ATTRIBUTE_COUNT),
                        0.0, 1.0)
    return PassengerObservation(
        embedding=emb,
        attr_class=(score >= 0.5).astype(np.int8),
        attr_score=score,
        true_resident_id=profile.resident_id,
    )


def _observe_group(profiles: list[ResidentProfile], sigma: float,
                   rng: np.random.Generator) -> list[PassengerObservation]:
    return [observe(p, sigma, rng) for p in profiles]


def _sample_second(table: np.ndarray, rng: np.random.Generator) -> int:
    hour = int(rng.choice(24, p=table / table.sum()))
    sec = hour * 3600 + int(rng.integers(0, 3600))
    return min(sec, LAST_BOARD_SECOND)


def _departure_table(kind: str, is_weekend: bool) -> np.ndarray:
    wk, we = _TABLES[kind]
    return we if is_weekend else wk


@dataclass
class _Ride:
    board_sec: int  # second of day
    origin: int
    dest: int
    profile: ResidentProfile
    elevator_id: str


def _round_trip(profile: ResidentProfile, elevator_ids: list[str], table: np.ndarray,
                rng: np.random.Generator, dest_floor: int = 1) -> list[_Ride]:
    """One out-and-back trip between the resident's home floor and dest_floor."""
    if profile.home_floor == dest_floor:
        return []
    depart = _sample_second(table, rng)
    away = int(rng.uniform(1800, 4 * 3600))
    back = min(depart + away, LAST_BOARD_SECOND)
    back = max(back, depart + 300)
    ev_out = str(rng.choice(elevator_ids))
    ev_back = str(rng.choice(elevator_ids))
    return [
        _Ride(depart, profile.home_floor, dest_floor, profile, ev_out),
        _Ride(back, dest_floor, profile.home_floor, profile, ev_back),
    ]


def _visit_trip(profile: ResidentProfile, elevator_id: str, floor: int,
                arrive_sec: int, leave_sec: int) -> list[_Ride]:
    """Visitor enters at the lobby, visits ``floor``, and leaves again."""
    return [
        _Ride(arrive_sec, 1, floor, profile, elevator_id),
        _Ride(leave_sec, floor, 1, profile, elevator_id),
    ]


def _ghost_profile(spec: BuildingSpec, seed: int, plan_idx: int, ghost_idx: int,
                   floor: int, schedule_kind: str) -> ResidentProfile:
    # the extra people an anomaly brings are a homogeneous group (a crowd of
    # migrants, one office's staff, one circle of visitors): they share a
    # strongly polarized per-plan attribute profile instead of looking like
    # an average resident
    plan_rng = np.random.default_rng(np.random.SeedSequence(
        [seed & 0xFFFFFFFFFFFFFFFF, 0xA4, plan_idx]))
    group_attrs = plan_rng.choice([0.08, 0.92], size=ATTRIBUTE_COUNT)
    rng = np.random.default_rng(np.random.SeedSequence(
        [seed & 0xFFFFFFFFFFFFFFFF, 0xA0, plan_idx, ghost_idx]))
    centroid = rng.standard_normal(spec.embedding_dim)
    centroid /= np.linalg.norm(centroid)
    return ResidentProfile(
        resident_id=f"{spec.estate_id}-x{plan_idx:02d}-g{ghost_idx:03d}",
        home_floor=floor,
        embedding_centroid=centroid,
        attribute_truth=np.clip(
            group_attrs + 0.08 * rng.standard_normal(ATTRIBUTE_COUNT), 0.0, 1.0),
        schedule_kind=schedule_kind,
        trips_per_day=0.0,
    )


def _anomaly_rides(spec: BuildingSpec, plans: list[AnomalyPlan], seed: int,
                   day_index: int, date: dt.date,
                   base_floor_trips: dict[int, int],
                   ghost_cache: dict[tuple[int, int], ResidentProfile],
                   marked: set[DayKey]) -> list[_Ride]:
    """Extra rides injected by active plans.

    Per-trip randomness comes from SeedSequence children keyed by the trip
    index, never by the total count, so raising a plan's magnitude only adds
    rides and never perturbs the ones a weaker plan would generate.
    """
    rides: list[_Ride] = []
    for plan_idx, plan in enumerate(plans):
        if date not in plan.active_days:
            continue
        marked.add((plan.estate_id, plan.elevator_id, plan.floor, date))

        def ghost(i: int, kind: str) -> ResidentProfile:
            ck = (plan_idx, i)
            if ck not in ghost_cache:
                ghost_cache[ck] = _ghost_profile(spec, seed, plan_idx, i, plan.floor, kind)
            return ghost_cache[ck]

        def trip_rng(trip_idx: int, tag: int) -> np.random.Generator:
            return np.random.default_rng(np.random.SeedSequence(
                [seed & 0xFFFFFFFFFFFFFFFF, tag, plan_idx, day_index, trip_idx]))

        if plan.kind == "overcrowded_floor":
            base = max(base_floor_trips.get(plan.floor, 0), spec.residents_per_floor)
            extra = int(round((plan.magnitude - 1) * base))
            pool = max(1, int(np.ceil(plan.magnitude)) * max(spec.residents_per_floor, 2))
            for e in range(extra):
                rng = trip_rng(e, 0xA1)
                table = _departure_table("resident_weekday", date.weekday() >= 5)
                prof = ghost(e % pool, "resident_weekday")
                depart = _sample_second(table, rng)
                away = int(rng.uniform(1800, 4 * 3600))
                back = max(min(depart + away, LAST_BOARD_SECOND), depart + 300)
                rides.append(_Ride(depart, plan.floor, 1, prof, plan.elevator_id))
                rides.append(_Ride(back, 1, plan.floor, prof, plan.elevator_id))
        elif plan.kind == "office_pattern":
            headcount = max(1, int(round(plan.magnitude)))
            if date.weekday() >= 5:
                continue  # offices quiet on weekends
            for i in range(headcount):
                rng = trip_rng(i, 0xA2)
                prof = ghost(i, "office_hours")
                arrive = int(rng.uniform(8 * 3600, 10 * 3600))
                leave = int(rng.uniform(17 * 3600, 19 * 3600))
                rides.extend(_visit_trip(prof, plan.elevator_id, plan.floor, arrive, leave))
                # midday errand for roughly half the staff
                if rng.uniform() < 0.5:
                    out = int(rng.uniform(12 * 3600, 13 * 3600))
                    back = out + int(rng.uniform(1800, 3600))
                    rides.append(_Ride(out, plan.floor, 1, prof, plan.elevator_id))
                    rides.append(_Ride(back, 1, plan.floor, prof, plan.elevator_id))
        elif plan.kind == "late_night_gathering":
            visitors = max(1, int(round(plan.magnitude)))
            for i in range(visitors):
                rng = trip_rng(i, 0xA3)
                prof = ghost(i, "nocturnal")
                arrive = int(rng.uniform(20 * 3600, 22 * 3600))
                leave = int(rng.uniform(22.5 * 3600, 23.7 * 3600))
                rides.extend(_visit_trip(prof, plan.elevator_id, plan.floor, arrive, leave))
    return rides


def _travel_seconds(origin: int, dest: int) -> int:
    return _STOP_OVERHEAD + _PER_FLOOR_TRAVEL * abs(dest - origin)


def _run_elevator(spec: BuildingSpec, elevator_id: str, rides: list[_Ride],
                  day_epoch: int, date: dt.date, obs_rng: np.random.Generator,
                  ledger: GroundTruthLedger,
                  events_out: list[tuple[int, str, StopEvent, StopTruth]]) -> None:
    """Serve one elevator's rides for one day, emitting merged stop events."""
    heap: list[tuple[int, int, str, _Ride]] = []
    seq = 0
    for r in sorted(rides, key=lambda r: (r.board_sec, r.profile.resident_id)):
        heapq.heappush(heap, (r.board_sec, seq, "board", r))
        seq += 1

    onboard: list[ResidentProfile] = []
    retries: dict[str, int] = {}

    def agg_for(floor: int) -> FloorDayAggregate:
        key = (spec.estate_id, elevator_id, floor, date)
        if key not in ledger.aggregates:
            ledger.aggregates[key] = FloorDayAggregate(spec.estate_id, elevator_id, floor, date)
        return ledger.aggregates[key]

    while heap:
        t0, _, kind0, ride0 = heapq.heappop(heap)
        floor = ride0.origin if kind0 == "board" else ride0.dest
        stop_items = [(kind0, ride0)]
        while heap:
            t, _, k, r = heap[0]
            f = r.origin if k == "board" else r.dest
            if f == floor and t <= t0 + STOP_MERGE_WINDOW:
                heapq.heappop(heap)
                stop_items.append((k, r))
            else:
                break

        pre_profiles = list(onboard)
        alighted_pre_idx: list[int] = []
        boarding: list[_Ride] = []
        for k, r in stop_items:
            if k == "alight":
                idx = next(i for i, p in enumerate(pre_profiles)
                           if p.resident_id == r.profile.resident_id)
                alighted_pre_idx.append(idx)
                onboard = [p for p in onboard if p.resident_id != r.profile.resident_id]
            else:
                boarding.append(r)

        boarded_ids: list[str] = []
        for r in boarding:
            already = any(p.resident_id == r.profile.resident_id for p in onboard)
            if already:
                continue  # overlapping trips for one resident: drop the ride
            if len(onboard) >= spec.elevator_capacity:
                # spill to a later stop
                n = retries.get(r.profile.resident_id, 0)
                if n < 10:
                    retries[r.profile.resident_id] = n + 1
                    seq += 1
                    heapq.heappush(heap, (min(t0 + 60, SECONDS_PER_DAY - 300), seq, "board", r))
                continue
            onboard.append(r.profile)
            boarded_ids.append(r.profile.resident_id)
            seq += 1
            heapq.heappush(heap, (t0 + _travel_seconds(r.origin, r.dest), seq, "alight", r))

        if not boarded_ids and not alighted_pre_idx:
            continue

        pre_obs = _observe_group(pre_profiles, spec.noise_sigma, obs_rng)
        post_obs = _observe_group(onboard, spec.noise_sigma, obs_rng)
        boarded_post_idx = [i for i, p in enumerate(onboard) if p.resident_id in boarded_ids]
        ts = day_epoch + t0
        event = StopEvent(spec.estate_id, elevator_id, floor, ts, pre_obs, post_obs)
        truth = StopTruth(
            boarded_post_idx=boarded_post_idx,
            alighted_pre_idx=sorted(alighted_pre_idx),
            boarded_ids=list(boarded_ids),
            alighted_ids=[pre_profiles[i].resident_id for i in sorted(alighted_pre_idx)],
        )
        hour = (t0 // 3600) % 24
        agg = agg_for(floor)
        for i in boarded_post_idx:
            agg.add_passenger(True, hour, post_obs[i].attr_class, post_obs[i].attr_score)
        for i in truth.alighted_pre_idx:
            agg.add_passenger(False, hour, pre_obs[i].attr_class, pre_obs[i].attr_score)
        events_out.append((ts, elevator_id, event, truth))


def simulate(spec: BuildingSpec, population: list[ResidentProfile],
             plans: list[AnomalyPlan], seed: int) -> tuple[list[StopEvent], GroundTruthLedger]:
    """Generate the full stop-event stream plus its ground-truth sidecar."""
    spec.validate()
    for plan in plans:
        plan.validate(spec)

    ledger = GroundTruthLedger(planted_keys={p.floor_key for p in plans})
    ghost_cache: dict[tuple[int, int], ResidentProfile] = {}
    collected: list[tuple[int, str, StopEvent, StopTruth]] = []
    elevator_ids = spec.elevator_ids
    obs_rngs = {
        ev: np.random.default_rng(np.random.SeedSequence(
            [seed & 0xFFFFFFFFFFFFFFFF, 2, i]))
        for i, ev in enumerate(elevator_ids)
    }

    lams = np.array([p.trips_per_day for p in population])
    for day_index in range(spec.day_count):
        date = spec.start_date + dt.timedelta(days=day_index)
        day_epoch = int(dt.datetime(date.year, date.month, date.day,
                                    tzinfo=dt.timezone.utc).timestamp())
        is_weekend = date.weekday() >= 5
        rng_day = np.random.default_rng(np.random.SeedSequence(
            [seed & 0xFFFFFFFFFFFFFFFF, 1, day_index]))
        counts = rng_day.poisson(lams) if len(population) else np.array([], dtype=int)

        rides: list[_Ride] = []
        base_floor_trips: dict[int, int] = {}
        for prof, n in zip(population, counts):
            if n == 0 or prof.home_floor == 1:
                continue
            table = _departure_table(prof.schedule_kind, is_weekend)
            for _ in range(int(n)):
                trip = _round_trip(prof, elevator_ids, table, rng_day)
                rides.extend(trip)
                if trip:
                    base_floor_trips[prof.home_floor] = \
                        base_floor_trips.get(prof.home_floor, 0) + 1

        rides.extend(_anomaly_rides(spec, plans, seed, day_index, date,
                                    base_floor_trips, ghost_cache,
                                    ledger.anomaly_day_keys))

        by_elevator: dict[str, list[_Ride]] = {ev: [] for ev in elevator_ids}
        for r in rides:
            by_elevator[r.elevator_id].append(r)
        for ev in elevator_ids:
            _run_elevator(spec, ev, by_elevator[ev], day_epoch, date,
                          obs_rngs[ev], ledger, collected)

    collected.sort(key=lambda item: (item[0], item[1]))
    events = [e for _, _, e, _ in collected]
    ledger.stop_truth = [t for _, _, _, t in collected]
    return events, ledger
