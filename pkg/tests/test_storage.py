import datetime as dt
import json

import numpy as np
import pytest

from liftflow import pipeline, simulate, storage
from liftflow.errors import DataError
from liftflow.features import FloorDayAggregate

END = dt.date(2021, 3, 15)


@pytest.fixture(scope="module")
def small_events():
    spec = simulate.BuildingSpec(
        estate_id="est-log", elevator_count=1, floor_count=4,
        residents_per_floor=2, embedding_dim=16, day_count=3)
    population = simulate.generate_building(spec, seed=3)
    events, _ = simulate.simulate(spec, population, [], seed=3)
    return events


class TestTripLog:
    def test_round_trip_lossless(self, small_events, tmp_path):
        path = tmp_path / "log.jsonl"
        storage.write_trip_log(small_events, path)
        loaded, rejects = storage.ingest(path)
        assert rejects == []
        assert len(loaded) == len(small_events)
        for a, b in zip(small_events, loaded):
            assert (a.estate_id, a.elevator_id, a.floor, a.timestamp) \
                == (b.estate_id, b.elevator_id, b.floor, b.timestamp)
            for oa, ob in zip(a.pre_obs + a.post_obs, b.pre_obs + b.post_obs):
                assert np.allclose(oa.embedding, ob.embedding)
                assert np.array_equal(oa.attr_class, ob.attr_class)
                assert np.allclose(oa.attr_score, ob.attr_score)

    def test_rewrite_byte_identical(self, small_events, tmp_path):
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        storage.write_trip_log(small_events, p1)
        loaded, _ = storage.ingest(p1)
        storage.write_trip_log(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert storage.ingest(path) == ([], [])

    def test_malformed_line_rejected_with_lineno(self, small_events, tmp_path):
        path = tmp_path / "log.jsonl"
        lines = [storage.event_to_line(e) for e in small_events[:20]]
        lines.insert(7, "{not json")
        path.write_text("\n".join(lines) + "\n")
        events, rejects = storage.ingest(path)
        assert len(events) == 20
        assert len(rejects) == 1
        assert rejects[0][0] == 8

    def test_semantic_reject(self, small_events, tmp_path):
        path = tmp_path / "log.jsonl"
        bad = json.loads(storage.event_to_line(small_events[0]))
        bad["floor"] = 0
        lines = [storage.event_to_line(e) for e in small_events[:20]]
        lines.append(json.dumps(bad))
        path.write_text("\n".join(lines) + "\n")
        events, rejects = storage.ingest(path)
        assert len(events) == 20
        assert "floor" in rejects[0][1]

    def test_reject_budget_exceeded(self, small_events, tmp_path):
        path = tmp_path / "log.jsonl"
        lines = [storage.event_to_line(e) for e in small_events[:5]]
        lines += ["garbage"] * 5
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataError, match="malformed"):
            storage.ingest(path)

    def test_unknown_fields_ignored(self, small_events, tmp_path):
        path = tmp_path / "log.jsonl"
        d = json.loads(storage.event_to_line(small_events[0]))
        d["未来のフィールド"] = {"nested": True}
        path.write_text(json.dumps(d) + "\n")
        events, rejects = storage.ingest(path)
        assert len(events) == 1 and rejects == []

    def test_output_sorted(self, small_events, tmp_path):
        path = tmp_path / "log.jsonl"
        storage.write_trip_log(list(reversed(small_events)), path)
        events, _ = storage.ingest(path)
        stamps = [(e.timestamp, e.estate_id, e.elevator_id) for e in events]
        assert stamps == sorted(stamps)


class TestSidecarAndLedger:
    def test_sidecar_round_trip(self, tmp_path):
        spec = simulate.BuildingSpec(
            estate_id="est-s", elevator_count=1, floor_count=3,
            residents_per_floor=2, embedding_dim=8, day_count=2)
        plan = simulate.AnomalyPlan(
            kind="overcrowded_floor", estate_id="est-s", elevator_id="E1", floor=2,
            magnitude=4.0,
            active_days=(dt.date(2021, 3, 1), dt.date(2021, 3, 2)))
        population = simulate.generate_building(spec, seed=1)
        _, truth = simulate.simulate(spec, population, [plan], seed=1)
        path = tmp_path / "truth.json"
        storage.write_sidecar(truth, path)
        loaded = storage.read_sidecar(path)
        assert loaded.planted_keys == truth.planted_keys
        assert loaded.anomaly_day_keys == truth.anomaly_day_keys
        assert set(loaded.aggregates) == set(truth.aggregates)
        for key, agg in truth.aggregates.items():
            other = loaded.aggregates[key]
            assert other.in_count == agg.in_count
            assert other.out_count == agg.out_count
            assert np.array_equal(other.hour_histogram, agg.hour_histogram)
            assert np.allclose(other.attr_score_sum, agg.attr_score_sum)
        assert len(loaded.stop_truth) == len(truth.stop_truth)

    def test_ledger_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        ledger = {}
        for floor in (1, 2, 3):
            agg = FloorDayAggregate("est-l", "E1", floor, END)
            for _ in range(5):
                score = rng.random(22)
                agg.add_passenger(True, int(rng.integers(24)),
                                  score >= 0.5, score)
            ledger[agg.key] = agg
        path = tmp_path / "ledger.jsonl"
        storage.write_ledger(ledger, path)
        loaded = storage.read_ledger(path)
        assert set(loaded) == set(ledger)
        for key in ledger:
            assert np.allclose(loaded[key].attr_class_sum, ledger[key].attr_class_sum)
        storage.write_ledger(loaded, tmp_path / "ledger2.jsonl")
        assert path.read_bytes() == (tmp_path / "ledger2.jsonl").read_bytes()


class TestAnomalyRecords:
    def test_round_trip(self, tmp_path):
        records = [pipeline.AnomalyRecord(
            record_id="est-a.E1.3.2021-03-15", estate_id="est-a",
            elevator_id="E1", floor=3, r1_score=0.71, r2_score=0.66,
            feature_r1=[float(i) for i in range(13)],
            feature_r2=[float(i) / 81 for i in range(81)],
            window_end=END, status="open")]
        path = tmp_path / "anomalies.jsonl"
        storage.write_records(records, path)
        loaded = storage.read_records(path)
        assert loaded == records


class TestReviewLabel:
    def test_validation(self):
        storage.ReviewLabel("r1", "no_hazard", "decoration").validate()
        with pytest.raises(DataError):
            storage.ReviewLabel("r1", "maybe", "decoration").validate()
        with pytest.raises(DataError):
            storage.ReviewLabel("r1", "no_hazard", "bad_reason").validate()
        with pytest.raises(DataError):
            storage.ReviewLabel("r1", "no_hazard", "decoration",
                                exclusion_scope="city").validate()

    @pytest.mark.parametrize("verdict,reason,expected", [
        ("no_hazard", "decoration", True),
        ("no_hazard", "office_building", True),
        ("data_exception", "sensor_malfunction", True),
        ("suspected_hazard", "overcrowded_residence", False),
        ("suspected_hazard", "office_building", False),
        ("no_hazard", "needs_property_manager_check", False),
        ("no_hazard", "overcrowded_residence", False),
        ("no_hazard", "catering_in_apartment", False),
        ("data_exception", "dormitory_hotel", True),
        ("no_hazard", "shopping_entertainment", True),
    ])
    def test_exclusion_rule_matrix(self, verdict, reason, expected):
        label = storage.ReviewLabel("r1", verdict, reason)
        assert label.creates_exclusion is expected


def _record(estate="est-a", elevator="E1", floor=3):
    return pipeline.AnomalyRecord(
        record_id=f"{estate}.{elevator}.{floor}.2021-03-15",
        estate_id=estate, elevator_id=elevator, floor=floor,
        r1_score=0.7, r2_score=0.65, feature_r1=[0.0] * 13,
        feature_r2=[0.0] * 81, window_end=END)


class TestReviewStore:
    def test_label_then_duplicate(self, tmp_path):
        store = storage.ReviewStore(tmp_path)
        label = storage.ReviewLabel(_record().record_id, "suspected_hazard",
                                    "needs_property_manager_check")
        assert store.add_label(label, _record()) is None
        with pytest.raises(storage.DuplicateLabelError):
            store.add_label(storage.ReviewLabel(
                _record().record_id, "no_hazard", "decoration"), _record())

    def test_label_creates_floor_exclusion(self, tmp_path):
        store = storage.ReviewStore(tmp_path)
        rec = _record()
        entry = store.add_label(storage.ReviewLabel(
            rec.record_id, "no_hazard", "office_building"), rec)
        assert entry is not None
        assert entry.matches(rec.key)
        assert not entry.matches(("est-a", "E1", 4))
        assert store.active_exclusions() == [entry]

    def test_estate_scope_exclusion(self, tmp_path):
        store = storage.ReviewStore(tmp_path)
        rec = _record()
        entry = store.add_label(storage.ReviewLabel(
            rec.record_id, "data_exception", "sensor_malfunction",
            exclusion_scope="estate"), rec)
        assert entry.elevator_id is None and entry.floor is None
        assert entry.matches(("est-a", "E2", 9))

    def test_hazard_label_creates_no_exclusion(self, tmp_path):
        store = storage.ReviewStore(tmp_path)
        rec = _record()
        entry = store.add_label(storage.ReviewLabel(
            rec.record_id, "suspected_hazard", "overcrowded_residence"), rec)
        assert entry is None
        assert store.active_exclusions() == []

    def test_replay_restores_state(self, tmp_path):
        store = storage.ReviewStore(tmp_path)
        rec = _record()
        store.add_label(storage.ReviewLabel(
            rec.record_id, "no_hazard", "decoration"), rec)
        store.add_exclusion("est-z", None, None, "dormitory_hotel")
        reopened = storage.ReviewStore(tmp_path)
        assert set(reopened.labels) == {rec.record_id}
        assert len(reopened.active_exclusions()) == 2
        # id counter continues past replayed entries
        fresh = reopened.add_exclusion("est-q", "E1", 1, "decoration")
        assert fresh.entry_id not in {e.entry_id for e in store.exclusions.values()}

    def test_tombstone_survives_restart(self, tmp_path):
        store = storage.ReviewStore(tmp_path)
        entry = store.add_exclusion("est-z", "E1", 2, "decoration")
        assert store.delete_exclusion(entry.entry_id) is True
        assert store.delete_exclusion(entry.entry_id) is False
        assert store.delete_exclusion("x-999999") is False
        reopened = storage.ReviewStore(tmp_path)
        assert reopened.active_exclusions() == []
        assert reopened.exclusions[entry.entry_id].deleted

    def test_journal_readable_by_pipeline_loader(self, tmp_path):
        store = storage.ReviewStore(tmp_path)
        keep = store.add_exclusion("est-z", "E1", 2, "decoration")
        gone = store.add_exclusion("est-y", None, None, "office_building")
        store.delete_exclusion(gone.entry_id)
        entries = storage.read_exclusions_journal(tmp_path / "exclusions.jsonl")
        by_id = {e.entry_id: e for e in entries}
        assert not by_id[keep.entry_id].deleted
        assert by_id[gone.entry_id].deleted

    def test_torn_final_line_dropped(self, tmp_path):
        store = storage.ReviewStore(tmp_path)
        rec = _record()
        store.add_label(storage.ReviewLabel(
            rec.record_id, "no_hazard", "decoration"), rec)
        # simulate a crash mid-append: trailing partial line
        with open(tmp_path / "reviews.jsonl", "a") as f:
            f.write('{"record_id": "half')
        reopened = storage.ReviewStore(tmp_path)
        assert set(reopened.labels) == {rec.record_id}

    def test_mid_journal_corruption_raises(self, tmp_path):
        store = storage.ReviewStore(tmp_path)
        store.add_exclusion("est-z", "E1", 2, "decoration")
        path = tmp_path / "exclusions.jsonl"
        good = path.read_text()
        path.write_text("@@@corrupt@@@\n" + good)
        with pytest.raises(DataError, match="line 1"):
            storage.ReviewStore(tmp_path)
