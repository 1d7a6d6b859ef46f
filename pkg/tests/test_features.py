import datetime as dt

import numpy as np
import pytest

from liftflow import features
from liftflow.features import FloorDayAggregate

MON = dt.date(2021, 3, 1)  # a Monday


def agg(key, date, in_count=0, out_count=0, hours=None, tclass=None, tscore=None):
    estate, elevator, floor = key
    a = FloorDayAggregate(estate, elevator, floor, date,
                          in_count=in_count, out_count=out_count)
    if hours:
        for h, n in hours.items():
            a.hour_histogram[h] = n
    if tclass is not None:
        a.attr_class_sum = np.asarray(tclass, dtype=float)
    if tscore is not None:
        a.attr_score_sum = np.asarray(tscore, dtype=float)
    return a


def ledger_from(aggs):
    return {a.key: a for a in aggs}


def flat_ledger(key, flows, start=MON):
    """One aggregate per day with the given total flows, split in/out evenly."""
    out = []
    for i, f in enumerate(flows):
        date = start + dt.timedelta(days=i)
        out.append(agg(key, date, in_count=f // 2, out_count=f - f // 2,
                       hours={9: f}))
    return ledger_from(out)


KEY = ("e1", "E1", 3)


class TestWindowSelect:
    def test_fifteen_days_from_monday(self):
        view = features.window_select({}, MON + dt.timedelta(days=14), 15, [KEY])
        assert len(view.dates) == 15
        assert int(view.weekday_mask.sum()) == 11
        assert int((~view.weekday_mask).sum()) == 4

    def test_single_sunday_window(self):
        sunday = dt.date(2021, 3, 7)
        view = features.window_select({}, sunday, 1, [KEY])
        assert not view.weekday_mask.any()

    def test_absent_key_imputes_zero(self):
        view = features.window_select({}, MON + dt.timedelta(days=14), 15, [KEY])
        assert np.array_equal(view.flows[KEY], np.zeros(15))

    def test_empty_ledger_empty_result(self):
        view = features.window_select({}, MON, 15)
        assert view.keys == []

    def test_bad_window(self):
        with pytest.raises(ValueError, match="window_days"):
            features.window_select({}, MON, 0)


class TestBuildR1:
    def test_constant_flow_single_scope(self):
        led = flat_ledger(KEY, [10] * 15)
        view = features.window_select(led, MON + dt.timedelta(days=14), 15)
        r1 = features.build_r1(view, KEY)
        m1, m2, m3 = r1[0], r1[1], r1[2]
        s1, s2, s3 = r1[6], r1[7], r1[8]
        assert (m1, m2, m3) == (10, 10, 10)
        assert (s1, s2, s3) == (0, 0, 0)
        assert r1[12] == 3  # floor number

    def test_two_weekday_mean_std(self):
        # flows {8, 12} over a Mon-Tue window: m1 = 10, population s1 = 2
        led = flat_ledger(KEY, [8, 12])
        view = features.window_select(led, MON + dt.timedelta(days=1), 2)
        r1 = features.build_r1(view, KEY)
        assert r1[0] == pytest.approx(10.0)
        assert r1[6] == pytest.approx(2.0)

    def test_all_zero_traffic(self):
        view = features.window_select({}, MON + dt.timedelta(days=14), 15, [KEY])
        r1 = features.build_r1(view, KEY)
        assert np.array_equal(r1[:12], np.zeros(12))
        assert r1[12] == 3

    def test_scope_nesting_equalities(self):
        # several floors of one elevator: m2 == m3 (one elevator in the estate)
        keys = [("e1", "E1", f) for f in (1, 2, 3)]
        led = {}
        for i, k in enumerate(keys):
            led.update(flat_ledger(k, [4 + i] * 15))
        view = features.window_select(led, MON + dt.timedelta(days=14), 15)
        for k in keys:
            r1 = features.build_r1(view, k)
            assert r1[1] == pytest.approx(r1[2])  # m2 == m3
            assert r1[7] == pytest.approx(r1[8])  # s2 == s3

    def test_scale_equivariance(self):
        led1 = flat_ledger(KEY, [3, 7, 5, 9, 2])
        led3 = flat_ledger(KEY, [9, 21, 15, 27, 6])
        end = MON + dt.timedelta(days=4)
        v1 = features.window_select(led1, end, 5)
        v3 = features.window_select(led3, end, 5)
        a = features.build_r1(v1, KEY)
        b = features.build_r1(v3, KEY)
        assert np.allclose(b[:12], 3.0 * a[:12])
        assert b[12] == a[12]


class TestBuildR2:
    def test_single_passenger_slots(self):
        tclass = np.zeros(22)
        tclass[2] = 1  # slot 3 in 1-based naming
        a = agg(KEY, MON, in_count=1, hours={14: 1}, tclass=tclass,
                tscore=tclass * 0.9)
        view = features.window_select(ledger_from([a]), MON + dt.timedelta(days=14), 15)
        r1 = features.build_r1(view, KEY)
        r2 = features.build_r2(view, KEY, r1)
        assert len(r2) == 81
        assert r2[12] == 1  # Num
        t = r2[13:35]
        h = r2[57:81]
        assert t[2] == 1 and t.sum() == 1
        assert h[14] == 1 and h.sum() == 1  # hour bin 14 == h15 in 1-based layout

    def test_two_passenger_score_means(self):
        scores = np.zeros(22)
        scores[0] = 0.2 + 0.6
        tclass = np.zeros(22)
        tclass[0] = 1  # only the 0.6 observation clears the 0.5 class threshold
        a = agg(KEY, MON, in_count=2, hours={10: 2}, tclass=tclass, tscore=scores)
        view = features.window_select(ledger_from([a]), MON + dt.timedelta(days=14), 15)
        r2 = features.build_r2(view, KEY, features.build_r1(view, KEY))
        assert r2[35] == pytest.approx(0.4)  # ts1
        assert r2[13] == pytest.approx(0.5)  # t1

    def test_zero_traffic_all_zero(self):
        view = features.window_select({}, MON, 15, [KEY])
        r2 = features.build_r2(view, KEY, features.build_r1(view, KEY))
        assert np.array_equal(r2, np.zeros(81))

    def test_table_shape_with_large_count(self):
        # schema/shape check for a realistic row: Num=666, fractional t/ts/h
        rng = np.random.default_rng(0)
        aggs = []
        num = 0
        for i in range(15):
            n = 44 + (i % 3)
            num += n
            hours = rng.multinomial(n, np.full(24, 1 / 24))
            a = agg(KEY, MON + dt.timedelta(days=i), in_count=n,
                    tclass=rng.uniform(0, n, 22), tscore=rng.uniform(0, n, 22))
            a.hour_histogram = hours
            aggs.append(a)
        view = features.window_select(ledger_from(aggs), MON + dt.timedelta(days=14), 15)
        r2 = features.build_r2(view, KEY, features.build_r1(view, KEY))
        assert r2[12] == num
        assert np.all((r2[13:57] >= 0) & (r2[13:57] <= 1))
        assert r2[57:81].sum() == pytest.approx(1.0, abs=1e-9)

    def test_hour_histogram_normalized(self, desk_reconstruction):
        ledger, _ = desk_reconstruction
        end = dt.date(2021, 3, 15)
        view = features.window_select(ledger.aggregates, end, 15)
        for key in view.keys:
            r1 = features.build_r1(view, key)
            r2 = features.build_r2(view, key, r1)
            assert len(r1) == 13 and len(r2) == 81
            if r2[12] > 0:
                assert r2[57:81].sum() == pytest.approx(1.0, abs=1e-9)

    def test_layout_column_names(self):
        assert len(features.R1_COLUMNS) == 13
        assert len(features.R2_COLUMNS) == 81
        assert features.R2_COLUMNS[12] == "Num"
        assert features.R2_COLUMNS[13] == "t1"
        assert features.R2_COLUMNS[35] == "ts1"
        assert features.R2_COLUMNS[57] == "h1"
        assert features.R2_COLUMNS[80] == "h24"
