"""Meter ingestion, cleaning recipe, and aggregation checks."""

import math

import numpy as np
import pandas as pd
import pytest

from feedersim.timeseries import meters as mt
from feedersim.timeseries.meters import (
    CleanParams,
    FLAG_MISSING,
    FLAG_OK,
    FLAG_OUTLIER,
    FLAG_REPAIRED,
    HOURS_PER_YEAR,
    MeterSeries,
    SeriesRejected,
    aggregate_to_transformer,
    clean_series,
    ingest_meters,
    power_factor_for,
    write_meters_csv,
)

YEAR = 2017
INDEX = pd.date_range("2017-01-01", periods=HOURS_PER_YEAR, freq="h")


def series_frame(meter_id: str, kwh: np.ndarray, drop_hours=(), stamp_index=None):
    idx = INDEX if stamp_index is None else stamp_index
    mask = np.ones(len(idx), dtype=bool)
    mask[list(drop_hours)] = False
    return pd.DataFrame({
        "timestamp_iso8601": idx[mask].strftime("%Y-%m-%dT%H:%M:%S"),
        "meter_id": meter_id,
        "kwh": kwh[mask],
    })


def write_csv(tmp_path, frames) -> str:
    path = tmp_path / "meters.csv"
    pd.concat(frames, ignore_index=True).to_csv(path, index=False)
    return str(path)


def flat_series(value=1.0) -> np.ndarray:
    return np.full(HOURS_PER_YEAR, value)


class TestIngest:
    def test_complete_series(self, tmp_path):
        path = write_csv(tmp_path, [series_frame("m1", flat_series())])
        out = ingest_meters(path)
        assert list(out) == ["m1"]
        s = out["m1"]
        assert np.all(s.flags == FLAG_OK)
        assert np.all(s.kwh == 1.0)
        assert s.year == YEAR

    def test_missing_hours_flagged(self, tmp_path):
        path = write_csv(tmp_path,
                         [series_frame("m1", flat_series(), drop_hours=(100, 101, 102))])
        s = ingest_meters(path)["m1"]
        assert list(np.flatnonzero(s.flags == FLAG_MISSING)) == [100, 101, 102]
        assert np.all(np.isnan(s.kwh[100:103]))

    def test_negative_kwh_flagged_outlier(self, tmp_path):
        kwh = flat_series()
        kwh[500] = -2.0
        path = write_csv(tmp_path, [series_frame("m1", kwh)])
        s = ingest_meters(path)["m1"]
        assert s.flags[500] == FLAG_OUTLIER

    def test_duplicate_sample_rejected(self, tmp_path):
        f = series_frame("m1", flat_series())
        dup = pd.concat([f, f.iloc[[10]]]).sort_values("timestamp_iso8601")
        path = tmp_path / "meters.csv"
        dup.to_csv(path, index=False)
        with pytest.raises(mt.MeterFormatError, match="duplicate"):
            ingest_meters(path)

    def test_non_monotonic_rejected(self, tmp_path):
        f = series_frame("m1", flat_series())
        shuffled = pd.concat([f.iloc[10:20], f.iloc[:10], f.iloc[20:]])
        path = tmp_path / "meters.csv"
        shuffled.to_csv(path, index=False)
        with pytest.raises(mt.MeterFormatError, match="monotonic"):
            ingest_meters(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "meters.csv"
        path.write_text("time,meter,kwh\n2017-01-01T00:00:00,m1,1.0\n")
        with pytest.raises(mt.MeterFormatError, match="columns"):
            ingest_meters(path)

    def test_leap_year_rejected(self, tmp_path):
        idx = pd.date_range("2020-01-01", periods=HOURS_PER_YEAR, freq="h")
        path = write_csv(tmp_path,
                         [series_frame("m1", flat_series(), stamp_index=idx)])
        with pytest.raises(mt.MeterFormatError, match="leap"):
            ingest_meters(path)

    def test_round_trip_through_writer(self, tmp_path):
        kwh = np.abs(np.sin(np.arange(HOURS_PER_YEAR) / 24.0)) + 0.25
        path1 = write_csv(tmp_path, [series_frame("m1", kwh)])
        first = ingest_meters(path1)
        path2 = tmp_path / "again.csv"
        write_meters_csv(first, path2)
        second = ingest_meters(path2)
        assert np.allclose(second["m1"].kwh, kwh, atol=1e-6)


def diurnal_series(rng=None) -> np.ndarray:
    hours = np.arange(HOURS_PER_YEAR)
    base = 1.0 + 0.5 * np.sin(2 * np.pi * hours / 24.0)
    if rng is not None:
        base = base * rng.uniform(0.95, 1.05, HOURS_PER_YEAR)
    return base


class TestCleaning:
    def test_clean_series_is_noop(self):
        s = MeterSeries("m1", YEAR, diurnal_series(),
                        np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8))
        out = clean_series(s)
        assert np.array_equal(out.kwh, s.kwh)
        assert np.all(out.flags == FLAG_OK)

    def test_idempotent_after_repair(self):
        kwh = diurnal_series()
        flags = np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8)
        kwh[50] = np.nan
        flags[50] = FLAG_MISSING
        once = clean_series(MeterSeries("m1", YEAR, kwh, flags))
        twice = clean_series(once)
        assert np.array_equal(once.kwh, twice.kwh)
        assert np.array_equal(once.flags, twice.flags)

    def test_spike_flagged_and_replaced(self):
        kwh = diurnal_series()
        spike_at = 2000
        kwh[spike_at] = 100.0 * np.median(kwh)
        s = MeterSeries("m1", YEAR, kwh,
                        np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8))
        out = clean_series(s)
        assert out.flags[spike_at] == FLAG_OUTLIER
        # direct MAD oracle: the spike exceeds k*MAD of the rolling residuals
        roll = pd.Series(kwh).rolling(168, center=True, min_periods=12).median()
        resid = (pd.Series(kwh) - roll).to_numpy()
        med = np.nanmedian(resid)
        mad = np.nanmedian(np.abs(resid - med))
        assert abs(resid[spike_at]) > 6.0 * mad
        # replacement interpolates between the clean neighbors
        expected = (kwh[spike_at - 1] + kwh[spike_at + 1]) / 2.0
        assert out.kwh[spike_at] == pytest.approx(expected, rel=1e-9)

    def test_short_gap_linear_interpolation(self):
        kwh = 1.0 + 0.001 * np.arange(HOURS_PER_YEAR)  # gentle ramp
        flags = np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8)
        left, right = kwh[1000], kwh[1003]
        kwh[1001] = np.nan
        kwh[1002] = np.nan
        flags[1001:1003] = FLAG_MISSING
        out = clean_series(MeterSeries("m1", YEAR, kwh, flags))
        assert out.kwh[1001] == pytest.approx(left + (right - left) / 3.0)
        assert out.kwh[1002] == pytest.approx(left + 2 * (right - left) / 3.0)
        assert np.all(out.flags[1001:1003] == FLAG_REPAIRED)
        assert np.all(out.flags[:1001] == FLAG_OK)

    def test_long_gap_same_hour_of_week_mean(self):
        kwh = diurnal_series()
        flags = np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8)
        lo, hi = 3000, 3006  # 7-hour gap, too long to interpolate
        kwh[lo:hi + 1] = np.nan
        flags[lo:hi + 1] = FLAG_MISSING
        out = clean_series(MeterSeries("m1", YEAR, kwh, flags))
        for h in range(lo, hi + 1):
            slot = h % 168
            peers = [kwh[i] for i in range(slot, HOURS_PER_YEAR, 168)
                     if not (lo <= i <= hi)]
            assert out.kwh[h] == pytest.approx(np.mean(peers), rel=1e-9)

    def test_rejects_mostly_missing(self):
        kwh = flat_series()
        flags = np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8)
        kwh[: HOURS_PER_YEAR // 2 + 200] = np.nan
        flags[: HOURS_PER_YEAR // 2 + 200] = FLAG_MISSING
        with pytest.raises(SeriesRejected, match="missing"):
            clean_series(MeterSeries("m1", YEAR, kwh, flags))

    def test_flat_series_not_flagged(self):
        # MAD is zero for constant data; the absolute floor keeps it stable
        s = MeterSeries("m1", YEAR, flat_series(0.8),
                        np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8))
        out = clean_series(s)
        assert np.all(out.flags == FLAG_OK)


class TestPowerFactors:
    def test_bounds(self):
        pfs = [power_factor_for(f"m{i:04d}", 11) for i in range(500)]
        assert all(0.90 <= pf <= 0.95 for pf in pfs)

    def test_deterministic_and_key_dependent(self):
        assert power_factor_for("m0001", 7) == power_factor_for("m0001", 7)
        assert power_factor_for("m0001", 7) != power_factor_for("m0001", 8)
        assert power_factor_for("m0001", 7) != power_factor_for("m0002", 7)

    def test_q_over_p_ratio_bounds(self):
        lo = math.tan(math.acos(0.95))
        hi = math.tan(math.acos(0.90))
        for i in range(200):
            pf = power_factor_for(f"c{i}", 3)
            ratio = math.tan(math.acos(pf))
            assert lo - 1e-12 <= ratio <= hi + 1e-12


def ok_series(meter_id: str, kwh: np.ndarray) -> MeterSeries:
    return MeterSeries(meter_id, YEAR, kwh.astype(float),
                       np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8))


class TestAggregation:
    def test_degenerate_pf_range_gives_exact_q(self, monkeypatch):
        monkeypatch.setattr(mt, "PF_LOW", 0.95)
        monkeypatch.setattr(mt, "PF_HIGH", 0.95)
        meters = {"m1": ok_series("m1", flat_series(10.0))}
        out = aggregate_to_transformer(meters, {"m1": "lp1"}, pf_seed=1)
        ratio = math.tan(math.acos(0.95))
        assert np.allclose(out["lp1"].q_kvar, 10.0 * ratio)
        assert out["lp1"].q_kvar[0] == pytest.approx(10.0 * 0.3286841051788632)

    def test_two_identical_customers_double(self):
        kwh = diurnal_series()
        meters = {"m1": ok_series("m1", kwh), "m2": ok_series("m2", kwh)}
        out = aggregate_to_transformer(meters, {"m1": "lp1", "m2": "lp1"}, 5)
        assert np.allclose(out["lp1"].p_kw, 2.0 * kwh)

    def test_kwh_to_kw_identity(self):
        kwh = diurnal_series()
        meters = {"m1": ok_series("m1", kwh)}
        out = aggregate_to_transformer(meters, {"m1": "lp1"}, 5)
        assert np.array_equal(out["lp1"].p_kw, kwh)

    def test_unmapped_meter_rejected(self):
        meters = {"m1": ok_series("m1", flat_series())}
        with pytest.raises(KeyError, match="m1"):
            aggregate_to_transformer(meters, {}, 5)

    def test_unrepaired_series_rejected(self):
        kwh = flat_series()
        kwh[5] = np.nan
        flags = np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8)
        flags[5] = FLAG_MISSING
        meters = {"m1": MeterSeries("m1", YEAR, kwh, flags)}
        with pytest.raises(ValueError, match="clean_series"):
            aggregate_to_transformer(meters, {"m1": "lp1"}, 5)

    def test_group_by_oracle(self, small_synth):
        model, meters = small_synth
        cust_map = {c: lp.id for lp in model.load_points for c in lp.customer_ids}
        out = aggregate_to_transformer(meters, cust_map, pf_seed=3)
        # independent pandas group-by of the same customer series
        rows = []
        for mid, s in meters.items():
            rows.append(pd.DataFrame({
                "lp": cust_map[mid], "hour": np.arange(HOURS_PER_YEAR),
                "kw": s.kwh,
            }))
        oracle = (
            pd.concat(rows).groupby(["lp", "hour"])["kw"].sum().unstack("hour")
        )
        for lp_id, prof in out.items():
            assert np.allclose(prof.p_kw, oracle.loc[lp_id].to_numpy(), rtol=1e-12)

    def test_provenance_and_pf_record(self):
        meters = {"m1": ok_series("m1", flat_series())}
        out = aggregate_to_transformer(meters, {"m1": "lp1"}, 5)
        prof = out["lp1"]
        assert prof.provenance == "aggregated-real"
        assert set(prof.pf_by_customer) == {"m1"}
        pf = prof.pf_by_customer["m1"]
        assert np.allclose(prof.q_kvar, prof.p_kw * math.tan(math.acos(pf)))
