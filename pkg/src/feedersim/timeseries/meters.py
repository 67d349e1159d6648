"""Meter ingestion, cleaning, and privacy-preserving aggregation.

Meter CSVs carry one row per meter-hour with the header
``timestamp_iso8601,meter_id,kwh``.  Hourly energies over one calendar
year approximate average hourly demand (constant within the interval),
so aggregation to a load point is a plain per-hour sum with reactive
power attached from a per-customer power-factor draw.
"""

from __future__ import annotations

import calendar
import hashlib
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

HOURS_PER_YEAR = 8760

FLAG_OK = 0
FLAG_MISSING = 1
FLAG_REPAIRED = 2
FLAG_OUTLIER = 3
FLAG_NAMES = {0: "ok", 1: "missing", 2: "repaired", 3: "outlier"}

PF_LOW, PF_HIGH = 0.90, 0.95


class SeriesRejected(ValueError):
    """A meter series is too damaged to repair."""


class MeterFormatError(ValueError):
    """The meter CSV violates the declared schema."""


@dataclass
class MeterSeries:
    """One meter's hourly energy for one calendar year."""

    meter_id: str
    year: int
    kwh: np.ndarray                 # (8760,) float, NaN where missing
    flags: np.ndarray               # (8760,) int8 FLAG_* codes

    def __post_init__(self) -> None:
        if len(self.kwh) != HOURS_PER_YEAR or len(self.flags) != HOURS_PER_YEAR:
            raise ValueError(
                f"meter {self.meter_id}: series must cover {HOURS_PER_YEAR} hours"
            )
        ok = self.flags == FLAG_OK
        if np.any(self.kwh[ok] < 0) or np.any(~np.isfinite(self.kwh[ok])):
            raise ValueError(
                f"meter {self.meter_id}: ok-flagged samples must be finite and >= 0"
            )

    def missing_fraction(self) -> float:
        return float(np.mean(self.flags == FLAG_MISSING))


@dataclass
class LoadProfile:
    """Aggregated hourly demand of one load point (per-meter data stays inside)."""

    load_point: str
    p_kw: np.ndarray               # (8760,)
    q_kvar: np.ndarray             # (8760,)
    provenance: str                # aggregated-real | synthetic
    pf_by_customer: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CleanParams:
    k_mad: float = 6.0
    window_hours: int = 168
    max_interp_gap: int = 3
    max_missing_frac: float = 0.5
    # floors keep MAD-zero (flat or smoothly trending) series stable: a
    # deviation must exceed both an absolute and a scale-relative minimum
    abs_floor_kwh: float = 0.01
    rel_floor_frac: float = 0.05


def _year_hours(year: int) -> pd.DatetimeIndex:
    if calendar.isleap(year):
        raise MeterFormatError(f"leap year {year} not supported (8760-hour calendar)")
    return pd.date_range(f"{year}-01-01", periods=HOURS_PER_YEAR, freq="h")


def ingest_meters(path) -> dict[str, MeterSeries]:
    """Read a meter CSV into per-meter year series with quality flags.

    Missing hours are flagged missing, negative energies are flagged
    outlier, duplicate (meter, hour) rows and out-of-order timestamps
    are rejected.
    """
    frame = pd.read_csv(path, dtype={"meter_id": str})
    expected = ["timestamp_iso8601", "meter_id", "kwh"]
    if list(frame.columns) != expected:
        raise MeterFormatError(
            f"meter CSV columns must be {expected}, got {list(frame.columns)}"
        )
    if frame.empty:
        raise MeterFormatError("meter CSV has no rows")
    try:
        stamps = pd.to_datetime(frame["timestamp_iso8601"], format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise MeterFormatError(f"bad timestamp: {exc}") from None
    frame = frame.assign(_ts=stamps)
    year = int(stamps.dt.year.min())
    index = _year_hours(year)
    hour_of = pd.Series(np.arange(HOURS_PER_YEAR), index=index)

    out: dict[str, MeterSeries] = {}
    for meter_id, group in frame.groupby("meter_id", sort=True):
        ts = group["_ts"]
        if not ts.is_monotonic_increasing:
            raise MeterFormatError(f"meter {meter_id}: timestamps not monotonic")
        if ts.duplicated().any():
            first_dup = ts[ts.duplicated()].iloc[0]
            raise MeterFormatError(
                f"meter {meter_id}: duplicate sample at {first_dup.isoformat()}"
            )
        try:
            hours = hour_of.loc[ts].to_numpy()
        except KeyError:
            bad = [t.isoformat() for t in ts if t not in hour_of.index][:3]
            raise MeterFormatError(
                f"meter {meter_id}: timestamps outside {year} hourly grid: {bad}"
            ) from None
        kwh = np.full(HOURS_PER_YEAR, np.nan)
        flags = np.full(HOURS_PER_YEAR, FLAG_MISSING, dtype=np.int8)
        values = group["kwh"].to_numpy(dtype=float)
        kwh[hours] = values
        flags[hours] = FLAG_OK
        bad = hours[(~np.isfinite(values)) | (values < 0)]
        flags[bad] = FLAG_OUTLIER
        out[meter_id] = MeterSeries(meter_id, year, kwh, flags)
    return out


def write_meters_csv(meters: dict[str, MeterSeries], path) -> None:
    """Write series back out in the ingestion schema (ok samples only)."""
    frames = []
    for meter_id in sorted(meters):
        s = meters[meter_id]
        index = _year_hours(s.year)
        keep = s.flags != FLAG_MISSING
        frames.append(
            pd.DataFrame(
                {
                    "timestamp_iso8601": index[keep].strftime("%Y-%m-%dT%H:%M:%S"),
                    "meter_id": meter_id,
                    "kwh": s.kwh[keep],
                }
            )
        )
    pd.concat(frames, ignore_index=True).to_csv(path, index=False, float_format="%.6f")


def clean_series(s: MeterSeries, params: CleanParams | None = None) -> MeterSeries:
    """Repair gross errors and gaps in one meter series.

    Outliers are samples farther than k MAD units from a centered
    rolling median of the series (MAD taken over the residuals); they
    and pre-flagged bad samples are re-filled.  Gaps up to
    max_interp_gap hours interpolate linearly; longer gaps fall back to
    the same-hour-of-week mean.  Cleaning a clean series is a no-op.
    """
    params = params or CleanParams()
    if s.missing_fraction() > params.max_missing_frac:
        raise SeriesRejected(
            f"meter {s.meter_id}: {s.missing_fraction():.0%} of samples missing "
            f"(limit {params.max_missing_frac:.0%})"
        )
    kwh = s.kwh.copy()
    flags = s.flags.copy()

    usable = np.isfinite(kwh) & (flags != FLAG_OUTLIER)
    series = pd.Series(np.where(usable, kwh, np.nan))
    rolling = series.rolling(params.window_hours, center=True, min_periods=12).median()
    resid = (series - rolling).to_numpy()
    valid = np.isfinite(resid)
    if valid.any():
        med = np.nanmedian(resid[valid])
        mad = np.nanmedian(np.abs(resid[valid] - med))
        scale = float(np.nanmedian(np.abs(series)))
        threshold = max(params.k_mad * mad, params.abs_floor_kwh,
                        params.rel_floor_frac * scale)
        outliers = valid & (np.abs(resid) > threshold) & (flags == FLAG_OK)
        flags[outliers] = FLAG_OUTLIER

    bad = (flags == FLAG_MISSING) | (flags == FLAG_OUTLIER) | ~np.isfinite(kwh)
    if bad.any():
        kwh = _fill_gaps(kwh, flags, bad, params)
    return MeterSeries(s.meter_id, s.year, kwh, flags)


def _fill_gaps(kwh: np.ndarray, flags: np.ndarray, bad: np.ndarray,
               params: CleanParams) -> np.ndarray:
    """Fill flagged samples in place of the repair policy; updates flags."""
    n = len(kwh)
    good = ~bad
    filled = kwh.copy()
    filled[bad] = np.nan

    # same-hour-of-week means as the long-gap fallback
    week_slot = np.arange(n) % params.window_hours
    slot_means = np.full(params.window_hours, np.nan)
    for slot in range(params.window_hours):
        vals = filled[(week_slot == slot) & good]
        if len(vals):
            slot_means[slot] = vals.mean()
    overall = np.nanmean(filled[good]) if good.any() else 0.0
    slot_means = np.where(np.isfinite(slot_means), slot_means, overall)

    # enumerate contiguous bad runs
    idx = np.flatnonzero(bad)
    runs: list[tuple[int, int]] = []
    start = idx[0]
    prev = idx[0]
    for i in idx[1:]:
        if i != prev + 1:
            runs.append((start, prev))
            start = i
        prev = i
    runs.append((start, prev))

    for lo, hi in runs:
        gap = hi - lo + 1
        left = lo - 1 if lo > 0 else None
        right = hi + 1 if hi < n - 1 else None
        interpolable = (
            gap <= params.max_interp_gap and left is not None and right is not None
            and good[left] and good[right]
        )
        if interpolable:
            span = np.linspace(filled[left], filled[right], gap + 2)[1:-1]
            filled[lo:hi + 1] = span
        else:
            filled[lo:hi + 1] = slot_means[week_slot[lo:hi + 1]]
        repaired = slice(lo, hi + 1)
        was_outlier = flags[repaired] == FLAG_OUTLIER
        flags[repaired] = np.where(was_outlier, FLAG_OUTLIER, FLAG_REPAIRED)
    return np.maximum(filled, 0.0)


def power_factor_for(meter_id: str, pf_seed: int) -> float:
    """Deterministic per-customer power factor, uniform in [0.90, 0.95].

    Keyed by (seed, meter id) through a stable hash so draws do not
    depend on iteration order or meter count.
    """
    digest = hashlib.sha256(meter_id.encode()).digest()
    words = [int.from_bytes(digest[i:i + 4], "big") for i in range(0, 16, 4)]
    rng = np.random.default_rng([pf_seed & 0xFFFFFFFF, *words])
    return float(rng.uniform(PF_LOW, PF_HIGH))


def aggregate_to_transformer(
    meters: dict[str, MeterSeries],
    customer_to_load_point: dict[str, str],
    pf_seed: int,
) -> dict[str, LoadProfile]:
    """Sum customers to their load points with per-customer reactive power.

    kWh over one-hour intervals equals average kW, so P is a direct sum;
    Q applies each customer's drawn power factor before summation.  The
    output never carries per-meter series.
    """
    unmapped = sorted(set(meters) - set(customer_to_load_point))
    if unmapped:
        raise KeyError(f"meters not mapped to a load point: {unmapped[:5]}")
    profiles: dict[str, LoadProfile] = {}
    for meter_id in sorted(meters):
        series = meters[meter_id]
        if not np.all(np.isfinite(series.kwh)):
            raise ValueError(
                f"meter {meter_id}: unrepaired gaps; run clean_series first"
            )
        lp_id = customer_to_load_point[meter_id]
        pf = power_factor_for(meter_id, pf_seed)
        q = series.kwh * np.tan(np.arccos(pf))
        prof = profiles.get(lp_id)
        if prof is None:
            profiles[lp_id] = LoadProfile(
                load_point=lp_id,
                p_kw=series.kwh.copy(),
                q_kvar=q,
                provenance="aggregated-real",
                pf_by_customer={meter_id: pf},
            )
        else:
            prof.p_kw += series.kwh
            prof.q_kvar += q
            prof.pf_by_customer[meter_id] = pf
    return profiles
