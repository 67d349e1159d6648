"""Smart-meter pipeline, synthetic data generation, and the annual loop."""

from .meters import (
    CleanParams,
    LoadProfile,
    MeterSeries,
    SeriesRejected,
    FLAG_MISSING,
    FLAG_OK,
    FLAG_OUTLIER,
    FLAG_REPAIRED,
    HOURS_PER_YEAR,
    aggregate_to_transformer,
    clean_series,
    ingest_meters,
    write_meters_csv,
)
from .synth import SynthParams, synth_feeder
from .annual import (
    AnnualOptions,
    AnnualResult,
    TapEvent,
    run_year,
    summarize_voltages,
    write_results,
)

__all__ = [
    "CleanParams", "LoadProfile", "MeterSeries", "SeriesRejected",
    "FLAG_MISSING", "FLAG_OK", "FLAG_OUTLIER", "FLAG_REPAIRED",
    "HOURS_PER_YEAR", "aggregate_to_transformer", "clean_series",
    "ingest_meters", "write_meters_csv",
    "SynthParams", "synth_feeder",
    "AnnualOptions", "AnnualResult", "TapEvent", "run_year",
    "summarize_voltages", "write_results",
]
