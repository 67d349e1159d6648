#!/usr/bin/env python3
"""Render figure analogues from a completed run directory.

Reads only the frozen result CSVs (annual_substation.csv,
voltage_summary.csv, tap_events.csv, mismatch_samples.csv) — no linkage
to the simulator itself — and writes one image per invocation.

Kinds:
    seasonal    one-week substation load profiles, one line per season
    substation  full-year substation P and Q
    violins     per-bus annual voltage distributions for one feeder/phase
    taps        tap positions and regulated voltage for one week
    cdf         cumulative distribution of the power-mismatch audit

Usage:
    python plots/render.py --kind cdf --in results/ --out cdf.png
    make -C plots all RUN_DIR=../results OUT_DIR=figs
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

HOURS_PER_WEEK = 168

SEASON_WEEK_STARTS = {
    # Monday-aligned weeks deep in each season (hour of year)
    "winter": 2 * HOURS_PER_WEEK,
    "spring": 15 * HOURS_PER_WEEK,
    "summer": 28 * HOURS_PER_WEEK,
    "fall": 41 * HOURS_PER_WEEK,
}


class RenderError(ValueError):
    """Missing inputs, missing columns, or an empty selection."""


@dataclass
class FigureSpec:
    kind: str
    indir: Path
    out: Path
    feeder: str | None = None
    phase: str = "A"
    week: int | None = None
    dpi: int = 150


def _read(indir: Path, name: str, columns: list[str]) -> pd.DataFrame:
    path = indir / name
    if not path.exists():
        raise RenderError(f"{path} not found")
    frame = pd.read_csv(path)
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise RenderError(f"{name}: missing columns {missing}")
    return frame


# -- data preparation (kept separate so tests can assert on the series) ---------


def seasonal_weeks(sub: pd.DataFrame) -> dict[str, np.ndarray]:
    out = {}
    p = sub["p_kw"].to_numpy() / 1000.0
    for season, start in SEASON_WEEK_STARTS.items():
        chunk = p[start:start + HOURS_PER_WEEK]
        if len(chunk) < HOURS_PER_WEEK:
            raise RenderError(f"run shorter than the {season} sample week")
        out[season] = chunk
    return out


def cdf_series(mismatch: pd.DataFrame) -> tuple[np.ndarray, np.ndarray]:
    err = np.sort(mismatch["error_pct"].to_numpy())
    if len(err) == 0:
        raise RenderError("mismatch_samples.csv has no rows")
    prob = np.arange(1, len(err) + 1) / len(err)
    return err, prob


def tap_window(sub: pd.DataFrame, week: int | None) -> pd.DataFrame:
    if week is None:
        week = int(sub["p_kw"].idxmax()) // HOURS_PER_WEEK
    lo = week * HOURS_PER_WEEK
    window = sub.iloc[lo:lo + HOURS_PER_WEEK]
    if window.empty:
        raise RenderError(f"week {week} outside the run")
    return window


def violin_rows(volts: pd.DataFrame, feeder: str | None, phase: str) -> pd.DataFrame:
    feeders = sorted(set(volts["feeder"]) - {"substation"})
    if not feeders:
        raise RenderError("voltage_summary.csv has no feeder rows")
    if feeder is None:
        feeder = feeders[0]
    rows = volts[(volts["feeder"] == feeder) & (volts["phase"] == phase)]
    if rows.empty:
        raise RenderError(f"no rows for feeder {feeder!r} phase {phase!r}")
    return rows.sort_values("bus").reset_index(drop=True)


# -- figure builders -------------------------------------------------------------


def _fig_seasonal(spec: FigureSpec):
    sub = _read(spec.indir, "annual_substation.csv", ["p_kw"])
    weeks = seasonal_weeks(sub)
    fig, ax = plt.subplots(figsize=(8, 4))
    hours = np.arange(HOURS_PER_WEEK)
    for season, series in weeks.items():
        ax.plot(hours, series, label=season, linewidth=1.0)
    ax.set_xlabel("hour of week")
    ax.set_ylabel("substation P [MW]")
    ax.set_title("one-week substation load by season")
    ax.set_xlim(0, HOURS_PER_WEEK - 1)
    ax.legend(ncol=4, fontsize=8)
    ax.grid(alpha=0.3)
    return fig


def _fig_substation(spec: FigureSpec):
    sub = _read(spec.indir, "annual_substation.csv", ["hour", "p_kw", "q_kvar"])
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(sub["hour"], sub["p_kw"] / 1000.0, linewidth=0.4, label="P [MW]")
    ax.plot(sub["hour"], sub["q_kvar"] / 1000.0, linewidth=0.4, label="Q [Mvar]")
    ax.set_xlabel("hour of year")
    ax.set_ylabel("substation power")
    ax.set_title("annual substation real and reactive power")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return fig


def _fig_violins(spec: FigureSpec):
    volts = _read(spec.indir, "voltage_summary.csv",
                  ["bus", "phase", "feeder", "v_min_pu", "v_p25_pu", "v_p50_pu",
                   "v_p75_pu", "v_max_pu", "hist_lo_pu", "hist_hi_pu",
                   "hist_counts"])
    rows = violin_rows(volts, spec.feeder, spec.phase)
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(rows)), 4))
    for i, row in rows.iterrows():
        counts = np.array([int(c) for c in str(row["hist_counts"]).split("|")],
                          dtype=float)
        lo, hi = row["hist_lo_pu"], row["hist_hi_pu"]
        if hi <= lo or counts.sum() == 0:
            # a degenerate (constant) distribution collapses to a tick
            ax.plot([i], [row["v_p50_pu"]], marker="_", color="C0")
            continue
        centers = np.linspace(lo, hi, len(counts))
        half = 0.42 * counts / counts.max()
        ax.fill_betweenx(centers, i - half, i + half, color="C0", alpha=0.6,
                         linewidth=0)
        ax.plot([i, i], [row["v_p25_pu"], row["v_p75_pu"]], color="k",
                linewidth=1.2)
        ax.plot([i], [row["v_p50_pu"]], marker="o", color="w", markersize=2,
                zorder=3)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(rows["bus"], rotation=90, fontsize=6)
    ax.set_ylabel("voltage [p.u.]")
    feeder = spec.feeder or rows["feeder"].iloc[0]
    ax.set_title(f"annual nodal voltages, feeder {feeder}, phase {spec.phase}")
    ax.grid(alpha=0.3, axis="y")
    return fig


def _fig_taps(spec: FigureSpec):
    sub = _read(spec.indir, "annual_substation.csv",
                ["hour", "p_kw", "tap_a", "tap_b", "tap_c",
                 "v_reg_a_120v", "v_reg_b_120v", "v_reg_c_120v"])
    window = tap_window(sub, spec.week)
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    for ax, phase in zip(axes, "abc"):
        hours = window["hour"]
        ax.step(hours, window[f"tap_{phase}"], where="post", color="C1",
                label="tap")
        ax.set_ylabel(f"tap {phase.upper()}")
        twin = ax.twinx()
        twin.plot(hours, window[f"v_reg_{phase}_120v"], color="C0",
                  linewidth=0.8, label="voltage")
        twin.set_ylabel("V (120 V base)")
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("hour of year")
    axes[0].set_title("tap positions and regulated voltage")
    return fig


def _fig_cdf(spec: FigureSpec):
    mism = _read(spec.indir, "mismatch_samples.csv", ["error_pct"])
    err, prob = cdf_series(mism)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(err, prob, linewidth=1.2)
    ax.set_xlabel("bus power mismatch [%]")
    ax.set_ylabel("cumulative probability")
    ax.set_ylim(0.0, 1.02)
    ax.set_title("power-flow solution error CDF")
    ax.grid(alpha=0.3)
    if err[-1] > 0 and err[0] >= 0:
        positive = err[err > 0]
        if len(positive) and positive[0] < err[-1] / 1e3:
            ax.set_xscale("symlog", linthresh=max(positive[0], 1e-12))
    return fig


_BUILDERS = {
    "seasonal": _fig_seasonal,
    "substation": _fig_substation,
    "violins": _fig_violins,
    "taps": _fig_taps,
    "cdf": _fig_cdf,
}


def render(spec: FigureSpec) -> Path:
    """Build one figure and write it to spec.out; returns the path."""
    if spec.kind not in _BUILDERS:
        raise RenderError(f"unknown figure kind {spec.kind!r}")
    fig = _BUILDERS[spec.kind](spec)
    spec.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out, dpi=spec.dpi)
    plt.close(fig)
    return spec.out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render result figures from feedersim CSV artifacts."
    )
    parser.add_argument("--kind", required=True, choices=sorted(_BUILDERS))
    parser.add_argument("--in", dest="indir", required=True,
                        help="run directory with the result CSVs")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--feeder", default=None,
                        help="feeder label for the violin figure")
    parser.add_argument("--phase", default="A", choices=list("ABC"))
    parser.add_argument("--week", type=int, default=None,
                        help="week-of-year for the tap strip (default: peak week)")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        indir=Path(args.indir),
        out=Path(args.out),
        feeder=args.feeder,
        phase=args.phase,
        week=args.week,
        dpi=args.dpi,
    )
    try:
        path = render(spec)
    except RenderError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
