"""Figure rendering checks, including the secondary acceptance criteria.

Run with: pytest plots/ -v -s
The run-directory fixture invokes the feedersim CLI as a subprocess; the
renderer itself touches only the CSV artifacts.
"""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from render import (
    FigureSpec,
    RenderError,
    cdf_series,
    render,
    seasonal_weeks,
    tap_window,
    violin_rows,
)

KINDS = ("seasonal", "substation", "violins", "taps", "cdf")
PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    """A completed synthetic run produced through the public CLI."""
    base = tmp_path_factory.mktemp("plots_run")
    data = base / "data"
    out = base / "results"
    for args in (
        ["synth", "--seed", "13", "--nodes", "20", "--customers", "60",
         "-o", str(data)],
        ["run", "--model", str(data / "model.json"),
         "--meters", str(data / "meters.csv"), "--seed", "13", "-o", str(out)],
    ):
        proc = subprocess.run(
            [sys.executable, "-m", "feedersim.cli", *args],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture()
def step_fixture(tmp_path):
    """Hand-built run directory containing a clean 2 -> 3 tap raise."""
    hours = 8760
    taps = np.full(hours, 2, dtype=int)
    taps[4100:] = 3
    v = np.full(hours, 122.5)
    v[4095:4100] = 121.7      # sag that triggers the raise
    v[4100:] = 122.45
    frame = pd.DataFrame({
        "hour": np.arange(hours),
        "p_kw": np.full(hours, 500.0),
        "q_kvar": np.full(hours, 150.0),
        "tap_a": taps, "tap_b": taps, "tap_c": taps,
        "v_reg_a_120v": v, "v_reg_b_120v": v, "v_reg_c_120v": v,
        "converged": 1, "iterations": 3,
    })
    frame.loc[4090:4260, "p_kw"] = 900.0  # make it the peak week
    frame.to_csv(tmp_path / "annual_substation.csv", index=False)
    pd.DataFrame({
        "hour": [4100], "phase": ["A"], "old_tap": [2], "new_tap": [3],
        "trigger_v120": [121.7],
    }).to_csv(tmp_path / "tap_events.csv", index=False)
    return tmp_path


class TestAllKindsRender:
    @pytest.mark.parametrize("kind", KINDS)
    def test_renders_png(self, run_dir, tmp_path, kind):
        out = render(FigureSpec(kind=kind, indir=run_dir,
                                out=tmp_path / f"{kind}.png"))
        blob = out.read_bytes()
        assert blob[:8] == PNG_MAGIC
        assert len(blob) > 2000
        print(f"[PASS] figure kind {kind} rendered ({len(blob)} bytes)")

    def test_rerender_overwrites_only_target(self, run_dir, tmp_path):
        before = sorted(p.name for p in run_dir.iterdir())
        out = tmp_path / "cdf.png"
        render(FigureSpec(kind="cdf", indir=run_dir, out=out))
        first = out.read_bytes()
        render(FigureSpec(kind="cdf", indir=run_dir, out=out))
        assert out.read_bytes() == first  # deterministic for fixed inputs
        assert sorted(p.name for p in run_dir.iterdir()) == before


class TestCdfShape:
    def test_monotone_and_terminates_at_one(self, run_dir):
        mism = pd.read_csv(run_dir / "mismatch_samples.csv")
        err, prob = cdf_series(mism)
        assert np.all(np.diff(err) >= 0)
        assert np.all(np.diff(prob) > 0)
        assert prob[-1] == pytest.approx(1.0)
        assert prob[0] > 0
        print(f"[PASS] CDF monotone over {len(err)} samples, ends at 1.0")


class TestTapStrip:
    def test_step_two_to_three_visible(self, step_fixture, tmp_path):
        sub = pd.read_csv(step_fixture / "annual_substation.csv")
        window = tap_window(sub, week=None)  # defaults to the peak week
        series = window["tap_a"].to_numpy()
        assert set(np.unique(series)) == {2, 3}
        jumps = np.flatnonzero(np.diff(series) == 1)
        assert len(jumps) == 1
        out = render(FigureSpec(kind="taps", indir=step_fixture,
                                out=tmp_path / "taps.png"))
        assert out.read_bytes()[:8] == PNG_MAGIC
        print("[PASS] tap strip shows the 2 -> 3 step in the selected week")

    def test_explicit_week_selection(self, step_fixture, tmp_path):
        sub = pd.read_csv(step_fixture / "annual_substation.csv")
        window = tap_window(sub, week=0)
        assert set(window["tap_a"]) == {2}
        with pytest.raises(RenderError, match="week"):
            tap_window(sub, week=99)


class TestSelectors:
    def test_violin_rows_selected_feeder(self, run_dir):
        volts = pd.read_csv(run_dir / "voltage_summary.csv")
        rows = violin_rows(volts, feeder=None, phase="A")
        assert len(rows) > 0
        assert set(rows["phase"]) == {"A"}

    def test_unknown_feeder_is_an_error(self, run_dir, tmp_path):
        with pytest.raises(RenderError, match="feeder"):
            render(FigureSpec(kind="violins", indir=run_dir,
                              out=tmp_path / "v.png", feeder="nope"))

    def test_missing_column_named(self, run_dir, tmp_path):
        broken = tmp_path / "broken"
        broken.mkdir()
        sub = pd.read_csv(run_dir / "annual_substation.csv")
        sub.drop(columns=["q_kvar"]).to_csv(broken / "annual_substation.csv",
                                            index=False)
        with pytest.raises(RenderError, match="q_kvar"):
            render(FigureSpec(kind="substation", indir=broken,
                              out=tmp_path / "s.png"))

    def test_missing_file_named(self, tmp_path):
        with pytest.raises(RenderError, match="mismatch_samples.csv"):
            render(FigureSpec(kind="cdf", indir=tmp_path,
                              out=tmp_path / "c.png"))

    def test_seasonal_weeks_cover_four_seasons(self, run_dir):
        sub = pd.read_csv(run_dir / "annual_substation.csv")
        weeks = seasonal_weeks(sub)
        assert set(weeks) == {"winter", "spring", "summer", "fall"}
        assert all(len(w) == 168 for w in weeks.values())


class TestCli:
    def test_cli_round_trip(self, run_dir, tmp_path):
        out = tmp_path / "fig.png"
        proc = subprocess.run(
            [sys.executable, str(Path(__file__).parent / "render.py"),
             "--kind", "substation", "--in", str(run_dir), "--out", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.exists()

    def test_cli_error_exit(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, str(Path(__file__).parent / "render.py"),
             "--kind", "cdf", "--in", str(tmp_path), "--out",
             str(tmp_path / "x.png")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
        assert "mismatch_samples.csv" in proc.stderr
