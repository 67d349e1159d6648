"""Year-long quasi-static simulation loop and result artifacts.

Hours are solved sequentially because tap state persists between them.
Each hour warm-starts from the previous hour's voltages, then the
regulator moves at most one step per phase per control pass until the
regulated bus settles inside the band (bounded passes per hour).

Result files (column orders frozen):
    annual_substation.csv   hour,p_kw,q_kvar,tap_a,tap_b,tap_c,
                            v_reg_a_120v,v_reg_b_120v,v_reg_c_120v,
                            converged,iterations
    voltage_summary.csv     bus,phase,feeder,v_min_pu,v_p25_pu,v_p50_pu,
                            v_p75_pu,v_max_pu,hist_lo_pu,hist_hi_pu,hist_counts
    tap_events.csv          hour,phase,old_tap,new_tap,trigger_v120
    mismatch_samples.csv    hour,bus,error_pct
    run_meta.json           reproducibility metadata
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..devices import PHASES, regulator_step
from ..model import NetworkModel
from ..solver import (
    MISMATCH_FLOOR_VA,
    SLACK_BUS_ID,
    CompiledNetwork,
    SolveOptions,
)
from .meters import HOURS_PER_YEAR, LoadProfile

REGULATOR_PASSES_PER_HOUR = 32
HIST_BINS = 32


@dataclass(frozen=True)
class AnnualOptions:
    tolerance: float = 1e-6
    max_iter: int = 100
    seed: int | None = None        # recorded in metadata only


@dataclass(frozen=True)
class TapEvent:
    hour: int
    phase: str
    old_tap: int
    new_tap: int
    trigger_v120: float


@dataclass
class AnnualResult:
    bus_ids: list[str]
    feeder_of: dict[str, str]
    phase_mask: np.ndarray
    hours: int
    substation_p_kw: np.ndarray      # (hours,)
    substation_q_kvar: np.ndarray
    taps: np.ndarray                 # (hours, 3) int8
    reg_v120: np.ndarray             # (hours, 3)
    converged: np.ndarray            # (hours,) bool
    iterations: np.ndarray           # (hours,) int16
    v_pu: np.ndarray                 # (hours, nbus, 3) float32
    tap_events: list[TapEvent]
    mismatch_bus_ids: list[str]
    mismatch_pct: np.ndarray         # (hours, n_load_buses) float32
    load_p_kw: np.ndarray            # (hours,) total specified load
    load_q_kvar: np.ndarray
    loss_p_kw: np.ndarray            # (hours,) series losses
    shunt_q_kvar: np.ndarray         # (hours,) shunt draw (negative = injection)
    balance_p_pu: np.ndarray         # (hours,) |P_in - P_load - P_loss| / S_base
    balance_q_pu: np.ndarray
    meta: dict = field(default_factory=dict)


def _feeder_labels(compiled: CompiledNetwork) -> dict[str, str]:
    """Group buses by the feeder-root subtree they hang from.

    Feeder roots are the children of the regulated bus (or of the source
    bus when there is no substation transformer); buses upstream of the
    roots are labeled 'substation'.
    """
    model = compiled.model
    if model.substation_transformer is not None:
        head = model.substation_transformer.to_bus
    else:
        head = model.source.bus
    children: dict[str, list[str]] = {}
    for br in compiled.branches:
        children.setdefault(br.from_bus, []).append(br.to_bus)
    labels: dict[str, str] = {b: "substation" for b in compiled.bus_ids}

    def tag(bus: str, label: str) -> None:
        stack = [bus]
        while stack:
            cur = stack.pop()
            labels[cur] = label
            stack.extend(children.get(cur, ()))

    for root in children.get(head, ()):
        tag(root, root)
    return labels


def run_year(
    model: NetworkModel,
    profiles: dict[str, LoadProfile],
    opts: AnnualOptions | None = None,
) -> AnnualResult:
    """Sequential hourly loop: set loads, solve, settle taps, record."""
    opts = opts or AnnualOptions()
    solve_opts = SolveOptions(tolerance=opts.tolerance, max_iter=opts.max_iter)
    compiled = CompiledNetwork(model)

    missing = [lp for lp in compiled.lp_ids if lp not in profiles]
    if missing:
        raise KeyError(f"profiles missing for load points: {missing[:5]}")
    for lp_id in compiled.lp_ids:
        prof = profiles[lp_id]
        if len(prof.p_kw) != HOURS_PER_YEAR:
            raise ValueError(f"profile {lp_id}: expected {HOURS_PER_YEAR} hours")

    nlp = len(compiled.lp_ids)
    p_all = np.zeros((nlp, HOURS_PER_YEAR))
    q_all = np.zeros((nlp, HOURS_PER_YEAR))
    for k, lp_id in enumerate(compiled.lp_ids):
        p_all[k] = profiles[lp_id].p_kw
        q_all[k] = profiles[lp_id].q_kvar

    hours = HOURS_PER_YEAR
    nbus = compiled.nbus
    res = AnnualResult(
        bus_ids=list(compiled.bus_ids),
        feeder_of=_feeder_labels(compiled),
        phase_mask=compiled.phase_mask.copy(),
        hours=hours,
        substation_p_kw=np.zeros(hours),
        substation_q_kvar=np.zeros(hours),
        taps=np.zeros((hours, 3), dtype=np.int8),
        reg_v120=np.zeros((hours, 3)),
        converged=np.zeros(hours, dtype=bool),
        iterations=np.zeros(hours, dtype=np.int16),
        v_pu=np.zeros((hours, nbus, 3), dtype=np.float32),
        tap_events=[],
        mismatch_bus_ids=[],
        mismatch_pct=np.zeros((hours, 0), dtype=np.float32),
        load_p_kw=np.zeros(hours),
        load_q_kvar=np.zeros(hours),
        loss_p_kw=np.zeros(hours),
        shunt_q_kvar=np.zeros(hours),
        balance_p_pu=np.zeros(hours),
        balance_q_pu=np.zeros(hours),
    )

    load_buses = (
        np.unique(compiled.lp_bus) if nlp else np.zeros(0, dtype=int)
    )
    res.mismatch_bus_ids = [compiled.bus_ids[i] for i in load_buses]
    res.mismatch_pct = np.zeros((hours, len(load_buses)), dtype=np.float32)

    reg_state = compiled.regulator
    v_warm: np.ndarray | None = None
    for h in range(hours):
        s_lp = (p_all[:, h] + 1j * q_all[:, h])[:, None] * compiled.lp_weights * 1000.0
        v, i_ser, iters, converged, _, diags = compiled.sweep(s_lp, v_warm, solve_opts)
        total_iters = iters

        # taps hold through a non-converged hour; acting on a bad solution
        # would move the regulator on garbage voltages
        if reg_state is not None and converged:
            last_direction = np.zeros(3, dtype=int)
            for _ in range(REGULATOR_PASSES_PER_HOUR):
                v120 = compiled.regulated_v120(v)
                new_state, moves = regulator_step(reg_state, v120)
                if not moves:
                    break
                hunting = any(
                    last_direction[PHASES.index(mv.phase)] * (mv.new_tap - mv.old_tap) < 0
                    for mv in moves
                )
                if hunting:
                    break
                for mv in moves:
                    last_direction[PHASES.index(mv.phase)] = mv.new_tap - mv.old_tap
                    res.tap_events.append(TapEvent(
                        h, mv.phase, mv.old_tap, mv.new_tap, mv.trigger_v120
                    ))
                reg_state = new_state
                compiled.set_taps(reg_state.taps)
                v, i_ser, iters, converged, _, diags = compiled.sweep(
                    s_lp, v, solve_opts
                )
                total_iters += iters
        if reg_state is not None:
            res.taps[h] = reg_state.taps
            res.reg_v120[h] = compiled.regulated_v120(v)

        # a failed hour leaves a poisoned iterate; restart flat next hour
        v_warm = v if converged else None
        res.converged[h] = converged
        res.iterations[h] = min(total_iters, np.iinfo(np.int16).max)
        with np.errstate(invalid="ignore"):
            safe = np.where(compiled.v_base > 0, compiled.v_base, 1.0)
            res.v_pu[h] = (np.abs(v) / safe).astype(np.float32)

        s_slack = compiled.slack_power_va(v, i_ser)
        res.substation_p_kw[h] = s_slack.real / 1000.0
        res.substation_q_kvar[h] = s_slack.imag / 1000.0
        s_load = complex(np.sum(s_lp))
        res.load_p_kw[h] = s_load.real / 1000.0
        res.load_q_kvar[h] = s_load.imag / 1000.0
        s_loss = compiled.branch_losses_va(v, i_ser)
        s_shunt = compiled.shunt_draw_va(v)
        res.loss_p_kw[h] = s_loss.real / 1000.0
        res.shunt_q_kvar[h] = s_shunt.imag / 1000.0
        res.balance_p_pu[h] = abs(
            s_slack.real - s_load.real - s_loss.real - s_shunt.real
        ) / compiled.s_base_va
        res.balance_q_pu[h] = abs(
            s_slack.imag - s_load.imag - s_loss.imag - s_shunt.imag
        ) / compiled.s_base_va

        if len(load_buses):
            res.mismatch_pct[h] = _mismatch_row(compiled, v, i_ser, s_lp, load_buses)

    res.meta = {
        "feedersim_version": __version__,
        "model_name": model.name,
        "hours": hours,
        "tolerance": opts.tolerance,
        "max_iter": opts.max_iter,
        "seed": opts.seed,
        "initial_taps": list(compiled.regulator.taps) if compiled.regulator else None,
        "final_taps": list(reg_state.taps) if reg_state is not None else None,
        "nonconverged_hours": int(np.sum(~res.converged)),
        "tap_event_count": len(res.tap_events),
        "mismatch_floor_va": MISMATCH_FLOOR_VA,
    }
    return res


def _mismatch_row(
    compiled: CompiledNetwork,
    v: np.ndarray,
    i_ser: np.ndarray,
    s_lp: np.ndarray,
    load_buses: np.ndarray,
) -> np.ndarray:
    net_in = np.zeros((compiled.nbus, 3), dtype=complex)
    np.add.at(net_in, compiled.to_idx, i_ser)
    i_par = compiled.parent_side_currents(i_ser)
    np.subtract.at(net_in, compiled.from_idx, i_par)
    s_calc = np.sum(v * np.conj(net_in), axis=1)
    s_spec = np.zeros(compiled.nbus, dtype=complex)
    np.add.at(s_spec, compiled.lp_bus, np.sum(s_lp, axis=1))
    shunt = np.sum(v * np.conj(np.einsum("bij,bj->bi", compiled.y_shunt, v)), axis=1)
    s_spec = s_spec + shunt
    err = (
        np.abs(s_calc[load_buses] - s_spec[load_buses])
        / np.maximum(np.abs(s_spec[load_buses]), MISMATCH_FLOOR_VA)
        * 100.0
    )
    return err.astype(np.float32)


def summarize_voltages(result: AnnualResult, feeder: str | None = None) -> list[dict]:
    """Per bus and phase: extremes, quartiles, and a fixed-bin histogram."""
    if feeder is not None and feeder not in set(result.feeder_of.values()):
        raise KeyError(f"unknown feeder {feeder!r}")
    rows: list[dict] = []
    for bi, bus in enumerate(result.bus_ids):
        if bus == SLACK_BUS_ID:
            continue
        label = result.feeder_of.get(bus, "substation")
        if feeder is not None and label != feeder:
            continue
        for pi, phase in enumerate(PHASES):
            if not result.phase_mask[bi, pi]:
                continue
            samples = result.v_pu[:, bi, pi].astype(float)
            lo, hi = float(samples.min()), float(samples.max())
            counts, _ = np.histogram(samples, bins=HIST_BINS, range=(lo, hi))
            q25, q50, q75 = np.percentile(samples, [25.0, 50.0, 75.0])
            rows.append({
                "bus": bus,
                "phase": phase,
                "feeder": label,
                "v_min_pu": lo,
                "v_p25_pu": float(q25),
                "v_p50_pu": float(q50),
                "v_p75_pu": float(q75),
                "v_max_pu": hi,
                "hist_lo_pu": lo,
                "hist_hi_pu": hi,
                "hist_counts": "|".join(str(c) for c in counts),
            })
    return rows


def write_results(result: AnnualResult, outdir,
                  feeder: str | None = None) -> dict[str, Path]:
    """Write the frozen result artifacts; returns the paths written.

    A feeder filter restricts voltage_summary.csv to one feeder's buses;
    the other artifacts are system-wide by definition.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    sub = outdir / "annual_substation.csv"
    with sub.open("w") as f:
        f.write("hour,p_kw,q_kvar,tap_a,tap_b,tap_c,"
                "v_reg_a_120v,v_reg_b_120v,v_reg_c_120v,converged,iterations\n")
        for h in range(result.hours):
            f.write(
                f"{h},{result.substation_p_kw[h]:.6f},{result.substation_q_kvar[h]:.6f},"
                f"{result.taps[h, 0]},{result.taps[h, 1]},{result.taps[h, 2]},"
                f"{result.reg_v120[h, 0]:.5f},{result.reg_v120[h, 1]:.5f},"
                f"{result.reg_v120[h, 2]:.5f},"
                f"{int(result.converged[h])},{result.iterations[h]}\n"
            )
    paths["annual_substation"] = sub

    vs = outdir / "voltage_summary.csv"
    with vs.open("w") as f:
        f.write("bus,phase,feeder,v_min_pu,v_p25_pu,v_p50_pu,v_p75_pu,v_max_pu,"
                "hist_lo_pu,hist_hi_pu,hist_counts\n")
        for row in summarize_voltages(result, feeder):
            f.write(
                f"{row['bus']},{row['phase']},{row['feeder']},"
                f"{row['v_min_pu']:.6f},{row['v_p25_pu']:.6f},{row['v_p50_pu']:.6f},"
                f"{row['v_p75_pu']:.6f},{row['v_max_pu']:.6f},"
                f"{row['hist_lo_pu']:.6f},{row['hist_hi_pu']:.6f},{row['hist_counts']}\n"
            )
    paths["voltage_summary"] = vs

    te = outdir / "tap_events.csv"
    with te.open("w") as f:
        f.write("hour,phase,old_tap,new_tap,trigger_v120\n")
        for ev in result.tap_events:
            f.write(f"{ev.hour},{ev.phase},{ev.old_tap},{ev.new_tap},"
                    f"{ev.trigger_v120:.5f}\n")
    paths["tap_events"] = te

    ms = outdir / "mismatch_samples.csv"
    with ms.open("w") as f:
        f.write("hour,bus,error_pct\n")
        for h in range(result.hours):
            row = result.mismatch_pct[h]
            for k, bus in enumerate(result.mismatch_bus_ids):
                f.write(f"{h},{bus},{row[k]:.6e}\n")
    paths["mismatch_samples"] = ms

    meta = outdir / "run_meta.json"
    meta.write_text(json.dumps(result.meta, indent=1, sort_keys=True) + "\n")
    paths["run_meta"] = meta
    return paths
