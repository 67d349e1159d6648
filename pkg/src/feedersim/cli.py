"""Command-line interface: validate, linecalc, solve, synth, run, report.

Exit codes: 0 success, 1 validation or report findings, 2 usage errors.
Diagnostics go to stderr; data goes to files or stdout only.  No
subcommand mutates its inputs, and outputs land only under the
designated directory.

Config precedence for `run`: flags > --config file > defaults.  The
FEEDERSIM_THREADS environment variable caps any internal parallel
sections (the current pipeline is single-threaded; the value is
recorded in run metadata).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .devices import PHASES
from .linecalc import segment_matrices
from .model import ModelError, load_model, save_model, validate_radiality
from .solver import (
    SLACK_BUS_ID,
    CompiledNetwork,
    DeEnergizedLoadError,
    NonRadialError,
    SnapshotInput,
    SolveOptions,
    audit_mismatch,
    build_solution,
)
from .timeseries import (
    AnnualOptions,
    SynthParams,
    aggregate_to_transformer,
    clean_series,
    ingest_meters,
    run_year,
    synth_feeder,
    write_meters_csv,
    write_results,
)
from .timeseries.annual import _feeder_labels

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2


@dataclass
class RunConfig:
    model: str | None = None
    meters: str | None = None
    seed: int = 1
    tolerance: float = 1e-6
    max_iter: int = 100
    out: str | None = None
    feeder: str | None = None


def _err(msg: str) -> None:
    print(f"feedersim: {msg}", file=sys.stderr)


def max_threads() -> int:
    """Upper bound for internal parallel sections (>=1)."""
    raw = os.environ.get("FEEDERSIM_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


# -- subcommands ------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        model = load_model(args.model)
    except ModelError as exc:
        _err(str(exc))
        return EXIT_FINDINGS
    report = validate_radiality(model)
    for entry in report.entries():
        print(entry)
    if not report.empty():
        return EXIT_FINDINGS
    print(f"ok: {len(model.buses)} buses, {len(model.segments)} segments, "
          f"{len(model.switches)} switches")
    return EXIT_OK


def cmd_linecalc(args) -> int:
    try:
        model = load_model(args.model)
        seg = model.segment(args.segment)
    except ModelError as exc:
        _err(str(exc))
        return EXIT_FINDINGS
    total = segment_matrices(seg, model)
    print(f"segment {seg.id}: {seg.construction}, {seg.length_miles} mi, "
          f"phases {seg.phases}")
    print("series impedance [ohm]:")
    print(np.array2string(total.z_abc, precision=6, suppress_small=True))
    print("shunt susceptance [S]:")
    print(np.array2string(total.shunt_b, precision=10, suppress_small=True))
    return EXIT_OK


def _profiles_from_meters(model, meters_path, seed):
    meters = ingest_meters(meters_path)
    meters = {mid: clean_series(s) for mid, s in meters.items()}
    cust_map = {}
    for lp in model.load_points:
        for cust in lp.customer_ids:
            cust_map[cust] = lp.id
    return aggregate_to_transformer(meters, cust_map, pf_seed=seed)


def cmd_solve(args) -> int:
    try:
        model = load_model(args.model)
        profiles = _profiles_from_meters(model, args.loads, args.seed)
        compiled = CompiledNetwork(model)
    except (ModelError, NonRadialError, DeEnergizedLoadError, ValueError, KeyError) as exc:
        _err(str(exc))
        return EXIT_FINDINGS
    hour = args.hour
    if not 0 <= hour < 8760:
        _err(f"hour {hour} outside 0..8759")
        return EXIT_USAGE
    nlp = len(compiled.lp_ids)
    s_lp = np.zeros((nlp, 3), dtype=complex)
    for k, lp_id in enumerate(compiled.lp_ids):
        prof = profiles.get(lp_id)
        if prof is None:
            continue
        s_lp[k] = (prof.p_kw[hour] + 1j * prof.q_kvar[hour]) * compiled.lp_weights[k] * 1000.0
    opts = SolveOptions(tolerance=args.tolerance, max_iter=args.max_iter)
    v, i_ser, iters, converged, max_dv, diags = compiled.sweep(s_lp, None, opts)
    sol = build_solution(compiled, v, i_ser, iters, converged, max_dv, diags)
    feeders = _feeder_labels(compiled)

    out = Path(args.out) if args.out else None
    lines = ["bus,phase,v_pu,angle_deg,feeder"]
    for bi, bus in enumerate(sol.bus_ids):
        if bus == SLACK_BUS_ID:
            continue
        for pi, ph in enumerate(PHASES):
            if not sol.phase_mask[bi, pi]:
                continue
            angle = float(np.angle(sol.v[bi, pi], deg=True))
            lines.append(
                f"{bus},{ph},{sol.v_pu[bi, pi]:.8f},{angle:.5f},{feeders[bus]}"
            )
    audit = audit_mismatch(sol, SnapshotInput(model), compiled=compiled, s_lp=s_lp)
    audit_lines = ["bus,error_pct"]
    for bus, err in zip(audit.bus_ids, audit.error_pct):
        audit_lines.append(f"{bus},{err:.6e}")

    if out is None:
        print("\n".join(lines))
        print("\n".join(audit_lines), file=sys.stderr)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / "solution.csv").write_text("\n".join(lines) + "\n")
        (out / "audit.csv").write_text("\n".join(audit_lines) + "\n")
    if not converged:
        for d in diags:
            _err(d)
        return EXIT_FINDINGS
    print(f"converged in {iters} iterations; substation "
          f"P={sol.substation_p_kw:.1f} kW Q={sol.substation_q_kvar:.1f} kvar",
          file=sys.stderr)
    return EXIT_OK


def cmd_synth(args) -> int:
    params = SynthParams(
        seed=args.seed,
        feeders=args.feeders,
        primary_nodes=args.nodes,
        customers=args.customers,
    )
    model, meters = synth_feeder(params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    write_meters_csv(meters, out / "meters.csv")
    print(f"wrote {out / 'model.json'} and {out / 'meters.csv'} "
          f"({len(meters)} meters)", file=sys.stderr)
    return EXIT_OK


def _merge_run_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        doc = json.loads(Path(args.config).read_text())
        for key, value in doc.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    for key in ("model", "meters", "seed", "tolerance", "max_iter", "out", "feeder"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    if cfg.model is None or cfg.meters is None or cfg.out is None:
        raise ValueError("run requires --model, --meters, and -o/--out")
    return cfg


def cmd_run(args) -> int:
    try:
        cfg = _merge_run_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    try:
        model = load_model(cfg.model)
        profiles = _profiles_from_meters(model, cfg.meters, cfg.seed)
        result = run_year(
            model, profiles,
            AnnualOptions(tolerance=cfg.tolerance, max_iter=cfg.max_iter,
                          seed=cfg.seed),
        )
    except (ModelError, NonRadialError, DeEnergizedLoadError, ValueError, KeyError) as exc:
        _err(str(exc))
        return EXIT_FINDINGS
    result.meta.update({
        "model_path": str(cfg.model),
        "meters_path": str(cfg.meters),
        "model_sha256": _sha256(Path(cfg.model)),
        "meters_sha256": _sha256(Path(cfg.meters)),
        "threads_cap": max_threads(),
        "feeder_filter": cfg.feeder,
    })
    try:
        paths = write_results(result, cfg.out, feeder=cfg.feeder)
    except KeyError as exc:
        _err(str(exc))
        return EXIT_USAGE
    nonconv = int(np.sum(~result.converged))
    print(f"wrote {len(paths)} artifacts to {cfg.out}; "
          f"{nonconv} non-converged hours; "
          f"{len(result.tap_events)} tap events", file=sys.stderr)
    return EXIT_OK if nonconv == 0 else EXIT_FINDINGS


MISMATCH_P95_LIMIT_PCT = 3e-3


def cmd_report(args) -> int:
    indir = Path(args.indir)
    meta_path = indir / "run_meta.json"
    if not meta_path.exists():
        _err(f"{meta_path} not found (not a result directory?)")
        return EXIT_FINDINGS
    meta = json.loads(meta_path.read_text())
    import pandas as pd

    sub = pd.read_csv(indir / "annual_substation.csv")
    mism = pd.read_csv(indir / "mismatch_samples.csv")
    taps = pd.read_csv(indir / "tap_events.csv")
    volts = pd.read_csv(indir / "voltage_summary.csv")

    findings: list[str] = []
    nonconv = int((sub["converged"] == 0).sum())
    if nonconv:
        findings.append(f"{nonconv} non-converged hours")
    p95 = float(np.percentile(mism["error_pct"], 95)) if len(mism) else 0.0
    if p95 >= MISMATCH_P95_LIMIT_PCT:
        findings.append(
            f"mismatch p95 {p95:.2e} % exceeds {MISMATCH_P95_LIMIT_PCT:.0e} %"
        )

    print(f"feedersim run report ({meta.get('model_name', 'unnamed model')})")
    print(f"  hours: {len(sub)}  non-converged: {nonconv}")
    print(f"  substation peak P: {sub['p_kw'].max() / 1000:.2f} MW "
          f"(hour {int(sub['p_kw'].idxmax())})")
    print(f"  substation energy: {sub['p_kw'].sum() / 1e6:.2f} GWh")
    print(f"  tap events: {len(taps)}  final taps: {meta.get('final_taps')}")
    print(f"  voltage envelope: [{volts['v_min_pu'].min():.4f}, "
          f"{volts['v_max_pu'].max():.4f}] p.u.")
    print(f"  mismatch p95: {p95:.3e} %")
    for f in findings:
        print(f"  finding: {f}")
    return EXIT_FINDINGS if findings else EXIT_OK


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feedersim",
        description="Quasi-static time-series simulation of unbalanced "
                    "radial distribution feeders.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file and its topology")
    p.add_argument("model", help="model JSON path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("linecalc", help="print series/shunt matrices of a segment")
    p.add_argument("model", help="model JSON path")
    p.add_argument("--segment", required=True, help="segment id")
    p.set_defaults(func=cmd_linecalc)

    p = sub.add_parser("solve", help="solve one hour from a meter CSV")
    p.add_argument("model", help="model JSON path")
    p.add_argument("--loads", required=True, help="meter CSV path")
    p.add_argument("--hour", type=int, required=True, help="hour index 0..8759")
    p.add_argument("--seed", type=int, default=1, help="power-factor seed")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=100, dest="max_iter")
    p.add_argument("-o", "--out", help="write solution.csv/audit.csv here "
                                       "instead of stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("synth", help="generate the synthetic system and meters")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--feeders", type=int, default=3)
    p.add_argument("--nodes", type=int, default=240,
                   help="primary nodes including the regulated bus")
    p.add_argument("--customers", type=int, default=1120)
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="simulate a full year")
    p.add_argument("--model", help="model JSON path")
    p.add_argument("--meters", help="meter CSV path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    p.add_argument("--feeder", default=None, help="restrict report views")
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("-o", "--out", default=None, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="summarize a completed run directory")
    p.add_argument("-i", "--indir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
