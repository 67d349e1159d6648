"""Unbalanced power-flow snapshot solver for radial networks.

Ladder-style forward/backward sweep: the backward pass accumulates
injection currents from the leaves toward the source, the forward pass
propagates voltages from the source through series impedances and
transformer ratios.  Every two-terminal element is compiled into one
uniform branch triple (Av, Zf, Dt) of padded 3x3 matrices so both
sweeps vectorize level by level:

    forward:   V_child = Av . V_parent - Zf . I_ser
    backward:  I_parent_side = Dt . I_ser

Absent phases carry zero current and are masked out of results, so
padding to three phases is exact on the phases that exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import SQRT3
from .devices import (
    COLLAPSE_GUARD_PU,
    PHASES,
    LoadSnapshot,
    VoltageCollapseError,
    load_current,
    sequence_to_phase,
)
from .linecalc import segment_matrices
from .model import NetworkModel, validate_radiality

SLACK_BUS_ID = "__slack__"
SOURCE_BRANCH_ID = "__source_z__"


class NonRadialError(RuntimeError):
    """Energized graph contains a cycle; sweeps are undefined."""


class DeEnergizedLoadError(RuntimeError):
    """A load point or capacitor sits on a bus unreachable from the source."""


@dataclass(frozen=True)
class SolveOptions:
    tolerance: float = 1e-6      # max per-phase |dV| in p.u.
    max_iter: int = 100

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class SnapshotInput:
    """One time step: the static model plus everything that varies hourly."""

    model: NetworkModel
    loads: dict[str, LoadSnapshot] = field(default_factory=dict)
    taps: tuple[int, int, int] | None = None       # None: model's initial taps
    capacitor_states: dict[str, str] | None = None  # None: model states


@dataclass
class SnapshotSolution:
    bus_ids: list[str]
    phase_mask: np.ndarray          # (nbus, 3) bool
    v: np.ndarray                   # (nbus, 3) complex volts
    v_pu: np.ndarray                # (nbus, 3) float, 0 where phase absent
    v_base: np.ndarray              # (nbus, 3) float volts
    branch_ids: list[str]
    branch_current: np.ndarray      # (nbr, 3) complex amps, child side
    substation_p_kw: float
    substation_q_kvar: float
    iterations: int
    converged: bool
    max_dv_pu: float
    diagnostics: list[str] = field(default_factory=list)

    def voltage(self, bus_id: str, phase: str) -> complex:
        b = self.bus_ids.index(bus_id)
        return self.v[b, PHASES.index(phase)]


@dataclass
class MismatchAudit:
    """Per-load-bus percentage gap between solved and specified power."""

    bus_ids: list[str]
    error_pct: np.ndarray          # absolute percentage, >= 0
    floor_va: float

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.error_pct, q)) if len(self.error_pct) else 0.0

    def cdf(self) -> tuple[np.ndarray, np.ndarray]:
        xs = np.sort(self.error_pct)
        ps = np.arange(1, len(xs) + 1) / len(xs)
        return xs, ps


MISMATCH_FLOOR_VA = 100.0  # 0.1 kVA floor keeps zero-load percentages finite


def network_ordering(model: NetworkModel) -> list[str]:
    """Parent-before-child bus schedule over the energized graph.

    Levelized breadth-first order from the source, children sorted by
    bus id within each level so the schedule is stable across runs.
    Raises NonRadialError on a cycle; unreachable buses are omitted.
    """
    report = validate_radiality(model)
    if report.cycles:
        raise NonRadialError(
            f"cycles via edges: {', '.join(c[0] for c in report.cycles)}"
        )
    adjacency: dict[str, list[tuple[str, str]]] = {}
    for e in model.edges():
        if not e.energized:
            continue
        adjacency.setdefault(e.from_bus, []).append((e.to_bus, e.id))
        adjacency.setdefault(e.to_bus, []).append((e.from_bus, e.id))
    order = [model.source.bus]
    seen = {model.source.bus}
    frontier = [model.source.bus]
    while frontier:
        nxt = []
        for bus in frontier:
            for nb, _ in adjacency.get(bus, ()):
                if nb not in seen:
                    seen.add(nb)
                    nxt.append(nb)
        nxt.sort()
        order.extend(nxt)
        frontier = nxt
    return order


def _pad3(phases: str, block: np.ndarray) -> np.ndarray:
    """Embed a |phases|-square matrix into 3x3 on the given phase rows/cols."""
    idx = [PHASES.index(p) for p in phases]
    out = np.zeros((3, 3), dtype=complex)
    out[np.ix_(idx, idx)] = block
    return out


_DELTA_GWYE_A = np.array([[1, 0, -1], [-1, 1, 0], [0, -1, 1]], dtype=complex)
_DELTA_GWYE_D = np.array([[1, -1, 0], [0, 1, -1], [-1, 0, 1]], dtype=complex)


@dataclass
class _Branch:
    id: str
    kind: str
    from_bus: str
    to_bus: str
    phases: str
    av: np.ndarray
    zf: np.ndarray
    dt: np.ndarray


class CompiledNetwork:
    """Solver-ready arrays for one model under given switch/cap states."""

    def __init__(self, model: NetworkModel,
                 capacitor_states: dict[str, str] | None = None) -> None:
        self.model = model
        report = validate_radiality(model)
        if report.cycles:
            raise NonRadialError(
                f"cycles via edges: {', '.join(c[0] for c in report.cycles)}"
            )
        reachable = model.energized_buses()
        dead_loads = sorted(
            lp.id for lp in model.load_points if lp.bus not in reachable
        )
        dead_caps = sorted(
            c.id for c in model.capacitors
            if c.bus not in reachable and (capacitor_states or {}).get(c.id, c.state) == "on"
        )
        if dead_loads or dead_caps:
            raise DeEnergizedLoadError(
                "de-energized devices: " + ", ".join(dead_loads + dead_caps)
            )

        # index 0 is a virtual slack node; the source EMF sits there, behind
        # the sub-transmission equivalent impedance into the source bus.
        order = [SLACK_BUS_ID] + [b for b in network_ordering(model) if b in reachable]
        self.bus_ids = order
        self.bus_index = {b: i for i, b in enumerate(order)}
        n = len(order)
        self.nbus = n

        src_phases = model.bus(model.source.bus).phases
        self.phase_mask = np.zeros((n, 3), dtype=bool)
        for p in src_phases:
            self.phase_mask[0, PHASES.index(p)] = True
        for b in order[1:]:
            for p in model.bus(b).phases:
                self.phase_mask[self.bus_index[b], PHASES.index(p)] = True

        # orient edges parent -> child along the BFS tree
        adjacency: dict[str, list] = {}
        for e in model.edges():
            if not e.energized:
                continue
            adjacency.setdefault(e.from_bus, []).append(e)
            adjacency.setdefault(e.to_bus, []).append(e)

        z_src = sequence_to_phase(model.source.z1, model.source.z0)
        pidx = [PHASES.index(p) for p in src_phases]
        z_src_pad = np.zeros((3, 3), dtype=complex)
        z_src_pad[np.ix_(pidx, pidx)] = z_src[np.ix_(pidx, pidx)]
        eye = np.eye(3, dtype=complex)
        self.branches: list[_Branch] = [
            _Branch(SOURCE_BRANCH_ID, "source", SLACK_BUS_ID, model.source.bus,
                    src_phases, eye.copy(), z_src_pad, eye.copy())
        ]
        parent_of: dict[str, tuple[str, object]] = {}
        for b in order[1:]:
            for e in adjacency.get(b, ()):
                other = e.to_bus if e.from_bus == b else e.from_bus
                if other in parent_of or other == model.source.bus:
                    continue
                if self.bus_index.get(other, -1) > self.bus_index[b]:
                    parent_of[other] = (b, e)
        for child in order[2:]:
            par, e = parent_of[child]
            self.branches.append(self._build_branch(model, e, par, child))
        self.nbr = len(self.branches)

        self.from_idx = np.array(
            [self.bus_index[br.from_bus] for br in self.branches], dtype=int
        )
        self.to_idx = np.array(
            [self.bus_index[br.to_bus] for br in self.branches], dtype=int
        )
        self.av = np.stack([br.av for br in self.branches]) if self.nbr else np.zeros((0, 3, 3), complex)
        self.zf = np.stack([br.zf for br in self.branches]) if self.nbr else np.zeros((0, 3, 3), complex)
        self.dt = np.stack([br.dt for br in self.branches]) if self.nbr else np.zeros((0, 3, 3), complex)

        # levels: branch index groups by depth of the child bus
        depth = {SLACK_BUS_ID: 0}
        for br in self.branches:
            depth[br.to_bus] = depth[br.from_bus] + 1
        nlev = max(depth.values(), default=0)
        self.levels = [
            np.array(
                [k for k, br in enumerate(self.branches) if depth[br.to_bus] == lev],
                dtype=int,
            )
            for lev in range(1, nlev + 1)
        ]

        # per-bus voltage bases, propagated through transformer ratios
        self.v_base = np.zeros((n, 3))
        src_vln = model.source.nominal_ll_voltage / SQRT3
        self.v_base[0] = src_vln
        for br in self.branches:
            fb = self.v_base[self.bus_index[br.from_bus]].copy()
            if br.kind == "substation_transformer":
                st = model.substation_transformer
                fb[:] = st.lo_ll_voltage / SQRT3
            elif br.kind == "transformer":
                tr = next(t for t in model.transformers if t.id == br.id)
                service = tr.service_voltage
                fb[:] = service if len(tr.phases) == 1 else service / SQRT3
            self.v_base[self.bus_index[br.to_bus]] = fb
        self.v_base[~self.phase_mask] = 0.0

        # shunt admittance per bus: capacitors plus cable-charging halves
        self.y_shunt = np.zeros((n, 3, 3), dtype=complex)
        cap_states = capacitor_states or {}
        for cap in model.capacitors:
            state = cap_states.get(cap.id, cap.state)
            if state != "on":
                continue
            bi = self.bus_index[cap.bus]
            for p in cap.phases:
                pi = PHASES.index(p)
                vnom = self.v_base[bi, pi]
                b = (cap.kvar * 1000.0 / len(cap.phases)) / vnom ** 2
                self.y_shunt[bi, pi, pi] += 1j * b
        for br, shunt in self._segment_shunts(model):
            for bus in (br.from_bus, br.to_bus):
                self.y_shunt[self.bus_index[bus]] += shunt / 2.0

        # load points mapped onto buses with per-phase split weights
        self.lp_ids = [lp.id for lp in model.load_points]
        self.lp_bus = np.array(
            [self.bus_index[lp.bus] for lp in model.load_points], dtype=int
        )
        self.lp_weights = np.zeros((len(self.lp_ids), 3))
        for k, lp in enumerate(model.load_points):
            for p in lp.phases:
                self.lp_weights[k, PHASES.index(p)] = 1.0 / len(lp.phases)

        # slack voltage
        angles = np.exp(1j * np.deg2rad([0.0, -120.0, 120.0]))
        self.v_source = model.source.v_pu * src_vln * angles
        self.v_source[~self.phase_mask[self.bus_index[model.source.bus]]] = 0.0

        self.s_base_va = model.source.s_base_kva * 1000.0
        self._sub_branch_idx = next(
            (k for k, br in enumerate(self.branches)
             if br.kind == "substation_transformer"),
            None,
        )
        reg = (model.substation_transformer.regulator
               if model.substation_transformer is not None else None)
        self.regulator = reg
        if reg is not None:
            self.regulated_bus_idx = self.bus_index[reg.regulated_bus]
        self.set_taps(reg.taps if reg is not None else (0, 0, 0))

    # -- construction helpers -------------------------------------------------

    def _segment_series(self, model: NetworkModel, seg) -> tuple[np.ndarray, np.ndarray]:
        """Total series Z (ohm) and shunt admittance (S) matrices, padded."""
        total = segment_matrices(seg, model)
        z = _pad3(seg.phases, total.z_abc)
        ysh = _pad3(seg.phases, 1j * total.shunt_b)
        return z, ysh

    def _segment_shunts(self, model: NetworkModel):
        for br in self.branches:
            if br.kind != "segment":
                continue
            seg = model.segment(br.id)
            if seg.construction != "underground":
                continue
            _, ysh = self._segment_series(model, seg)
            yield br, ysh

    def _build_branch(self, model: NetworkModel, edge, parent: str, child: str) -> _Branch:
        eye = np.eye(3, dtype=complex)
        if edge.kind == "segment":
            seg = model.segment(edge.id)
            z, _ = self._segment_series(model, seg)
            if seg.from_bus != parent:
                z = z.T  # orientation flip preserves the symmetric matrix
            return _Branch(edge.id, "segment", parent, child, seg.phases,
                           eye.copy(), z, eye.copy())
        if edge.kind == "switch":
            return _Branch(edge.id, "switch", parent, child, edge.phases,
                           eye.copy(), np.zeros((3, 3), complex), eye.copy())
        if edge.kind == "substation_transformer":
            st = model.substation_transformer
            if parent != st.from_bus:
                raise NonRadialError(
                    f"substation transformer {st.id} oriented against the source"
                )
            z_base_lo = st.lo_ll_voltage ** 2 / (st.rating_kva * 1000.0)
            zt = complex(st.r_pct, st.x_pct) / 100.0 * z_base_lo
            if st.connection == "delta-gwye":
                nt = st.hi_ll_voltage / (st.lo_ll_voltage / SQRT3)
                a_t = _DELTA_GWYE_A / nt
                d_t = _DELTA_GWYE_D / nt
            else:
                nt = st.hi_ll_voltage / st.lo_ll_voltage
                a_t = eye / nt
                d_t = eye / nt
            br = _Branch(st.id, "substation_transformer", parent, child, "ABC",
                         a_t, np.eye(3, dtype=complex) * zt, d_t)
            br.base_a = a_t
            br.base_zt = np.eye(3, dtype=complex) * zt
            br.base_d = d_t
            return br
        if edge.kind == "transformer":
            tr = next(t for t in model.transformers if t.id == edge.id)
            if parent != tr.bus:
                raise NonRadialError(
                    f"transformer {tr.id} oriented against the source"
                )
            # ratio uses nominal bases: primary VLN to service voltage
            prim_vln = model.bus(tr.bus).nominal_ll_voltage / SQRT3
            if len(tr.phases) == 1:
                nt = prim_vln / tr.service_voltage
                z_base = tr.service_voltage ** 2 / (tr.rating_kva * 1000.0)
            else:
                nt = prim_vln / (tr.service_voltage / SQRT3)
                z_base = tr.service_voltage ** 2 / (tr.rating_kva * 1000.0)
            zt = complex(tr.r_pct, tr.x_pct) / 100.0 * z_base
            av = np.eye(3, dtype=complex)
            zf = np.zeros((3, 3), dtype=complex)
            dt = np.eye(3, dtype=complex)
            for p in tr.phases:
                pi = PHASES.index(p)
                av[pi, pi] = 1.0 / nt
                zf[pi, pi] = zt
                dt[pi, pi] = 1.0 / nt
            return _Branch(tr.id, "transformer", parent, child, tr.phases, av, zf, dt)
        raise ValueError(f"unknown edge kind {edge.kind}")

    # -- taps -----------------------------------------------------------------

    def set_taps(self, taps: tuple[int, int, int]) -> None:
        """Refresh the substation branch matrices for new per-phase taps."""
        self.taps = tuple(taps)
        k = self._sub_branch_idx
        if k is None:
            return
        br = self.branches[k]
        step = (self.regulator.step_pct / 100.0) if self.regulator else 0.00625
        kdiag = np.diag([1.0 + t * step for t in taps]).astype(complex)
        self.av[k] = kdiag @ br.base_a
        self.zf[k] = kdiag @ br.base_zt @ kdiag
        self.dt[k] = br.base_d @ kdiag

    # -- sweeps ---------------------------------------------------------------

    def no_load_voltages(self) -> np.ndarray:
        """Flat start: one forward sweep with zero currents."""
        v = np.zeros((self.nbus, 3), dtype=complex)
        v[0] = self.v_source
        zero = np.zeros((self.nbr, 3), dtype=complex)
        return self._forward(v, zero)

    def _forward(self, v: np.ndarray, i_ser: np.ndarray) -> np.ndarray:
        out = v.copy()
        out[0] = self.v_source
        for lvl in self.levels:
            vf = out[self.from_idx[lvl]]
            out[self.to_idx[lvl]] = (
                np.einsum("bij,bj->bi", self.av[lvl], vf)
                - np.einsum("bij,bj->bi", self.zf[lvl], i_ser[lvl])
            )
        out[~self.phase_mask] = 0.0
        return out

    def injection_currents(self, v: np.ndarray, s_lp: np.ndarray) -> np.ndarray:
        """Per-bus current draw: constant-power loads plus shunt elements."""
        inj = np.einsum("bij,bj->bi", self.y_shunt, v)
        if len(self.lp_ids):
            v_at = v[self.lp_bus]
            vb = self.v_base[self.lp_bus]
            i_lp = load_current(s_lp, v_at, vb)
            np.add.at(inj, self.lp_bus, i_lp)
        return inj

    def _backward(self, inj: np.ndarray) -> np.ndarray:
        i_ser = np.zeros((self.nbr, 3), dtype=complex)
        acc = inj.copy()
        for lvl in reversed(self.levels):
            i_ser[lvl] = acc[self.to_idx[lvl]]
            up = np.einsum("bij,bj->bi", self.dt[lvl], i_ser[lvl])
            np.add.at(acc, self.from_idx[lvl], up)
        return i_ser

    def sweep(
        self, s_lp: np.ndarray, v_init: np.ndarray | None, opts: SolveOptions
    ) -> tuple[np.ndarray, np.ndarray, int, bool, float, list[str]]:
        """Iterate backward/forward passes to a fixed point."""
        v = self.no_load_voltages() if v_init is None else v_init.copy()
        diagnostics: list[str] = []
        i_ser = np.zeros((self.nbr, 3), dtype=complex)
        max_dv = math.inf
        safe_base = np.where(self.v_base > 0, self.v_base, 1.0)
        for it in range(1, opts.max_iter + 1):
            try:
                inj = self.injection_currents(v, s_lp)
            except VoltageCollapseError as exc:
                diagnostics.append(str(exc))
                return v, i_ser, it, False, max_dv, diagnostics
            i_ser = self._backward(inj)
            v_new = self._forward(v, i_ser)
            max_dv = float(np.max(np.abs(v_new - v) / safe_base))
            v = v_new
            if max_dv < opts.tolerance:
                # a fixed point below the collapse guard is the spurious
                # low-voltage root; refuse to report it as converged
                loaded = np.zeros((self.nbus, 3), dtype=bool)
                if len(self.lp_ids):
                    np.logical_or.at(loaded, self.lp_bus, np.abs(s_lp) > 0)
                low = loaded & (np.abs(v) < COLLAPSE_GUARD_PU * self.v_base)
                if np.any(low):
                    diagnostics.append(
                        "fixed point sits below the voltage-collapse guard "
                        f"({np.abs(v[low]).min():.1f} V)"
                    )
                    return v, i_ser, it, False, max_dv, diagnostics
                return v, i_ser, it, True, max_dv, diagnostics
        diagnostics.append(
            f"no convergence after {opts.max_iter} iterations (max dV {max_dv:.3e} p.u.)"
        )
        return v, i_ser, opts.max_iter, False, max_dv, diagnostics

    # -- derived quantities ----------------------------------------------------

    def parent_side_currents(self, i_ser: np.ndarray) -> np.ndarray:
        return np.einsum("bij,bj->bi", self.dt, i_ser) if self.nbr else i_ser

    def slack_power_va(self, v: np.ndarray, i_ser: np.ndarray) -> complex:
        i_par = self.parent_side_currents(i_ser)
        total = 0.0 + 0.0j
        for k in np.nonzero(self.from_idx == 0)[0]:
            total += np.sum(v[0] * np.conj(i_par[k]))
        return total

    def branch_losses_va(self, v: np.ndarray, i_ser: np.ndarray) -> complex:
        i_par = self.parent_side_currents(i_ser)
        s_in = np.sum(v[self.from_idx] * np.conj(i_par), axis=1)
        s_out = np.sum(v[self.to_idx] * np.conj(i_ser), axis=1)
        return complex(np.sum(s_in - s_out))

    def shunt_draw_va(self, v: np.ndarray) -> complex:
        return complex(
            np.sum(v * np.conj(np.einsum("bij,bj->bi", self.y_shunt, v)))
        )

    def kcl_residuals(self, v: np.ndarray, i_ser: np.ndarray, s_lp: np.ndarray) -> np.ndarray:
        """Net current imbalance at every non-source bus (amps)."""
        net = -self.injection_currents(v, s_lp)
        np.add.at(net, self.to_idx, i_ser)
        i_par = self.parent_side_currents(i_ser)
        np.subtract.at(net, self.from_idx, i_par)
        net[0] = 0.0
        return net

    def regulated_v120(self, v: np.ndarray) -> np.ndarray:
        """|V| of the regulated bus on the 120 V control base."""
        if self.regulator is None:
            raise RuntimeError("model has no regulator")
        base = self.v_base[self.regulated_bus_idx]
        safe = np.where(base > 0, base, 1.0)
        return np.where(base > 0, np.abs(v[self.regulated_bus_idx]) / safe * 120.0, 0.0)


def loads_to_array(compiled: CompiledNetwork, loads: dict[str, LoadSnapshot]) -> np.ndarray:
    """Per-load-point complex power (VA), split evenly across served phases."""
    s = np.zeros((len(compiled.lp_ids), 3), dtype=complex)
    unknown = set(loads) - set(compiled.lp_ids)
    if unknown:
        raise KeyError(f"loads reference unknown load points: {sorted(unknown)}")
    for k, lp_id in enumerate(compiled.lp_ids):
        snap = loads.get(lp_id)
        if snap is None:
            continue
        lp = compiled.model.load_points[k]
        for p, pval in snap.p_kw.items():
            if p not in lp.phases:
                raise ValueError(
                    f"load {lp_id}: phase {p} not served by the load point"
                )
            q = snap.q_kvar.get(p, 0.0)
            s[k, PHASES.index(p)] += complex(pval, q) * 1000.0
    return s


def solve_snapshot(inp: SnapshotInput, opts: SolveOptions | None = None) -> SnapshotSolution:
    """Solve one steady-state snapshot on the energized radial network."""
    opts = opts or SolveOptions()
    compiled = CompiledNetwork(inp.model, inp.capacitor_states)
    if inp.taps is not None:
        compiled.set_taps(inp.taps)
    s_lp = loads_to_array(compiled, inp.loads)
    v, i_ser, iters, converged, max_dv, diags = compiled.sweep(s_lp, None, opts)
    return build_solution(compiled, v, i_ser, iters, converged, max_dv, diags)


def build_solution(
    compiled: CompiledNetwork,
    v: np.ndarray,
    i_ser: np.ndarray,
    iterations: int,
    converged: bool,
    max_dv: float,
    diagnostics: list[str],
) -> SnapshotSolution:
    s_slack = compiled.slack_power_va(v, i_ser)
    with np.errstate(invalid="ignore", divide="ignore"):
        v_pu = np.where(compiled.v_base > 0, np.abs(v) / np.where(compiled.v_base > 0, compiled.v_base, 1.0), 0.0)
    return SnapshotSolution(
        bus_ids=list(compiled.bus_ids),
        phase_mask=compiled.phase_mask.copy(),
        v=v,
        v_pu=v_pu,
        v_base=compiled.v_base.copy(),
        branch_ids=[br.id for br in compiled.branches],
        branch_current=i_ser,
        substation_p_kw=s_slack.real / 1000.0,
        substation_q_kvar=s_slack.imag / 1000.0,
        iterations=iterations,
        converged=converged,
        max_dv_pu=max_dv,
        diagnostics=diagnostics,
    )


def audit_mismatch(
    sol: SnapshotSolution,
    inp: SnapshotInput,
    compiled: CompiledNetwork | None = None,
    s_lp: np.ndarray | None = None,
) -> MismatchAudit:
    """Compare per-load-bus power implied by (V, I) against the specified load.

    Calculated power is the net complex power flowing into the bus from
    its incident branches; expected power is the specified load plus the
    shunt draw at the solved voltage.  The percentage denominator is
    floored so zero-load buses stay finite.
    """
    compiled = compiled or CompiledNetwork(inp.model, inp.capacitor_states)
    if s_lp is None:
        s_lp = loads_to_array(compiled, inp.loads)
    v, i_ser = sol.v, sol.branch_current
    net_in = np.zeros((compiled.nbus, 3), dtype=complex)
    np.add.at(net_in, compiled.to_idx, i_ser)
    i_par = compiled.parent_side_currents(i_ser)
    np.subtract.at(net_in, compiled.from_idx, i_par)
    s_calc = np.sum(v * np.conj(net_in), axis=1)

    s_spec = np.zeros(compiled.nbus, dtype=complex)
    if len(compiled.lp_ids):
        np.add.at(s_spec, compiled.lp_bus, np.sum(s_lp, axis=1))
    shunt = np.sum(v * np.conj(np.einsum("bij,bj->bi", compiled.y_shunt, v)), axis=1)
    s_spec = s_spec + shunt

    load_buses = np.unique(compiled.lp_bus) if len(compiled.lp_ids) else np.array([], int)
    err = (
        np.abs(s_calc[load_buses] - s_spec[load_buses])
        / np.maximum(np.abs(s_spec[load_buses]), MISMATCH_FLOOR_VA)
        * 100.0
    )
    return MismatchAudit(
        bus_ids=[compiled.bus_ids[i] for i in load_buses],
        error_pct=err,
        floor_va=MISMATCH_FLOOR_VA,
    )
