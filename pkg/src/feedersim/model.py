"""Static network data model: buses, segments, devices, switches, load points.

A NetworkModel is immutable after load and safe to share; re-switching
operations return new values.  The serialized form is a single JSON
document validated against schema/model.schema.json (version tsds-model/1).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import jsonschema

from .devices import (
    CapacitorBank,
    DistributionTransformerSpec,
    SourceSpec,
    SubstationTransformer,
    TapChanger,
    canon_phases,
)
from .linecalc import CableSpec, ConductorSpec, WireGeometry

SCHEMA_VERSION = "tsds-model/1"


class ModelError(ValueError):
    """Base class for model file and validation failures."""


class ParseError(ModelError):
    pass


class SchemaVersionError(ModelError):
    pass


class DanglingReferenceError(ModelError):
    pass


@dataclass(frozen=True)
class Bus:
    id: str
    phases: str
    nominal_ll_voltage: float
    x: float | None = None
    y: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", canon_phases(self.phases))
        if self.nominal_ll_voltage <= 0:
            raise ModelError(f"bus {self.id}: nominal voltage must be > 0")


@dataclass(frozen=True)
class LineSegment:
    id: str
    from_bus: str
    to_bus: str
    length_miles: float
    construction: str                      # overhead | underground
    phase_wires: dict[str, str]            # phase -> conductor/cable id
    neutral_wires: tuple[str, ...]
    geometry_id: str
    normally_energized: bool = True

    def __post_init__(self) -> None:
        if self.length_miles <= 0:
            raise ModelError(f"segment {self.id}: length must be > 0")
        if self.construction not in ("overhead", "underground"):
            raise ModelError(f"segment {self.id}: unknown construction")
        ordered = canon_phases("".join(self.phase_wires))
        # matrix assembly relies on canonical A,B,C ordering of the wires
        object.__setattr__(
            self, "phase_wires", {p: self.phase_wires[p] for p in ordered}
        )
        object.__setattr__(self, "neutral_wires", tuple(self.neutral_wires))

    @property
    def phases(self) -> str:
        return canon_phases("".join(self.phase_wires))


@dataclass(frozen=True)
class SwitchState:
    id: str
    from_bus: str
    to_bus: str
    phases: str
    normal_state: str
    current_state: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", canon_phases(self.phases))
        for state in (self.normal_state, self.current_state):
            if state not in ("closed", "open"):
                raise ModelError(f"switch {self.id}: state must be closed/open")


@dataclass(frozen=True)
class LoadPoint:
    """Aggregation point where customers connect through one service transformer."""

    id: str
    bus: str
    phases: str
    customer_ids: tuple[str, ...]
    transformer_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", canon_phases(self.phases))


@dataclass(frozen=True)
class Edge:
    """Topology view of any two-terminal element."""

    id: str
    kind: str        # segment | switch | substation_transformer | transformer
    from_bus: str
    to_bus: str
    phases: str
    energized: bool


@dataclass(frozen=True)
class TopologyReport:
    cycles: tuple[tuple[str, ...], ...] = ()     # edge ids forming each cycle
    islands: tuple[tuple[str, ...], ...] = ()    # de-energized bus groups
    phase_violations: tuple[str, ...] = ()

    def empty(self) -> bool:
        return not (self.cycles or self.islands or self.phase_violations)

    def entries(self) -> list[str]:
        out = [f"cycle through edges: {', '.join(c)}" for c in self.cycles]
        out += [f"de-energized island: {', '.join(i)}" for i in self.islands]
        out += list(self.phase_violations)
        return out


@dataclass(frozen=True)
class NetworkModel:
    source: SourceSpec
    buses: tuple[Bus, ...]
    conductors: tuple[ConductorSpec, ...]
    cables: tuple[CableSpec, ...]
    geometries: tuple[WireGeometry, ...]
    segments: tuple[LineSegment, ...]
    substation_transformer: SubstationTransformer | None
    transformers: tuple[DistributionTransformerSpec, ...]
    capacitors: tuple[CapacitorBank, ...]
    switches: tuple[SwitchState, ...]
    load_points: tuple[LoadPoint, ...]
    name: str = ""
    profiles_ref: str | None = None
    schema_version: str = SCHEMA_VERSION

    def bus(self, bus_id: str) -> Bus:
        try:
            return self._bus_map[bus_id]
        except KeyError:
            raise DanglingReferenceError(f"unknown bus {bus_id!r}") from None

    def conductor(self, cid: str) -> ConductorSpec:
        try:
            return self._conductor_map[cid]
        except KeyError:
            raise DanglingReferenceError(f"unknown conductor {cid!r}") from None

    def cable(self, cid: str) -> CableSpec:
        try:
            return self._cable_map[cid]
        except KeyError:
            raise DanglingReferenceError(f"unknown cable {cid!r}") from None

    def geometry(self, gid: str) -> WireGeometry:
        try:
            return self._geometry_map[gid]
        except KeyError:
            raise DanglingReferenceError(f"unknown geometry {gid!r}") from None

    def switch(self, sid: str) -> SwitchState:
        try:
            return self._switch_map[sid]
        except KeyError:
            raise DanglingReferenceError(f"unknown switch {sid!r}") from None

    def segment(self, sid: str) -> LineSegment:
        try:
            return self._segment_map[sid]
        except KeyError:
            raise DanglingReferenceError(f"unknown segment {sid!r}") from None

    def __post_init__(self) -> None:
        def index(items, what: str, key: str = "id") -> dict:
            out = {}
            for item in items:
                ident = getattr(item, key)
                if ident in out:
                    raise ModelError(f"duplicate {what} id {ident!r}")
                out[ident] = item
            return out

        object.__setattr__(self, "_bus_map", index(self.buses, "bus"))
        object.__setattr__(
            self, "_conductor_map", index(self.conductors, "conductor", "label")
        )
        object.__setattr__(self, "_cable_map", index(self.cables, "cable"))
        object.__setattr__(self, "_geometry_map", index(self.geometries, "geometry"))
        object.__setattr__(self, "_switch_map", index(self.switches, "switch"))
        object.__setattr__(self, "_segment_map", index(self.segments, "segment"))

    def edges(self) -> list[Edge]:
        """All two-terminal elements in a stable order."""
        out: list[Edge] = []
        for seg in self.segments:
            out.append(Edge(seg.id, "segment", seg.from_bus, seg.to_bus,
                            seg.phases, seg.normally_energized))
        for sw in self.switches:
            out.append(Edge(sw.id, "switch", sw.from_bus, sw.to_bus, sw.phases,
                            sw.current_state == "closed"))
        if self.substation_transformer is not None:
            st = self.substation_transformer
            out.append(Edge(st.id, "substation_transformer", st.from_bus,
                            st.to_bus, "ABC", True))
        for tr in self.transformers:
            out.append(Edge(tr.id, "transformer", tr.bus, tr.secondary_bus,
                            tr.phases, True))
        return out

    def energized_buses(self) -> set[str]:
        """Buses reachable from the source over energized edges."""
        adjacency: dict[str, list[str]] = {}
        for e in self.edges():
            if not e.energized:
                continue
            adjacency.setdefault(e.from_bus, []).append(e.to_bus)
            adjacency.setdefault(e.to_bus, []).append(e.from_bus)
        seen = {self.source.bus}
        queue = deque([self.source.bus])
        while queue:
            b = queue.popleft()
            for nb in adjacency.get(b, ()):
                if nb not in seen:
                    seen.add(nb)
                    queue.append(nb)
        return seen


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ModelError(message)


def _load_schema() -> dict:
    with resources.files("feedersim.schema").joinpath("model.schema.json").open() as f:
        return json.load(f)


_SCHEMA = _load_schema()


def model_from_dict(doc: dict) -> NetworkModel:
    """Build and cross-validate a NetworkModel from a parsed JSON document."""
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"unsupported schema version {version!r} (expected {SCHEMA_VERSION})"
        )
    try:
        jsonschema.validate(doc, _SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ParseError(f"schema violation at {exc.json_path}: {exc.message}") from None

    source = SourceSpec(
        bus=doc["source"]["bus"],
        nominal_ll_voltage=doc["source"]["nominal_ll_voltage"],
        z1=complex(doc["source"]["z1"]["r"], doc["source"]["z1"]["x"]),
        z0=complex(doc["source"]["z0"]["r"], doc["source"]["z0"]["x"]),
        v_pu=doc["source"].get("v_pu", 1.0),
        s_base_kva=doc["source"].get("s_base_kva", 10000.0),
    )
    buses = tuple(
        Bus(b["id"], b["phases"], b["nominal_ll_voltage"], b.get("x"), b.get("y"))
        for b in doc["buses"]
    )
    conductors = tuple(
        ConductorSpec(c["id"], c["material"], c["r_per_mile"], c["diameter_in"],
                      c["gmr_ft"], c["ampacity_a"])
        for c in doc["conductors"]
    )
    conductor_map = {c.label: c for c in conductors}
    cables = []
    for c in doc.get("cables", ()):
        for ref in (c["core"], c["strand"]):
            if ref not in conductor_map:
                raise DanglingReferenceError(
                    f"cable {c['id']}: unknown conductor {ref!r}"
                )
        core = conductor_map[c["core"]]
        strand = conductor_map[c["strand"]]
        cables.append(
            CableSpec(
                id=c["id"],
                core=core,
                strand=strand,
                strand_count=c["strand_count"],
                r_b_in=c["r_b_in"],
                rd_c_in=c.get("rd_c_in", core.diameter_in / 2.0),
                rd_s_in=c.get("rd_s_in", strand.diameter_in / 2.0),
                epsilon=c["epsilon"],
            )
        )
    geometries = tuple(
        WireGeometry(
            id=g["id"],
            positions={w: (p[0], p[1]) for w, p in g.get("positions", {}).items()},
            distances={
                WireGeometry.pair(*d["wires"]): d["d_ft"]
                for d in g.get("distances", ())
            },
            assumed=g.get("assumed", False),
        )
        for g in doc["geometries"]
    )
    segments = tuple(
        LineSegment(
            id=s["id"],
            from_bus=s["from_bus"],
            to_bus=s["to_bus"],
            length_miles=s["length_miles"],
            construction=s["construction"],
            phase_wires=dict(s["phase_wires"]),
            neutral_wires=tuple(s.get("neutral_wires", ())),
            geometry_id=s["geometry_id"],
            normally_energized=s.get("normally_energized", True),
        )
        for s in doc["segments"]
    )
    subxf = None
    if "substation_transformer" in doc:
        st = doc["substation_transformer"]
        regulator = None
        if "regulator" in st:
            rg = st["regulator"]
            regulator = TapChanger(
                regulated_bus=rg["regulated_bus"],
                winding_kv=rg.get("winding_kv", 7.9674),
                winding_kva=rg.get("winding_kva", 3500.0),
                setpoint_v120=rg.get("setpoint_v120", 123.0),
                bandwidth_v120=rg.get("bandwidth_v120", 2.0),
                vmax_v120=rg.get("vmax_v120", 129.0),
                vmin_v120=rg.get("vmin_v120", 110.0),
                steps=rg.get("steps", 16),
                step_pct=rg.get("step_pct", 0.625),
                taps=tuple(rg.get("initial_taps", (0, 0, 0))),
            )
        subxf = SubstationTransformer(
            id=st["id"],
            from_bus=st["from_bus"],
            to_bus=st["to_bus"],
            rating_kva=st["rating_kva"],
            hi_ll_voltage=st["hi_ll_voltage"],
            lo_ll_voltage=st["lo_ll_voltage"],
            r_pct=st["r_pct"],
            x_pct=st["x_pct"],
            connection=st["connection"],
            regulator=regulator,
        )
    transformers = tuple(
        DistributionTransformerSpec(
            id=t["id"], bus=t["bus"], secondary_bus=t["secondary_bus"],
            phases=t["phases"], rating_kva=t["rating_kva"],
            r_pct=t["r_pct"], x_pct=t["x_pct"],
            secondary_voltage=t["secondary_voltage"],
        )
        for t in doc.get("transformers", ())
    )
    capacitors = tuple(
        CapacitorBank(
            id=c["id"], bus=c["bus"], phases=c["phases"], kvar=c["kvar"],
            connection=c.get("connection", "gwye"), state=c.get("state", "on"),
        )
        for c in doc.get("capacitors", ())
    )
    switches = tuple(
        SwitchState(
            id=s["id"], from_bus=s["from_bus"], to_bus=s["to_bus"],
            phases=s["phases"], normal_state=s["normal_state"],
            current_state=s.get("current_state", s["normal_state"]),
        )
        for s in doc.get("switches", ())
    )
    load_points = tuple(
        LoadPoint(
            id=lp["id"], bus=lp["bus"], phases=lp["phases"],
            customer_ids=tuple(lp["customer_ids"]),
            transformer_id=lp.get("transformer_id"),
        )
        for lp in doc.get("load_points", ())
    )
    model = NetworkModel(
        source=source,
        buses=buses,
        conductors=conductors,
        cables=tuple(cables),
        geometries=geometries,
        segments=segments,
        substation_transformer=subxf,
        transformers=transformers,
        capacitors=capacitors,
        switches=switches,
        load_points=load_points,
        name=doc.get("name", ""),
        profiles_ref=doc.get("profiles_ref"),
    )
    _validate_references(model)
    return model


def _validate_references(model: NetworkModel) -> None:
    """Resolve every cross-reference; raise DanglingReferenceError otherwise."""
    model.bus(model.source.bus)
    for seg in model.segments:
        model.bus(seg.from_bus)
        model.bus(seg.to_bus)
        geom = model.geometry(seg.geometry_id)
        for wire in seg.phase_wires.values():
            if seg.construction == "overhead":
                model.conductor(wire)
            else:
                model.cable(wire)
        for wire in seg.neutral_wires:
            model.conductor(wire)
        # fail fast on missing pairwise spacings
        wires = list(seg.phase_wires) + [f"N{i+1}" for i in range(len(seg.neutral_wires))]
        if seg.construction == "overhead":
            for i, a in enumerate(wires):
                for b in wires[i + 1:]:
                    geom.distance(a, b)
        else:
            phs = list(seg.phase_wires)
            for i, a in enumerate(phs):
                for b in phs[i + 1:]:
                    geom.distance(a, b)
        for ph in seg.phases:
            for bus_id in (seg.from_bus, seg.to_bus):
                if ph not in model.bus(bus_id).phases:
                    raise ModelError(
                        f"segment {seg.id}: phase {ph} not present on bus {bus_id}"
                    )
    for sw in model.switches:
        model.bus(sw.from_bus)
        model.bus(sw.to_bus)
    for cap in model.capacitors:
        bus = model.bus(cap.bus)
        if not set(cap.phases) <= set(bus.phases):
            raise ModelError(f"capacitor {cap.id}: phases not on bus {cap.bus}")
    if model.substation_transformer is not None:
        st = model.substation_transformer
        model.bus(st.from_bus)
        model.bus(st.to_bus)
        if st.regulator is not None:
            model.bus(st.regulator.regulated_bus)
    xf_map = {}
    for tr in model.transformers:
        bus = model.bus(tr.bus)
        model.bus(tr.secondary_bus)
        if not set(tr.phases) <= set(bus.phases):
            raise ModelError(f"transformer {tr.id}: phases not on bus {tr.bus}")
        xf_map[tr.id] = tr
    seen_customers: dict[str, str] = {}
    for lp in model.load_points:
        bus = model.bus(lp.bus)
        if not set(lp.phases) <= set(bus.phases):
            raise ModelError(f"load point {lp.id}: phases not on bus {lp.bus}")
        if lp.transformer_id is not None:
            if lp.transformer_id not in xf_map:
                raise DanglingReferenceError(
                    f"load point {lp.id}: unknown transformer {lp.transformer_id!r}"
                )
            if xf_map[lp.transformer_id].secondary_bus != lp.bus:
                raise ModelError(
                    f"load point {lp.id}: bus does not match transformer secondary"
                )
        for cust in lp.customer_ids:
            if cust in seen_customers:
                raise ModelError(
                    f"customer {cust!r} mapped to both "
                    f"{seen_customers[cust]!r} and {lp.id!r}"
                )
            seen_customers[cust] = lp.id


def model_to_dict(model: NetworkModel) -> dict:
    """Serialize a NetworkModel back to its JSON document form."""
    doc: dict = {
        "schema_version": model.schema_version,
        "name": model.name,
        "source": {
            "bus": model.source.bus,
            "nominal_ll_voltage": model.source.nominal_ll_voltage,
            "v_pu": model.source.v_pu,
            "s_base_kva": model.source.s_base_kva,
            "z1": {"r": model.source.z1.real, "x": model.source.z1.imag},
            "z0": {"r": model.source.z0.real, "x": model.source.z0.imag},
        },
        "buses": [
            {
                "id": b.id, "phases": b.phases,
                "nominal_ll_voltage": b.nominal_ll_voltage,
                **({"x": b.x, "y": b.y} if b.x is not None else {}),
            }
            for b in model.buses
        ],
        "conductors": [
            {
                "id": c.label, "material": c.material, "r_per_mile": c.r_per_mile,
                "diameter_in": c.diameter_in, "gmr_ft": c.gmr_ft,
                "ampacity_a": c.ampacity_a,
            }
            for c in model.conductors
        ],
        "cables": [
            {
                "id": c.id, "core": c.core.label, "strand": c.strand.label,
                "strand_count": c.strand_count, "r_b_in": c.r_b_in,
                "rd_c_in": c.rd_c_in, "rd_s_in": c.rd_s_in,
                "epsilon": c.epsilon,
            }
            for c in model.cables
        ],
        "geometries": [
            {
                "id": g.id,
                "positions": {w: [p[0], p[1]] for w, p in g.positions.items()},
                **(
                    {
                        "distances": [
                            {"wires": sorted(k), "d_ft": v}
                            for k, v in sorted(
                                g.distances.items(), key=lambda kv: sorted(kv[0])
                            )
                        ]
                    }
                    if g.distances
                    else {}
                ),
                "assumed": g.assumed,
            }
            for g in model.geometries
        ],
        "segments": [
            {
                "id": s.id, "from_bus": s.from_bus, "to_bus": s.to_bus,
                "length_miles": s.length_miles, "construction": s.construction,
                "phase_wires": dict(s.phase_wires),
                "neutral_wires": list(s.neutral_wires),
                "geometry_id": s.geometry_id,
                "normally_energized": s.normally_energized,
            }
            for s in model.segments
        ],
    }
    if model.substation_transformer is not None:
        st = model.substation_transformer
        entry: dict = {
            "id": st.id, "from_bus": st.from_bus, "to_bus": st.to_bus,
            "rating_kva": st.rating_kva, "connection": st.connection,
            "hi_ll_voltage": st.hi_ll_voltage, "lo_ll_voltage": st.lo_ll_voltage,
            "r_pct": st.r_pct, "x_pct": st.x_pct,
        }
        if st.regulator is not None:
            rg = st.regulator
            entry["regulator"] = {
                "regulated_bus": rg.regulated_bus,
                "winding_kv": rg.winding_kv, "winding_kva": rg.winding_kva,
                "setpoint_v120": rg.setpoint_v120,
                "bandwidth_v120": rg.bandwidth_v120,
                "vmax_v120": rg.vmax_v120, "vmin_v120": rg.vmin_v120,
                "steps": rg.steps, "step_pct": rg.step_pct,
                "initial_taps": list(rg.taps),
            }
        doc["substation_transformer"] = entry
    doc["transformers"] = [
        {
            "id": t.id, "bus": t.bus, "secondary_bus": t.secondary_bus,
            "phases": t.phases, "rating_kva": t.rating_kva,
            "r_pct": t.r_pct, "x_pct": t.x_pct,
            "secondary_voltage": t.secondary_voltage,
        }
        for t in model.transformers
    ]
    doc["capacitors"] = [
        {
            "id": c.id, "bus": c.bus, "phases": c.phases, "kvar": c.kvar,
            "connection": c.connection, "state": c.state,
        }
        for c in model.capacitors
    ]
    doc["switches"] = [
        {
            "id": s.id, "from_bus": s.from_bus, "to_bus": s.to_bus,
            "phases": s.phases, "normal_state": s.normal_state,
            "current_state": s.current_state,
        }
        for s in model.switches
    ]
    doc["load_points"] = [
        {
            "id": lp.id, "bus": lp.bus, "phases": lp.phases,
            "transformer_id": lp.transformer_id,
            "customer_ids": list(lp.customer_ids),
        }
        for lp in model.load_points
    ]
    if model.profiles_ref is not None:
        doc["profiles_ref"] = model.profiles_ref
    return doc


def load_model(path: str | Path) -> NetworkModel:
    """Load, schema-check, and cross-validate a model file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return model_from_dict(doc)


def save_model(model: NetworkModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def validate_radiality(model: NetworkModel) -> TopologyReport:
    """Check that the energized graph is a source-rooted tree on every phase.

    The report lists cycles (by the edge whose insertion closes each
    one), de-energized islands, and phase-consistency violations; an
    empty report means the model satisfies the radiality invariants.
    """
    energized = [e for e in model.edges() if e.energized]
    cycles: list[tuple[str, ...]] = []
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    adjacency: dict[str, list[tuple[str, Edge]]] = {}
    for e in sorted(energized, key=lambda e: (e.kind, e.id)):
        adjacency.setdefault(e.from_bus, []).append((e.to_bus, e))
        adjacency.setdefault(e.to_bus, []).append((e.from_bus, e))
        ra, rb = find(e.from_bus), find(e.to_bus)
        if ra == rb:
            cycles.append((e.id,))
        else:
            parent[ra] = rb

    reached = model.energized_buses()
    unreached = [b.id for b in model.buses if b.id not in reached]
    islands: list[tuple[str, ...]] = []
    if unreached:
        seen: set[str] = set()
        for b in unreached:
            if b in seen:
                continue
            group = [b]
            seen.add(b)
            queue = deque([b])
            while queue:
                cur = queue.popleft()
                for nb, e in adjacency.get(cur, ()):
                    if nb not in seen and nb not in reached:
                        seen.add(nb)
                        group.append(nb)
                        queue.append(nb)
            islands.append(tuple(sorted(group)))

    violations: list[str] = []
    if not cycles:
        # walk the tree from the source checking phase containment
        queue = deque([(model.source.bus, "ABC")])
        visited = {model.source.bus}
        while queue:
            bus_id, supply = queue.popleft()
            bus_phases = model.bus(bus_id).phases
            missing = set(bus_phases) - set(supply)
            if missing:
                violations.append(
                    f"bus {bus_id}: phases {''.join(sorted(missing))} "
                    f"not present on supply path"
                )
            for nb, e in adjacency.get(bus_id, ()):
                if nb in visited:
                    continue
                visited.add(nb)
                if e.kind in ("segment", "switch"):
                    extra = set(e.phases) - set(bus_phases)
                    if extra:
                        violations.append(
                            f"edge {e.id}: phases {''.join(sorted(extra))} "
                            f"absent on bus {bus_id}"
                        )
                queue.append((nb, e.phases))

    return TopologyReport(
        cycles=tuple(cycles),
        islands=tuple(islands),
        phase_violations=tuple(violations),
    )


def apply_switching(
    model: NetworkModel, switch_id: str, state: str
) -> tuple[NetworkModel, TopologyReport]:
    """Re-switch one breaker and re-validate.

    Opening may create de-energized islands (accepted and reported);
    closing into a cycle is rejected and the original model returned
    alongside the violating report.
    """
    if state not in ("closed", "open"):
        raise ModelError(f"invalid switch state {state!r}")
    old = model.switch(switch_id)
    if old.current_state == state:
        return model, validate_radiality(model)
    switches = tuple(
        replace(sw, current_state=state) if sw.id == switch_id else sw
        for sw in model.switches
    )
    candidate = replace(model, switches=switches)
    report = validate_radiality(candidate)
    if report.cycles:
        return model, report
    return candidate, report
