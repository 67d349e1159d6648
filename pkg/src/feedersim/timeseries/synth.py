"""Deterministic synthetic test system and meter data generator.

Stands in for the restricted utility download: three radial 13.8 kV
feeders behind one 69 kV delta-wye LTC substation, 240 primary nodes,
mixed overhead/underground construction, catalogue transformers, two
50 kVAr capacitor banks, nine breakers (six normally closed, three
normally open ties), and a year of hourly kWh for every customer with
winter and summer peaks.

All randomness flows from one run seed through named substreams, so a
fixed seed reproduces the model and data bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..constants import EPSILON_0
from ..devices import (
    CapacitorBank,
    DistributionTransformerSpec,
    SourceSpec,
    SubstationTransformer,
    TapChanger,
)
from ..linecalc import CableSpec, ConductorSpec, WireGeometry
from ..model import Bus, LineSegment, LoadPoint, NetworkModel, SwitchState
from .meters import HOURS_PER_YEAR, FLAG_OK, MeterSeries

# typical ACSR/AA/CU overhead conductor catalogue plus the copper
# concentric-neutral strand
CONDUCTOR_CATALOG = [
    ConductorSpec("4/0 ACSR", "ACSR", 0.592, 0.563, 0.00814, 340.0),
    ConductorSpec("1/0 ACSR", "ACSR", 1.12, 0.355, 0.00446, 230.0),
    ConductorSpec("4 ACSR", "ACSR", 2.55, 0.257, 0.00452, 140.0),
    ConductorSpec("2 ACSR", "ACSR", 1.65, 0.316, 0.00504, 180.0),
    ConductorSpec("6 CU", "CU", 2.41, 0.201, 0.00568, 130.0),
    ConductorSpec("2 CU", "CU", 0.87, 0.3, 0.0083, 200.0),
    ConductorSpec("4/0 AA", "AA", 0.554, 0.512, 0.0167, 326.0),
    ConductorSpec("1/0 AA", "AA", 1.114, 0.362, 0.0111, 228.0),
    ConductorSpec("14 CU", "CU", 14.87, 0.0641, 0.00208, 20.0),
]

# service transformer catalogue: rating -> (R%, X%)
TRANSFORMER_CATALOG_3PH = {
    45.0: (2.52, 1.73),
    75.0: (2.27, 1.91),
    112.5: (2.43, 3.87),
    225.0: (1.15, 5.5),
    300.0: (1.8, 4.5),
    500.0: (1.6, 5.9),
}
TRANSFORMER_CATALOG_1PH = {
    15.0: (1.6, 2.02),
    25.0: (1.4, 2.3),
    37.5: (3.6, 2.7),
    50.0: (3.1, 2.8),
    100.0: (2.12, 3.55),
}

SUBSTATION_R_PCT = 0.7      # assumed: |Z| = 7 % on 10 MVA
SUBSTATION_X_PCT = 6.9649


@dataclass(frozen=True)
class SynthParams:
    seed: int = 1
    feeders: int = 3
    primary_nodes: int = 240   # includes the regulated bus
    customers: int = 1120
    year: int = 2017
    residential_base_kw: tuple[float, float] = (0.75, 1.7)
    commercial_base_kw: tuple[float, float] = (24.0, 60.0)

    def __post_init__(self) -> None:
        if self.feeders < 1 or self.primary_nodes < 2 * self.feeders + 1:
            raise ValueError("need at least a couple of nodes per feeder")
        if self.customers < self.feeders:
            raise ValueError("too few customers")


def _rng(params: SynthParams, stream: int, extra: int = 0) -> np.random.Generator:
    return np.random.default_rng([params.seed & 0xFFFFFFFF, stream, extra])


# substreams
_S_TOPOLOGY = 1
_S_LOADSHAPE = 2
_S_CUSTOMERS = 3


def _pick_rating(catalog: dict[float, tuple[float, float]], needed_kva: float) -> float:
    for rating in sorted(catalog):
        if rating >= needed_kva:
            return rating
    return max(catalog)


def synth_feeder(params: SynthParams | None = None) -> tuple[NetworkModel, dict[str, MeterSeries]]:
    """Generate the synthetic network model and its meter data set."""
    params = params or SynthParams()
    rng = _rng(params, _S_TOPOLOGY)

    buses: list[Bus] = [
        Bus("sub69", "ABC", 69000.0, 0.0, 0.0),
        Bus("bus1", "ABC", 13800.0, 0.0, -0.05),
    ]
    segments: list[LineSegment] = []
    switches: list[SwitchState] = []
    transformers: list[DistributionTransformerSpec] = []
    load_points: list[LoadPoint] = []
    capacitors: list[CapacitorBank] = []

    feeder_letters = [chr(ord("A") + i) for i in range(params.feeders)]
    nodes_left = params.primary_nodes - 1  # bus1 is a primary node
    per_feeder = [nodes_left // params.feeders] * params.feeders
    for i in range(nodes_left % params.feeders):
        per_feeder[i] += 1

    lp_classes: list[tuple[str, str]] = []   # (load point id, residential|commercial)
    tie_candidates: list[str] = []

    for fi, letter in enumerate(feeder_letters):
        n = per_feeder[fi]
        names = [f"{letter}{k + 1:03d}" for k in range(n)]
        backbone_n = min(n, max(4, int(round(n * 0.35))))
        backbone = names[:backbone_n]
        angle = 2.0 * np.pi * fi / params.feeders
        ux, uy = np.cos(angle), np.sin(angle)

        for k, name in enumerate(backbone):
            buses.append(Bus(name, "ABC", 13800.0,
                             round(0.15 * (k + 1) * ux, 4),
                             round(0.15 * (k + 1) * uy, 4)))
        switches.append(SwitchState(
            f"brk_{letter}", "bus1", backbone[0], "ABC", "closed", "closed"
        ))
        mid_break = backbone_n // 3
        for k in range(backbone_n - 1):
            if k == mid_break:
                switches.append(SwitchState(
                    f"rcl_{letter}", backbone[k], backbone[k + 1], "ABC",
                    "closed", "closed",
                ))
                continue
            segments.append(LineSegment(
                id=f"seg_{backbone[k]}_{backbone[k + 1]}",
                from_bus=backbone[k],
                to_bus=backbone[k + 1],
                length_miles=round(float(rng.uniform(0.07, 0.13)), 4),
                construction="overhead",
                phase_wires={p: "4/0 ACSR" for p in "ABC"},
                neutral_wires=["1/0 ACSR"],
                geometry_id="oh_std",
            ))
        tie_candidates.append(backbone[-1])

        # commercial service on every third backbone node past the head
        for k in range(2, backbone_n, 3):
            node = backbone[k]
            sec = f"{node}s"
            buses.append(Bus(sec, "ABC", 240.0))
            lp_classes.append((f"lp_{node}", "commercial"))
            transformers.append(DistributionTransformerSpec(
                id=f"xf_{node}", bus=node, secondary_bus=sec, phases="ABC",
                rating_kva=112.5, r_pct=2.43, x_pct=3.87, secondary_voltage="240",
            ))
            load_points.append(LoadPoint(
                id=f"lp_{node}", bus=sec, phases="ABC",
                customer_ids=(), transformer_id=f"xf_{node}",
            ))

        # laterals hang single- or two-phase runs off the backbone; each
        # run takes the least-loaded phase(s) to keep customers balanced
        remaining = names[backbone_n:]
        cursor = 0
        nodes_per_phase = {p: 0 for p in "ABC"}
        while cursor < len(remaining):
            run_len = int(rng.integers(2, 7))
            run = remaining[cursor:cursor + run_len]
            cursor += run_len
            anchor = backbone[int(rng.integers(1, backbone_n))]
            two_phase = rng.random() < 0.15
            underground = not two_phase and rng.random() < 0.12
            ranked = sorted("ABC", key=lambda p: (nodes_per_phase[p], p))
            if two_phase:
                phases = "".join(sorted(ranked[:2]))
            else:
                phases = ranked[0]
            for p in phases:
                nodes_per_phase[p] += len(run) / len(phases)
            # short taps can afford small wire; longer runs get 1/0
            run_wire = (
                "1/0 ACSR" if len(run) >= 3
                else str(rng.choice(["1/0 ACSR", "2 ACSR"]))
            )
            prev = anchor
            for j, node in enumerate(run):
                buses.append(Bus(node, phases, 13800.0))
                length = round(float(rng.uniform(0.03, 0.08)), 4)
                if underground:
                    segments.append(LineSegment(
                        id=f"seg_{prev}_{node}",
                        from_bus=prev, to_bus=node, length_miles=length,
                        construction="underground",
                        phase_wires={p: "1/0 AA CN" for p in phases},
                        neutral_wires=[],
                        geometry_id="ug_trench",
                    ))
                else:
                    segments.append(LineSegment(
                        id=f"seg_{prev}_{node}",
                        from_bus=prev, to_bus=node, length_miles=length,
                        construction="overhead",
                        phase_wires={p: run_wire for p in phases},
                        neutral_wires=["1/0 ACSR"],
                        geometry_id="oh_std",
                    ))
                prev = node
                # one single-phase service per lateral node
                service_phase = phases[j % len(phases)]
                sec = f"{node}s"
                buses.append(Bus(sec, service_phase, 240.0))
                lp_classes.append((f"lp_{node}", "residential"))
                transformers.append(DistributionTransformerSpec(
                    id=f"xf_{node}", bus=node, secondary_bus=sec,
                    phases=service_phase, rating_kva=50.0, r_pct=3.1, x_pct=2.8,
                    secondary_voltage="120/240",
                ))
                load_points.append(LoadPoint(
                    id=f"lp_{node}", bus=sec, phases=service_phase,
                    customer_ids=(), transformer_id=f"xf_{node}",
                ))

        if letter in ("B", "C"):
            cap_bus = backbone[(2 * backbone_n) // 3]
            capacitors.append(CapacitorBank(
                id=f"cap_{letter}", bus=cap_bus, phases="ABC", kvar=50.0,
                connection="gwye", state="on",
            ))

    # normally-open ties between feeder ends
    seen_pairs: set[frozenset] = set()
    for i in range(min(3, len(tie_candidates))):
        a = tie_candidates[i]
        b = tie_candidates[(i + 1) % len(tie_candidates)]
        if a == b or frozenset((a, b)) in seen_pairs:
            continue
        seen_pairs.add(frozenset((a, b)))
        switches.append(SwitchState(
            f"tie_{i + 1}", a, b, "ABC", "open", "open"
        ))

    # customers: two per commercial point, the rest spread evenly over
    # residential points (phase balance comes from the lateral rotation)
    commercial_lps = [lp for lp, cls in lp_classes if cls == "commercial"]
    residential_lps = [lp for lp, cls in lp_classes if cls == "residential"]
    crng = _rng(params, _S_CUSTOMERS)
    counts: dict[str, int] = {lp: 2 for lp in commercial_lps}
    n_res = max(params.customers - 2 * len(commercial_lps), 0)
    base = n_res // max(len(residential_lps), 1)
    rem = n_res - base * len(residential_lps)
    order = crng.permutation(len(residential_lps))
    for pos, lp_idx in enumerate(order):
        counts[residential_lps[lp_idx]] = base + (1 if pos < rem else 0)

    meter_no = 0
    customer_class: dict[str, str] = {}
    lp_customers: dict[str, list[str]] = {}
    for lp, cls in lp_classes:
        ids = []
        for _ in range(counts.get(lp, 0)):
            meter_no += 1
            mid = f"m{meter_no:04d}"
            ids.append(mid)
            customer_class[mid] = cls
        lp_customers[lp] = ids

    # resize service transformers to their customers
    sized: list[DistributionTransformerSpec] = []
    for tr in transformers:
        lp = f"lp_{tr.bus}"
        n_cust = len(lp_customers.get(lp, ()))
        if tr.phases == "ABC":
            est = max(45.0, n_cust * 120.0)
            rating = _pick_rating(TRANSFORMER_CATALOG_3PH, est)
            r, x = TRANSFORMER_CATALOG_3PH[rating]
        else:
            est = max(15.0, n_cust * 7.0)
            rating = _pick_rating(TRANSFORMER_CATALOG_1PH, est)
            r, x = TRANSFORMER_CATALOG_1PH[rating]
        sized.append(DistributionTransformerSpec(
            id=tr.id, bus=tr.bus, secondary_bus=tr.secondary_bus,
            phases=tr.phases, rating_kva=rating, r_pct=r, x_pct=x,
            secondary_voltage=tr.secondary_voltage,
        ))

    load_points = [
        LoadPoint(
            id=lp.id, bus=lp.bus, phases=lp.phases,
            customer_ids=tuple(lp_customers.get(lp.id, ())),
            transformer_id=lp.transformer_id,
        )
        for lp in load_points
    ]

    geometries = (
        WireGeometry(
            id="oh_std",
            positions={"A": (0.0, 29.0), "B": (2.5, 29.0), "C": (7.0, 29.0),
                       "N1": (4.0, 25.0)},
            assumed=True,
        ),
        WireGeometry(
            id="ug_trench",
            positions={"A": (0.0, -3.5), "B": (0.5, -3.5), "C": (1.0, -3.5)},
            assumed=True,
        ),
    )
    conductors = tuple(CONDUCTOR_CATALOG)
    cond_map = {c.label: c for c in conductors}
    cables = (
        CableSpec(
            id="1/0 AA CN",
            core=cond_map["1/0 AA"],
            strand=cond_map["14 CU"],
            strand_count=6,
            r_b_in=0.459,
            rd_c_in=cond_map["1/0 AA"].diameter_in / 2.0,
            rd_s_in=cond_map["14 CU"].diameter_in / 2.0,
            epsilon=2.3 * EPSILON_0,
        ),
    )

    model = NetworkModel(
        source=SourceSpec(
            bus="sub69",
            nominal_ll_voltage=69000.0,
            z1=complex(4.5426, 10.5274),
            z0=complex(7.3655, 24.5046),
            v_pu=1.0,
            s_base_kva=10000.0,
        ),
        buses=tuple(buses),
        conductors=conductors,
        cables=cables,
        geometries=geometries,
        segments=tuple(segments),
        substation_transformer=SubstationTransformer(
            id="subxf",
            from_bus="sub69",
            to_bus="bus1",
            rating_kva=10000.0,
            hi_ll_voltage=69000.0,
            lo_ll_voltage=13800.0,
            r_pct=SUBSTATION_R_PCT,
            x_pct=SUBSTATION_X_PCT,
            connection="delta-gwye",
            regulator=TapChanger(regulated_bus="bus1"),
        ),
        transformers=tuple(sized),
        capacitors=tuple(capacitors),
        switches=tuple(switches),
        load_points=tuple(load_points),
        name=f"synthetic-{params.primary_nodes}-node (seed {params.seed})",
        profiles_ref="meters.csv",
    )

    meters = _synth_meters(params, customer_class)
    return model, meters


# -- load shapes ----------------------------------------------------------------

_RES_WEEKDAY = np.array([
    0.55, 0.48, 0.45, 0.44, 0.46, 0.55, 0.75, 1.00, 1.05, 0.95, 0.90, 0.92,
    0.95, 0.92, 0.90, 0.95, 1.10, 1.35, 1.60, 1.70, 1.60, 1.35, 1.00, 0.70,
])
_RES_WEEKEND = np.array([
    0.60, 0.52, 0.48, 0.46, 0.48, 0.55, 0.70, 0.90, 1.10, 1.20, 1.20, 1.15,
    1.10, 1.05, 1.00, 1.05, 1.15, 1.35, 1.55, 1.60, 1.50, 1.30, 1.00, 0.72,
])
_COM_WEEKDAY = np.array([
    0.35, 0.33, 0.32, 0.32, 0.35, 0.45, 0.70, 1.10, 1.45, 1.55, 1.58, 1.60,
    1.58, 1.57, 1.55, 1.50, 1.40, 1.15, 0.85, 0.65, 0.55, 0.48, 0.42, 0.38,
])
_COM_WEEKEND = np.array([
    0.35, 0.33, 0.32, 0.32, 0.34, 0.38, 0.45, 0.55, 0.70, 0.78, 0.80, 0.80,
    0.78, 0.75, 0.72, 0.68, 0.62, 0.55, 0.50, 0.46, 0.42, 0.40, 0.38, 0.36,
])


def _season_factor() -> np.ndarray:
    """Daily scale with a winter peak and a summer cooling hump."""
    day = np.arange(HOURS_PER_YEAR) // 24
    winter = 0.30 * np.cos(2.0 * np.pi * (day - 12) / 365.0)
    summer = 0.55 * np.exp(-0.5 * ((day - 197.0) / 28.0) ** 2)
    return 1.0 + winter + summer


def _synth_meters(params: SynthParams, customer_class: dict[str, str]) -> dict[str, MeterSeries]:
    season = _season_factor()
    day = np.arange(HOURS_PER_YEAR) // 24
    hour = np.arange(HOURS_PER_YEAR) % 24
    # the synthetic calendar year starts on a Sunday
    weekend = np.isin(day % 7, (0, 6))

    res_shape = np.where(weekend, _RES_WEEKEND[hour], _RES_WEEKDAY[hour])
    com_shape = np.where(weekend, _COM_WEEKEND[hour], _COM_WEEKDAY[hour])

    out: dict[str, MeterSeries] = {}
    for k, meter_id in enumerate(sorted(customer_class)):
        cls = customer_class[meter_id]
        rng = _rng(params, _S_LOADSHAPE, k + 1)
        if cls == "residential":
            base = rng.uniform(*params.residential_base_kw)
            shape = res_shape
            noise = np.clip(rng.lognormal(0.0, 0.18, HOURS_PER_YEAR), 0.4, 2.2)
        else:
            base = rng.uniform(*params.commercial_base_kw)
            shape = com_shape
            noise = np.clip(rng.lognormal(0.0, 0.12, HOURS_PER_YEAR), 0.5, 1.7)
        kwh = base * shape * season * noise
        out[meter_id] = MeterSeries(
            meter_id, params.year, kwh,
            np.full(HOURS_PER_YEAR, FLAG_OK, dtype=np.int8),
        )
    return out
