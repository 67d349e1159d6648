"""Line-constant calculations for overhead lines and concentric-neutral cables.

Series impedance comes from the modified Carson's equations (60 Hz,
100 Ohm-m earth) with Kron reduction of the neutral wires; shunt
capacitance of concentric-neutral cables from the standard
phase-to-ground formula.  Overhead shunt admittance is ignored.

Functions:
    self_impedance            self term of a conductor (Ohm/mile)
    mutual_impedance          mutual term between two wires (Ohm/mile)
    build_primitive           primitive impedance matrix of a wire set
    kron_reduce               eliminate neutral wires (Schur complement)
    cable_shunt_capacitance   concentric-neutral phase-to-ground C (F/mile)
    equivalent_neutral        concentric strands as one equivalent wire
    segment_matrices          total series Z and shunt B of a line segment

Units: resistances Ohm/mile, GMR and wire spacings in feet, cable radii
in inches (converted internally), capacitance F/mile, susceptance S/mile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import (
    CARSON_LOG_OFFSET,
    CARSON_R,
    CARSON_X,
    EPSILON_0,
    INCHES_PER_FOOT,
    METERS_PER_MILE,
    SYSTEM_FREQ_HZ,
)

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class ConductorSpec:
    """One catalogue row for a bare wire: size, material, r, diameter, GMR."""

    label: str
    material: str               # ACSR | AA | CU
    r_per_mile: float           # Ohm/mile
    diameter_in: float          # inches
    gmr_ft: float               # feet
    ampacity_a: float           # amperes

    def __post_init__(self) -> None:
        if self.r_per_mile <= 0:
            raise ValueError(f"conductor {self.label}: resistance must be > 0")
        if not 0 < self.gmr_ft < self.diameter_in / INCHES_PER_FOOT:
            raise ValueError(
                f"conductor {self.label}: GMR must be in (0, diameter) "
                f"(gmr={self.gmr_ft} ft, diameter={self.diameter_in} in)"
            )
        if self.ampacity_a <= 0:
            raise ValueError(f"conductor {self.label}: ampacity must be > 0")


@dataclass(frozen=True)
class WireGeometry:
    """Wire spacings (feet) for one construction class.

    Either planar positions per wire, explicit pairwise distances, or a
    mix (explicit distances take precedence).  Explicit distances are
    stored unordered so D_ij = D_ji by construction.
    """

    id: str
    positions: dict[str, tuple[float, float]] = field(default_factory=dict)
    distances: dict[frozenset, float] = field(default_factory=dict)
    assumed: bool = False

    @staticmethod
    def pair(a: str, b: str) -> frozenset:
        return frozenset((a, b))

    def distance(self, a: str, b: str) -> float:
        key = self.pair(a, b)
        if key in self.distances:
            d = self.distances[key]
        else:
            try:
                xa, ya = self.positions[a]
                xb, yb = self.positions[b]
            except KeyError as exc:
                raise KeyError(
                    f"geometry {self.id}: no spacing for wire pair ({a}, {b}); "
                    f"missing {exc}"
                ) from None
            d = math.hypot(xa - xb, ya - yb)
        if d <= 0.0:
            raise ValueError(f"geometry {self.id}: wires {a} and {b} coincide")
        return d


@dataclass(frozen=True)
class CableSpec:
    """Concentric-neutral cable: insulated core plus k neutral strands.

    epsilon is the absolute permittivity of the insulation in F/m; use
    :meth:`from_relative_permittivity` when starting from a relative value.
    Radii are in inches.
    """

    id: str
    core: ConductorSpec
    strand: ConductorSpec
    strand_count: int           # k
    r_b_in: float               # radius of the circle through strand centers
    rd_c_in: float              # core radius
    rd_s_in: float              # strand radius
    epsilon: float              # F/m, absolute

    def __post_init__(self) -> None:
        if not self.r_b_in > self.rd_c_in > 0:
            raise ValueError(f"cable {self.id}: requires R_b > RD_c > 0")
        if self.rd_s_in <= 0:
            raise ValueError(f"cable {self.id}: strand radius must be > 0")
        if self.strand_count < 1:
            raise ValueError(f"cable {self.id}: strand count must be >= 1")
        if self.epsilon <= 0:
            raise ValueError(f"cable {self.id}: permittivity must be > 0")

    @classmethod
    def from_relative_permittivity(
        cls,
        id: str,
        core: ConductorSpec,
        strand: ConductorSpec,
        strand_count: int,
        r_b_in: float,
        eps_r: float,
        rd_c_in: float | None = None,
        rd_s_in: float | None = None,
    ) -> "CableSpec":
        """Build a spec with radii defaulted from the conductor diameters."""
        return cls(
            id=id,
            core=core,
            strand=strand,
            strand_count=strand_count,
            r_b_in=r_b_in,
            rd_c_in=core.diameter_in / 2.0 if rd_c_in is None else rd_c_in,
            rd_s_in=strand.diameter_in / 2.0 if rd_s_in is None else rd_s_in,
            epsilon=eps_r * EPSILON_0,
        )


@dataclass(frozen=True)
class PrimitiveImpedance:
    """Primitive impedance matrix partitioned into phase and neutral blocks."""

    phases: tuple[str, ...]
    neutrals: tuple[str, ...]
    matrix: np.ndarray  # (n_ph + n_n) square, complex, Ohm/mile

    def __post_init__(self) -> None:
        n = len(self.phases) + len(self.neutrals)
        if self.matrix.shape != (n, n):
            raise ValueError(
                f"primitive matrix shape {self.matrix.shape} does not match "
                f"{len(self.phases)} phase + {len(self.neutrals)} neutral wires"
            )

    @property
    def z_pp(self) -> np.ndarray:
        k = len(self.phases)
        return self.matrix[:k, :k]

    @property
    def z_pn(self) -> np.ndarray:
        k = len(self.phases)
        return self.matrix[:k, k:]

    @property
    def z_np(self) -> np.ndarray:
        k = len(self.phases)
        return self.matrix[k:, :k]

    @property
    def z_nn(self) -> np.ndarray:
        k = len(self.phases)
        return self.matrix[k:, k:]


@dataclass(frozen=True)
class PhaseImpedanceMatrix:
    """Per-mile (or per-segment) phase-frame series impedance and shunt susceptance."""

    phases: tuple[str, ...]
    z_abc: np.ndarray    # Ohm/mile (or Ohm when scaled by length), complex
    shunt_b: np.ndarray  # S/mile (or S), real capacitive susceptance; zero overhead

    def __post_init__(self) -> None:
        n = len(self.phases)
        if self.z_abc.shape != (n, n) or self.shunt_b.shape != (n, n):
            raise ValueError("phase matrix dimensions do not match phase list")

    def scaled(self, length_miles: float) -> "PhaseImpedanceMatrix":
        return PhaseImpedanceMatrix(
            self.phases, self.z_abc * length_miles, self.shunt_b * length_miles
        )


def carson_self(r_per_mile: float, gmr_ft: float) -> complex:
    """Self term with earth return for raw (r, GMR) values, Ohm/mile."""
    if gmr_ft <= 0:
        raise ValueError(f"GMR must be > 0 (got {gmr_ft})")
    return complex(
        r_per_mile + CARSON_R,
        CARSON_X * (math.log(1.0 / gmr_ft) + CARSON_LOG_OFFSET),
    )


def self_impedance(c: ConductorSpec) -> complex:
    """Self impedance of one conductor with earth return, Ohm/mile."""
    return carson_self(c.r_per_mile, c.gmr_ft)


def mutual_impedance(d_ft: float) -> complex:
    """Mutual impedance between two wires d_ft feet apart, Ohm/mile."""
    if d_ft <= 0:
        raise ValueError(f"wire spacing must be > 0 (got {d_ft})")
    return complex(
        CARSON_R,
        CARSON_X * (math.log(1.0 / d_ft) + CARSON_LOG_OFFSET),
    )


def equivalent_neutral(cable: CableSpec) -> tuple[float, float]:
    """Equivalent single-wire (gmr_ft, r_per_mile) for k concentric strands.

    The strands, uniformly spaced on the circle of radius R_b, behave as
    one composite conductor with GMR = (GMR_s * k * R_b^(k-1))^(1/k) and
    resistance r_s / k.
    """
    k = cable.strand_count
    r_b_ft = cable.r_b_in / INCHES_PER_FOOT
    gmr = (cable.strand.gmr_ft * k * r_b_ft ** (k - 1)) ** (1.0 / k)
    return gmr, cable.strand.r_per_mile / k


def build_primitive(
    phase_wires: dict[str, ConductorSpec],
    neutral_wires: dict[str, ConductorSpec],
    geometry: WireGeometry,
    self_overrides: dict[str, complex] | None = None,
) -> PrimitiveImpedance:
    """Assemble the primitive impedance matrix for a set of wires.

    Diagonal entries come from self_impedance, off-diagonals from
    mutual_impedance of the geometric spacing.  Wires are ordered
    phases-then-neutrals so the matrix is already partitioned.
    self_overrides replaces the self term of named wires (used for the
    equivalent concentric neutral, whose GMR is not a catalogue value).
    """
    order = list(phase_wires) + list(neutral_wires)
    specs = {**phase_wires, **neutral_wires}
    overrides = self_overrides or {}
    n = len(order)
    z = np.zeros((n, n), dtype=complex)
    for i, wi in enumerate(order):
        z[i, i] = overrides[wi] if wi in overrides else self_impedance(specs[wi])
        for j in range(i + 1, n):
            zm = mutual_impedance(geometry.distance(wi, order[j]))
            z[i, j] = zm
            z[j, i] = zm
    return PrimitiveImpedance(
        phases=tuple(phase_wires),
        neutrals=tuple(neutral_wires),
        matrix=z,
    )


def kron_reduce(p: PrimitiveImpedance) -> PhaseImpedanceMatrix:
    """Eliminate the neutral wires: z_abc = z_pp - z_pn . z_nn^-1 . z_np."""
    if not p.neutrals:
        z_abc = p.matrix.copy()
    else:
        try:
            z_nn_inv = np.linalg.inv(p.z_nn)
        except np.linalg.LinAlgError:
            raise ValueError("neutral block of primitive matrix is singular") from None
        z_abc = p.z_pp - p.z_pn @ z_nn_inv @ p.z_np
    n = len(p.phases)
    return PhaseImpedanceMatrix(p.phases, z_abc, np.zeros((n, n)))


def cable_shunt_capacitance(cable: CableSpec) -> float:
    """Phase-to-ground capacitance of a concentric-neutral cable, F/mile.

    C = 2 pi eps / (ln(R_b/RD_c) - (1/k) ln(k RD_s / R_b)), evaluated
    per meter and converted to per mile.  Radii enter only as ratios, so
    the inch units cancel.
    """
    k = cable.strand_count
    den = math.log(cable.r_b_in / cable.rd_c_in) - math.log(
        k * cable.rd_s_in / cable.r_b_in
    ) / k
    if den <= 0:
        raise ValueError(
            f"cable {cable.id}: geometrically impossible spec "
            f"(capacitance denominator {den:.4g} <= 0)"
        )
    c_per_m = 2.0 * math.pi * cable.epsilon / den
    return c_per_m * METERS_PER_MILE


def cable_shunt_susceptance(cable: CableSpec, freq_hz: float = SYSTEM_FREQ_HZ) -> float:
    """Capacitive susceptance of one cable at system frequency, S/mile."""
    return 2.0 * math.pi * freq_hz * cable_shunt_capacitance(cable)


def overhead_segment_matrix(
    phase_wires: dict[str, ConductorSpec],
    neutral_wires: dict[str, ConductorSpec],
    geometry: WireGeometry,
) -> PhaseImpedanceMatrix:
    """Per-mile phase matrix of an overhead construction (shunt = 0)."""
    return kron_reduce(build_primitive(phase_wires, neutral_wires, geometry))


def segment_matrices(seg, library) -> PhaseImpedanceMatrix:
    """Total series impedance and shunt, scaled by segment length.

    `library` supplies conductor(id), cable(id), and geometry(id)
    lookups (a loaded network model satisfies this).  Overhead segments
    carry zero shunt; underground segments get the concentric-neutral
    per-phase susceptance.
    """
    geometry = library.geometry(seg.geometry_id)
    if seg.construction == "overhead":
        per_mile = overhead_segment_matrix(
            {p: library.conductor(w) for p, w in seg.phase_wires.items()},
            {f"N{i+1}": library.conductor(w)
             for i, w in enumerate(seg.neutral_wires)},
            geometry,
        )
    else:
        per_mile = underground_segment_matrix(
            {p: library.cable(w) for p, w in seg.phase_wires.items()},
            geometry,
        )
    return per_mile.scaled(seg.length_miles)


def underground_segment_matrix(
    phase_cables: dict[str, CableSpec],
    geometry: WireGeometry,
) -> PhaseImpedanceMatrix:
    """Per-mile phase matrix of a concentric-neutral cable run.

    Series impedance uses the same primitive/Kron machinery with each
    cable's strands replaced by one equivalent neutral at the cable
    center (own core to own neutral spacing R_b; cable-to-cable spacings
    from the trench geometry).  Shunt is the per-phase diagonal
    susceptance, with no phase-to-phase coupling through the grounded
    concentric neutrals.
    """
    phases = list(phase_cables)
    self_overrides: dict[str, complex] = {}
    neutral_specs: dict[str, ConductorSpec] = {}
    distances = dict(geometry.distances)
    for ph, cable in phase_cables.items():
        nn = f"CN_{ph}"
        gmr_eq, r_eq = equivalent_neutral(cable)
        self_overrides[nn] = carson_self(r_eq, gmr_eq)
        neutral_specs[nn] = cable.strand
        # Neutral ring to its own core: R_b.  To any other cable's core
        # or neutral: the center-to-center trench spacing.
        distances[WireGeometry.pair(ph, nn)] = cable.r_b_in / INCHES_PER_FOOT
        for other in phases:
            if other == ph:
                continue
            d = geometry.distance(ph, other)
            distances[WireGeometry.pair(nn, other)] = d
            distances[WireGeometry.pair(nn, f"CN_{other}")] = d
    geom = WireGeometry(
        id=f"{geometry.id}+cn",
        positions=dict(geometry.positions),
        distances=distances,
        assumed=geometry.assumed,
    )
    prim = build_primitive(
        {ph: phase_cables[ph].core for ph in phases},
        neutral_specs,
        geom,
        self_overrides=self_overrides,
    )
    reduced = kron_reduce(prim)
    shunt = np.diag([cable_shunt_susceptance(phase_cables[ph]) for ph in phases])
    return PhaseImpedanceMatrix(reduced.phases, reduced.z_abc, shunt)
