"""Substation source, transformers, tap-changer control, capacitors, loads.

Device evaluation functions are pure; tap state lives in a frozen
TapChanger value that the time-series driver replaces between solver
iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .constants import SQRT3

PHASES = "ABC"

COLLAPSE_GUARD_PU = 0.5  # constant-power conversion refuses |v| below this


class VoltageCollapseError(RuntimeError):
    """Raised when a constant-power load sees a voltage below the guard."""


def canon_phases(phases: str) -> str:
    """Normalize a phase set to its canonical 'ABC'-ordered form."""
    seen = set(phases)
    if not seen or not seen.issubset(set(PHASES)):
        raise ValueError(f"invalid phase set {phases!r}")
    if len(seen) != len(phases):
        raise ValueError(f"duplicate phase in {phases!r}")
    return "".join(p for p in PHASES if p in seen)


@dataclass(frozen=True)
class SourceSpec:
    """Sub-transmission equivalent: a swing source behind sequence impedances."""

    bus: str
    nominal_ll_voltage: float
    z1: complex              # positive-sequence, Ohm
    z0: complex              # zero-sequence, Ohm
    v_pu: float = 1.0
    s_base_kva: float = 10000.0

    def __post_init__(self) -> None:
        if self.nominal_ll_voltage <= 0:
            raise ValueError("source nominal voltage must be > 0")
        if self.z1.real < 0 or self.z0.real < 0:
            raise ValueError("source resistances must be >= 0")
        if self.z1.imag <= 0 or self.z0.imag <= 0:
            raise ValueError("source reactances must be > 0")
        if self.v_pu <= 0 or self.s_base_kva <= 0:
            raise ValueError("source v_pu and s_base_kva must be > 0")


@dataclass(frozen=True)
class TapChanger:
    """Three independent single-phase tap changers on a 120 V control base."""

    regulated_bus: str
    winding_kv: float = 7.9674
    winding_kva: float = 3500.0
    setpoint_v120: float = 123.0
    bandwidth_v120: float = 2.0
    vmax_v120: float = 129.0
    vmin_v120: float = 110.0
    steps: int = 16
    step_pct: float = 0.625
    taps: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self) -> None:
        lo = self.setpoint_v120 - self.bandwidth_v120 / 2.0
        hi = self.setpoint_v120 + self.bandwidth_v120 / 2.0
        if not (self.vmin_v120 <= lo and hi <= self.vmax_v120):
            raise ValueError("regulator band must lie within [vmin, vmax]")
        if self.steps < 1 or self.step_pct <= 0:
            raise ValueError("regulator steps and step size must be positive")
        if any(abs(t) > self.steps for t in self.taps):
            raise ValueError(f"tap position outside +/-{self.steps}")

    @property
    def step_voltage(self) -> float:
        """Volts per tap on the 120 V base."""
        return 120.0 * self.step_pct / 100.0

    def ratio(self, phase_index: int) -> float:
        """Voltage boost multiplier of one phase at its current tap."""
        return 1.0 + self.taps[phase_index] * self.step_pct / 100.0


@dataclass(frozen=True)
class TapMove:
    phase: str
    old_tap: int
    new_tap: int
    trigger_v120: float


@dataclass(frozen=True)
class SubstationTransformer:
    """Delta primary / grounded-wye secondary step-down unit with optional LTC."""

    id: str
    from_bus: str
    to_bus: str
    rating_kva: float
    hi_ll_voltage: float
    lo_ll_voltage: float
    r_pct: float
    x_pct: float
    connection: str = "delta-gwye"
    regulator: TapChanger | None = None

    def __post_init__(self) -> None:
        if self.rating_kva <= 0:
            raise ValueError(f"transformer {self.id}: rating must be > 0")
        if self.r_pct <= 0 or self.x_pct <= 0:
            raise ValueError(f"transformer {self.id}: impedance %% must be > 0")
        if self.connection not in ("delta-gwye", "gwye-gwye"):
            raise ValueError(f"transformer {self.id}: unsupported connection")


@dataclass(frozen=True)
class DistributionTransformerSpec:
    """Secondary service transformer, modeled as one aggregate two-winding branch.

    Single-phase center-tapped units serve their aggregated customers at
    240 V; the 120/240 V triplex split is not modeled.
    """

    id: str
    bus: str
    secondary_bus: str
    phases: str              # 'ABC' or one of 'A'/'B'/'C'
    rating_kva: float
    r_pct: float
    x_pct: float
    secondary_voltage: str = "120/240"   # or '240' (three-phase)

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", canon_phases(self.phases))
        if len(self.phases) not in (1, 3):
            raise ValueError(f"transformer {self.id}: must serve 1 or 3 phases")
        if self.rating_kva <= 0:
            raise ValueError(f"transformer {self.id}: rating must be > 0")
        if self.r_pct <= 0 or self.x_pct <= 0:
            raise ValueError(f"transformer {self.id}: R%% and X%% must be > 0")
        if self.secondary_voltage not in ("240", "120/240"):
            raise ValueError(f"transformer {self.id}: unknown secondary class")

    @property
    def service_voltage(self) -> float:
        """Aggregate service voltage at the secondary terminal, volts."""
        return 240.0


@dataclass(frozen=True)
class CapacitorBank:
    id: str
    bus: str
    phases: str
    kvar: float              # total installation rating
    connection: str = "gwye"
    state: str = "on"

    def __post_init__(self) -> None:
        object.__setattr__(self, "phases", canon_phases(self.phases))
        if self.kvar <= 0:
            raise ValueError(f"capacitor {self.id}: rating must be > 0")
        if self.state not in ("on", "off"):
            raise ValueError(f"capacitor {self.id}: state must be on/off")


@dataclass(frozen=True)
class LoadSnapshot:
    """Constant-power demand of one load point for one interval."""

    load_point: str
    p_kw: dict[str, float]     # per phase
    q_kvar: dict[str, float]

    def __post_init__(self) -> None:
        if any(p < 0 for p in self.p_kw.values()):
            raise ValueError(f"load {self.load_point}: P must be >= 0")


def sequence_to_phase(z1: complex, z0: complex) -> np.ndarray:
    """Phase-frame 3x3 impedance of a balanced element given Z1 and Z0."""
    diag = (z0 + 2.0 * z1) / 3.0
    off = (z0 - z1) / 3.0
    return np.full((3, 3), off, dtype=complex) + np.eye(3) * (diag - off)


@dataclass(frozen=True)
class TransformerBranch:
    """Series impedance of a two-winding unit in the bases a solver needs."""

    z_pu_nameplate: complex
    z_pu_system: complex
    z_ohms_secondary: complex   # per served phase, referred to the secondary
    phase_shift_deg: float      # secondary relative to primary
    blocks_zero_sequence: bool


def transformer_branch(
    rating_kva: float,
    r_pct: float,
    x_pct: float,
    secondary_ll_voltage: float,
    s_base_kva: float,
    connection: str = "gwye-gwye",
) -> TransformerBranch:
    """Convert nameplate percent impedance into solver-ready quantities.

    Percent values are on the unit's own kVA base; the system-base value
    scales linearly with s_base_kva.  The delta-gwye connection carries
    the -30 degree secondary shift and blocks zero-sequence flow into
    the delta side.
    """
    if rating_kva <= 0:
        raise ValueError("transformer rating must be > 0")
    z_np = complex(r_pct, x_pct) / 100.0
    z_sys = z_np * (s_base_kva / rating_kva)
    # Winding base: V^2/S holds for both the single-phase service voltage
    # and the per-phase wye equivalent of a three-phase unit.
    z_base = secondary_ll_voltage ** 2 / (rating_kva * 1000.0)
    delta = connection == "delta-gwye"
    return TransformerBranch(
        z_pu_nameplate=z_np,
        z_pu_system=z_sys,
        z_ohms_secondary=z_np * z_base,
        phase_shift_deg=-30.0 if delta else 0.0,
        blocks_zero_sequence=delta,
    )


def regulator_step(
    state: TapChanger, measured_v120: np.ndarray
) -> tuple[TapChanger, tuple[TapMove, ...]]:
    """One control pass of the three independent tap changers.

    Per phase: below the band raise one step, above it lower one step,
    saturating at the tap limits and never commanding a position whose
    predicted voltage leaves [vmin, vmax].  Returns the new state and
    the moves made; the step changed the state iff moves is nonempty.
    """
    lo = state.setpoint_v120 - state.bandwidth_v120 / 2.0
    hi = state.setpoint_v120 + state.bandwidth_v120 / 2.0
    per_step = state.step_pct / 100.0
    new_taps = list(state.taps)
    moves: list[TapMove] = []
    for i, phase in enumerate(PHASES):
        v = float(measured_v120[i])
        if v <= 0:
            raise ValueError(f"measured voltage on phase {phase} must be > 0")
        tap = state.taps[i]
        if v < lo and tap < state.steps and v * (1.0 + per_step) <= state.vmax_v120:
            new_taps[i] = tap + 1
        elif v > hi and tap > -state.steps and v * (1.0 - per_step) >= state.vmin_v120:
            new_taps[i] = tap - 1
        if new_taps[i] != tap:
            moves.append(TapMove(phase, tap, new_taps[i], v))
    if not moves:
        return state, ()
    return replace(state, taps=tuple(new_taps)), tuple(moves)


def capacitor_injection(
    bank: CapacitorBank, v: np.ndarray, v_base_ln: float
) -> np.ndarray:
    """Per-phase current drawn by a grounded-wye bank (amps, load convention).

    Constant susceptance sized from the kVAr rating at nominal voltage,
    so delivered reactive power scales with |v|^2.  An off bank draws
    nothing.
    """
    n = len(bank.phases)
    if bank.state != "on":
        return np.zeros(n, dtype=complex)
    b = (bank.kvar * 1000.0 / n) / v_base_ln ** 2
    return 1j * b * np.asarray(v, dtype=complex)


def load_current(
    s_va: np.ndarray, v: np.ndarray, v_base_ln: float | np.ndarray
) -> np.ndarray:
    """Constant-power conversion i = conj(S / v) per phase.

    Refuses voltages below the collapse guard so a diverging solve
    surfaces as a diagnostic instead of silently blowing up.
    """
    s = np.asarray(s_va, dtype=complex)
    v = np.asarray(v, dtype=complex)
    active = np.abs(s) > 0
    vmag = np.abs(v)
    low = active & (vmag < COLLAPSE_GUARD_PU * np.asarray(v_base_ln))
    if np.any(low):
        raise VoltageCollapseError(
            "constant-power load at |v| below "
            f"{COLLAPSE_GUARD_PU:.2f} p.u. (min {vmag[low].min():.1f} V)"
        )
    out = np.zeros_like(s)
    out[active] = np.conj(s[active] / v[active])
    return out
