"""Quasi-static time-series simulator for unbalanced radial distribution feeders."""

__version__ = "0.1.0"

from .model import (                                   # noqa: F401
    Bus,
    LineSegment,
    LoadPoint,
    ModelError,
    NetworkModel,
    SwitchState,
    TopologyReport,
    apply_switching,
    load_model,
    save_model,
    validate_radiality,
)
from .solver import (                                  # noqa: F401
    MismatchAudit,
    SnapshotInput,
    SnapshotSolution,
    SolveOptions,
    audit_mismatch,
    network_ordering,
    solve_snapshot,
)
