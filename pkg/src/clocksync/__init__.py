"""Discrete-event simulator and analysis toolkit for distributed clock
synchronization over directed lossy networks.

Nodes carry affine clocks with drift, offset and reading noise, and
exchange broadcast-gossip messages subject to random delays and dropouts.
The package provides:

- :mod:`clocksync.clock` -- ground-truth clock and delay models,
- :mod:`clocksync.topology` -- directed geometric networks and their
  expected update matrices,
- :mod:`clocksync.engine` -- deterministic event-driven simulator,
- :mod:`clocksync.sync` -- drift and offset correction algorithms,
- :mod:`clocksync.analysis` -- spectral, Lyapunov, rate-bound and
  trace-metric diagnostics,
- :mod:`clocksync.experiments` -- experiment configs, presets and the
  command line runner.
"""

from clocksync.clock import ClockParams, CorrectionState, DelayModel
from clocksync.topology import Arc, Network, ProbabilityProfile
from clocksync.sync import (
    DriftA,
    DriftB,
    DriftC,
    OffsetA,
    OffsetB,
    StepSchedule,
    SyncConfig,
)
from clocksync.engine import SimResult, Trace, run

__all__ = [
    "Arc",
    "ClockParams",
    "CorrectionState",
    "DelayModel",
    "DriftA",
    "DriftB",
    "DriftC",
    "Network",
    "OffsetA",
    "OffsetB",
    "ProbabilityProfile",
    "SimResult",
    "StepSchedule",
    "SyncConfig",
    "Trace",
    "run",
]

__version__ = "0.1.0"
