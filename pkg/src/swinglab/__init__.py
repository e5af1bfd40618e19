"""Multi-swing transient stability of a synchronous generator next to a grid-following IBR."""

from .energy_analysis import analyze_trace, classify_stability, cycle_energy_report, segment_swings
from .network import FaultSpec, RawNetworkParams, faulted_equivalent, reduce_network
from .scenario_lab import builtin_case, list_cases, stabilizing_damping, sweep
from .simulator import Scenario, Trace, run_simulation

__all__ = [
    "FaultSpec",
    "RawNetworkParams",
    "Scenario",
    "Trace",
    "analyze_trace",
    "builtin_case",
    "classify_stability",
    "cycle_energy_report",
    "faulted_equivalent",
    "list_cases",
    "reduce_network",
    "run_simulation",
    "segment_swings",
    "stabilizing_damping",
    "sweep",
]
