"""Built-in study cases and parameter sweeps.

The study system: SG branch -j2.18 pu, double-circuit grid line -j1.08 pu in
total, infinite bus 1 pu at 50 Hz, 1000 MVA base, SG with T_J = 8 s and
D = 10.  A three-phase fault on one grid circuit at t = 0.5 s is cleared at
t = 0.7 s.

The seven cases fix the dispatch, the fault resistance and a pair of
(sigma, recovery rate) settings that are compared against each other.  Sigma
and the recovery rate are quoted on the IBR's own 600 MVA rating, as are the
converter current ceiling and droop gain; ``builtin_case`` converts all of
them to the 1000 MVA system base used by the simulator.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from .energy_analysis import Outcome, classify_stability, segment_swings
from .errors import NoConvergence, UnknownCase
from .ibr_control import IbrParams
from .network import FaultSpec, RawNetworkParams
from .simulator import MachineSetup, Scenario, SimulationFailed, run_simulation

IBR_RATING_MVA = 600.0
SYSTEM_BASE_MVA = 1000.0

# converter settings on the IBR rating
DEFAULT_I_MAX = 1.2
DEFAULT_K_Q = 2.0
DEFAULT_U_ENTER = 0.9
DEFAULT_U_EXIT = 0.9


@dataclass(frozen=True)
class CaseRow:
    number: int
    ibr_mw: float
    sg_mw: float
    r_f_ohm: float
    sigmas: tuple[float, ...]
    rates: tuple[float, ...]

    @property
    def n_variants(self) -> int:
        return max(len(self.sigmas), len(self.rates))

    def variant(self, k: int) -> tuple[float, float]:
        sigma = self.sigmas[k] if len(self.sigmas) > 1 else self.sigmas[0]
        rate = self.rates[k] if len(self.rates) > 1 else self.rates[0]
        return sigma, rate


INF = math.inf
CASES: dict[int, CaseRow] = {
    1: CaseRow(1, 650.0, 50.0, 0.0, (0.5, 0.7), (INF,)),
    2: CaseRow(2, 650.0, 50.0, 0.0, (0.0, 0.1), (INF,)),
    3: CaseRow(3, 450.0, 250.0, 5.0, (0.7, 1.2), (INF,)),
    4: CaseRow(4, 450.0, 250.0, 25.0, (0.0, 0.5), (INF,)),
    5: CaseRow(5, 650.0, 50.0, 0.0, (0.7,), (INF, 5.0)),
    6: CaseRow(6, 650.0, 50.0, 0.0, (0.5,), (INF, 1.0)),
    7: CaseRow(7, 650.0, 50.0, 0.0, (0.2,), (INF, 0.4)),
}


@dataclass(frozen=True)
class CaseId:
    number: int
    variant: int = 0

    def __post_init__(self):
        if self.number not in CASES:
            raise UnknownCase(f"no study case {self.number}; known: {sorted(CASES)}")
        if not 0 <= self.variant < CASES[self.number].n_variants:
            raise UnknownCase(f"case {self.number} has variants 0..{CASES[self.number].n_variants - 1}")


def table_network(z_base_ohm: float = 52.9) -> RawNetworkParams:
    return RawNetworkParams(y_s=-2.18j, y_g=-1.08j, y_w=-10j, u_g=1.0 + 0j, f_g=50.0,
                            s_base_mva=SYSTEM_BASE_MVA, z_base_ohm=z_base_ohm)


def ibr_params_from_rating(sigma: float, rate: float, i_max: float = DEFAULT_I_MAX,
                           k_q: float = DEFAULT_K_Q, u_enter: float = DEFAULT_U_ENTER,
                           u_exit: float = DEFAULT_U_EXIT,
                           rating_mva: float = IBR_RATING_MVA,
                           base_mva: float = SYSTEM_BASE_MVA) -> IbrParams:
    """Controller settings given on the IBR rating, returned on the system base."""
    scale = rating_mva / base_mva
    return IbrParams(sigma=sigma * scale, recovery_rate=rate * scale, k_q=k_q * scale,
                     u_enter=u_enter, u_exit=u_exit, i_max=i_max * scale)


def builtin_case(case: CaseId | int, variant: int | None = None, **overrides) -> Scenario:
    """Scenario for one variant of a study case.

    ``overrides`` replace top-level Scenario fields (e.g. ``t_end``, ``dt``).
    """
    if not isinstance(case, CaseId):
        case = CaseId(int(case), 0 if variant is None else variant)
    row = CASES[case.number]
    sigma, rate = row.variant(case.variant)
    scenario = Scenario(
        network=table_network(),
        machine=MachineSetup(p_mw=row.sg_mw, t_j=8.0, d=10.0, x_d_prime=0.15),
        p_ibr_mw=row.ibr_mw,
        ibr=ibr_params_from_rating(sigma, rate),
        fault=FaultSpec(r_f_ohm=row.r_f_ohm, lam=0.5, t_on=0.5, t_clear=0.7),
        t_end=10.0,
        dt=1e-3,
        name=f"case{case.number}-v{case.variant}",
    )
    return replace(scenario, **overrides) if overrides else scenario


def list_cases() -> list[dict]:
    out = []
    for row in CASES.values():
        for k in range(row.n_variants):
            sigma, rate = row.variant(k)
            out.append(dict(case=row.number, variant=k, ibr_mw=row.ibr_mw, sg_mw=row.sg_mw,
                            r_f_ohm=row.r_f_ohm, sigma=sigma, recovery_rate=rate))
    return out


# --- sweeps -----------------------------------------------------------------

SWEEP_AXES = ("sigma", "recovery_rate", "r_f", "d")


def apply_axis(scenario: Scenario, axis: str, value: float) -> Scenario:
    """Set one sweep parameter.  sigma and recovery_rate are on the IBR rating."""
    scale = IBR_RATING_MVA / scenario.network.s_base_mva
    if axis == "sigma":
        return replace(scenario, ibr=replace(scenario.ibr, sigma=value * scale))
    if axis == "recovery_rate":
        return replace(scenario, ibr=replace(scenario.ibr, recovery_rate=value * scale))
    if axis == "r_f":
        return replace(scenario, fault=replace(scenario.fault, r_f_ohm=value))
    if axis == "d":
        return replace(scenario, machine=replace(scenario.machine, d=value))
    raise ValueError(f"unknown sweep axis '{axis}'; expected one of {SWEEP_AXES}")


@dataclass(frozen=True)
class Cell:
    params: tuple[tuple[str, float], ...]
    outcome: str
    instability_swing_index: int | None
    max_v: float
    error: str | None = None

    @property
    def unstable(self) -> bool:
        return self.outcome == Outcome.UNSTABLE.value

    def to_dict(self) -> dict:
        return dict(**dict(self.params), outcome=self.outcome,
                    instability_swing_index=self.instability_swing_index,
                    max_v=self.max_v, error=self.error)


@dataclass(frozen=True)
class StabilityMap:
    axes: tuple[tuple[str, tuple[float, ...]], ...]
    cells: tuple[Cell, ...]

    def cell(self, **coords: float) -> Cell:
        key = tuple(sorted(coords.items()))
        for c in self.cells:
            if tuple(sorted(c.params)) == key:
                return c
        raise KeyError(coords)

    def to_dict(self) -> dict:
        return dict(axes={k: list(v) for k, v in self.axes},
                    cells=[c.to_dict() for c in self.cells])


def evaluate(scenario: Scenario, params: tuple[tuple[str, float], ...] = ()) -> Cell:
    """Run one scenario and summarise its verdict; failures become a Failed cell."""
    try:
        trace = run_simulation(scenario)
    except SimulationFailed as exc:
        return Cell(params, "Failed", None, _max_v(exc.trace.v), error=str(exc))
    except NoConvergence as exc:
        return Cell(params, "Failed", None, math.nan, error=str(exc))
    swings = segment_swings(trace)
    verdict = classify_stability(trace, trace.equilibrium, swings)
    return Cell(params, verdict.outcome.value, verdict.instability_swing_index, _max_v(trace.v))


def _max_v(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    v = v[np.isfinite(v)]
    return float(v.max()) if v.size else math.nan


def _job(args):
    scenario, params = args
    return evaluate(scenario, params)


def sweep_threads() -> int:
    raw = os.environ.get("SWINGLAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def sweep(base: Scenario, axes: Mapping[str, Iterable[float]],
          workers: int | None = None) -> StabilityMap:
    """Run the full grid over ``axes`` (each a finite sequence of values).

    Cells come back in row-major order of the axes as given, independent of
    how the runs were scheduled.  ``workers`` defaults to
    ``SWINGLAB_THREADS`` (or the CPU count).
    """
    grid: list[tuple[str, tuple[float, ...]]] = []
    for name, values in axes.items():
        if name not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis '{name}'; expected one of {SWEEP_AXES}")
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ValueError(f"axis '{name}' is empty")
        grid.append((name, vals))

    jobs = []
    for point in product(*(vals for _, vals in grid)):
        params = tuple(zip((name for name, _ in grid), point))
        scenario = base
        for name, value in params:
            scenario = apply_axis(scenario, name, value)
        jobs.append((scenario, params))

    n = workers if workers is not None else sweep_threads()
    if n <= 1 or len(jobs) <= 1:
        cells = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(n, len(jobs))) as pool:
            cells = list(pool.map(_job, jobs))
    return StabilityMap(axes=tuple(grid), cells=tuple(cells))


def stabilizing_damping(scenario: Scenario, d_low: float | None = None, d_high: float = 200.0,
                        tol: float = 0.05, max_iter: int = 40) -> float:
    """Smallest SG damping (to ``tol``) for which the scenario is Stable.

    Bisection between an unstable ``d_low`` (default: the scenario's own D)
    and a stable ``d_high``.  Raises ValueError if the bracket is invalid.
    """
    lo = scenario.machine.d if d_low is None else d_low

    def stable(d: float) -> bool:
        cell = evaluate(apply_axis(scenario, "d", d))
        return cell.outcome == Outcome.STABLE.value

    if stable(lo):
        raise ValueError(f"scenario is already stable at D={lo}")
    if not stable(d_high):
        raise ValueError(f"scenario still unstable at D={d_high}")
    hi = d_high
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if stable(mid):
            hi = mid
        else:
            lo = mid
    return hi
