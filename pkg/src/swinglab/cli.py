"""Command-line front end: ``swinglab run | sweep | analyze | list-cases``.

Exit status of ``run`` and ``analyze``: 0 Stable, 2 Unstable, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from . import scenario_lab as lab
from .energy_analysis import EnergyReference, Outcome, TraceAnalysis, analyze_trace
from .errors import SwingLabError
from .fileio import (
    read_scenario,
    read_trace_csv,
    write_json,
    write_phase_csv,
    write_scenario,
    write_trace_csv,
)
from .simulator import Scenario, SimulationFailed, Trace, run_simulation

EXIT_STABLE, EXIT_ERROR, EXIT_UNSTABLE = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    scenario_path: Path | None
    case: lab.CaseId | None
    dt: float | None
    t_end: float | None
    out_dir: Path
    emit_trace: bool = True
    emit_phase: bool = True
    emit_cycles: bool = True

    def __post_init__(self):
        if (self.scenario_path is None) == (self.case is None):
            raise ValueError("give exactly one of a scenario file or a builtin case")


def _fail(msg: str) -> int:
    print(f"swinglab: error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def load_scenario(cfg: RunConfig) -> Scenario:
    if cfg.scenario_path is not None:
        scenario = read_scenario(cfg.scenario_path)
    else:
        scenario = lab.builtin_case(cfg.case)
    overrides = {}
    if cfg.dt is not None:
        overrides["dt"] = cfg.dt
    if cfg.t_end is not None:
        overrides["t_end"] = cfg.t_end
    return replace(scenario, **overrides) if overrides else scenario


def _exit_for(analysis: TraceAnalysis) -> int:
    return EXIT_UNSTABLE if analysis.verdict.outcome is Outcome.UNSTABLE else EXIT_STABLE


def reference_dict(ref: EnergyReference, delta_uep: float) -> dict:
    return dict(asdict(ref), delta_uep=delta_uep)


def summary_dict(trace: Trace, analysis: TraceAnalysis) -> dict:
    eq = trace.equilibrium
    return dict(
        name=trace.scenario.name if trace.scenario else "",
        **analysis.verdict.to_dict(),
        delta_s=eq.delta_s,
        v_crit=eq.v_crit,
        diverged=trace.diverged,
        error=trace.error,
        events=[dict(t=t, event=e) for t, e in trace.events],
        energy_reference=reference_dict(trace.energy_ref, eq.delta_uep),
        swings=[dict(index=s.index, direction=s.direction.value, t_start=s.t_start,
                     t_end=s.t_end, delta_extreme=s.delta_extreme, v_at_end=s.v_at_end)
                for s in analysis.swings],
        cycles=[c.to_dict() for c in analysis.cycles],
    )


def cmd_run(cfg: RunConfig) -> int:
    try:
        scenario = load_scenario(cfg)
    except SwingLabError as exc:
        return _fail(str(exc))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_scenario(scenario, cfg.out_dir / "scenario.toml")
    failed = None
    try:
        trace = run_simulation(scenario)
    except SimulationFailed as exc:
        trace, failed = exc.trace, exc
    except SwingLabError as exc:
        return _fail(str(exc))

    if cfg.emit_trace:
        write_trace_csv(trace, cfg.out_dir / "trace.csv")
    if cfg.emit_phase:
        write_phase_csv(trace, cfg.out_dir / "phase.csv")
    if len(trace) < 2:
        return _fail(f"simulation failed before producing a trace: {failed}")
    analysis = analyze_trace(trace, trace.energy_ref, trace.equilibrium.delta_uep,
                             diverged=trace.diverged)
    summary = summary_dict(trace, analysis)
    write_json(summary, cfg.out_dir / "summary.json")
    if cfg.emit_cycles:
        write_json([c.to_dict() for c in analysis.cycles], cfg.out_dir / "cycles.json")
    if failed is not None:
        return _fail(f"simulation aborted at t={trace.t[-1]:.4f} s ({failed}); "
                     f"partial outputs in {cfg.out_dir}")
    v = analysis.verdict
    idx = "" if v.instability_swing_index is None else f" (swing {v.instability_swing_index})"
    print(f"{scenario.name or 'scenario'}: {v.outcome.value}{idx}; outputs in {cfg.out_dir}")
    return _exit_for(analysis)


# --- sweep ------------------------------------------------------------------

_AXIS_FLAGS = {"sigma": "sigma", "rate": "recovery_rate", "r_f": "r_f", "d": "d"}


def parse_range(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop inclusive) or a comma list; ``inf`` allowed in lists."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range '{text}' must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)):
            raise ValueError(f"range '{text}' must be finite")
        if step <= 0 or stop < start:
            raise ValueError(f"range '{text}' is empty")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + k * step, 12) for k in range(n))
    values = tuple(float(p) for p in text.split(",") if p.strip())
    if not values:
        raise ValueError(f"range '{text}' is empty")
    return values


def write_map_csv(smap: lab.StabilityMap, path: Path) -> None:
    names = [name for name, _ in smap.axes]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["outcome", "instability_swing_index", "max_v_pu", "error"])
        for c in smap.cells:
            params = dict(c.params)
            w.writerow([repr(params[n]) for n in names]
                       + [c.outcome,
                          "" if c.instability_swing_index is None else c.instability_swing_index,
                          repr(c.max_v), c.error or ""])


def cmd_sweep(cfg: RunConfig, axes: dict[str, tuple[float, ...]], workers: int | None) -> int:
    try:
        base = load_scenario(cfg)
        smap = lab.sweep(base, axes, workers=workers)
    except (SwingLabError, ValueError) as exc:
        return _fail(str(exc))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_map_csv(smap, cfg.out_dir / "map.csv")
    write_json(smap.to_dict(), cfg.out_dir / "map.json")
    counts: dict[str, int] = {}
    for c in smap.cells:
        counts[c.outcome] = counts.get(c.outcome, 0) + 1
    tally = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    print(f"{len(smap.cells)} cells ({tally}); outputs in {cfg.out_dir}")
    return EXIT_STABLE


# --- analyze ----------------------------------------------------------------

def infer_reference(table, t_j: float, d: float, f_g: float) -> tuple[EnergyReference, float]:
    """Reference from the first sample, assumed to sit at the pre-fault SEP."""
    delta_s = float(table.delta[0])
    s = math.sin(delta_s)
    if abs(s) < 1e-9:
        raise SwingLabError("cannot infer the power-curve amplitude at delta_s = 0; "
                            "pass --reference")
    ref = EnergyReference(delta_s=delta_s, p_w_ss=float(table.p_w[0]), p_m=float(table.p_e[0]),
                          amp=float(table.p_sg[0]) / s, omega_g=2.0 * math.pi * f_g,
                          t_j=t_j, d=d)
    return ref, math.pi - delta_s


def load_reference(path: Path) -> tuple[EnergyReference, float]:
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SwingLabError(f"cannot read reference '{path}': {exc}") from exc
    data = data.get("energy_reference", data)
    fields = ("delta_s", "p_w_ss", "p_m", "amp", "omega_g", "t_j", "d")
    missing = [f for f in fields + ("delta_uep",) if f not in data]
    if missing:
        raise SwingLabError(f"reference '{path}' lacks: {', '.join(missing)}")
    ref = EnergyReference(**{f: float(data[f]) for f in fields})
    return ref, float(data["delta_uep"])


def cmd_analyze(trace_path: Path, reference: Path | None, out_dir: Path | None,
                t_j: float, d: float, f_g: float) -> int:
    try:
        table = read_trace_csv(trace_path)
        if reference is None and (trace_path.parent / "summary.json").exists():
            reference = trace_path.parent / "summary.json"
        if reference is not None:
            ref, delta_uep = load_reference(reference)
        else:
            ref, delta_uep = infer_reference(table, t_j, d, f_g)
        diverged = bool(len(table)) and abs(table.delta[-1]) > 4.0 * math.pi
        analysis = analyze_trace(table, ref, delta_uep, diverged=diverged)
    except SwingLabError as exc:
        return _fail(str(exc))
    out = out_dir or trace_path.parent
    out.mkdir(parents=True, exist_ok=True)
    write_json([c.to_dict() for c in analysis.cycles], out / "cycles.json")
    write_json(analysis.verdict.to_dict(), out / "verdict.json")
    v = analysis.verdict
    idx = "" if v.instability_swing_index is None else f" (swing {v.instability_swing_index})"
    print(f"{trace_path}: {v.outcome.value}{idx}, {len(analysis.cycles)} cycles")
    return _exit_for(analysis)


def cmd_list_cases(as_json: bool) -> int:
    rows = lab.list_cases()
    if as_json:
        print(json.dumps([{k: (str(v) if isinstance(v, float) and math.isinf(v) else v)
                           for k, v in r.items()} for r in rows], indent=2))
        return EXIT_STABLE
    print(f"{'case':>4} {'var':>3} {'IBR MW':>7} {'SG MW':>6} {'r_f ohm':>7} "
          f"{'sigma':>6} {'rate':>6}")
    for r in rows:
        print(f"{r['case']:>4} {r['variant']:>3} {r['ibr_mw']:>7g} {r['sg_mw']:>6g} "
              f"{r['r_f_ohm']:>7g} {r['sigma']:>6g} {r['recovery_rate']:>6g}")
    print("sigma and rate are on the 600 MVA IBR rating")
    return EXIT_STABLE


# --- argument parsing -------------------------------------------------------

def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--case", type=int, help="builtin study case 1..7")
    src.add_argument("--scenario", type=Path, help="scenario file (flat TOML)")
    p.add_argument("--variant", type=int, default=0, help="variant of the builtin case")
    p.add_argument("--dt", type=float, help="override the step size [s]")
    p.add_argument("--t-end", type=float, help="override the end time [s]")
    p.add_argument("--out", type=Path, default=Path("swinglab-out"), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swinglab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="simulate one scenario")
    _add_source(run)
    run.add_argument("--no-trace", action="store_true", help="skip trace.csv")
    run.add_argument("--no-phase", action="store_true", help="skip phase.csv")
    run.add_argument("--no-cycles", action="store_true", help="skip cycles.json")

    sw = sub.add_parser("sweep", help="stability map over parameter grids")
    _add_source(sw)
    sw.add_argument("--sigma", help="sigma grid on the IBR rating, start:stop:step or list")
    sw.add_argument("--rate", help="recovery-rate grid [pu/s on the IBR rating]")
    sw.add_argument("--r_f", "--r-f", dest="r_f", help="fault resistance grid [ohm]")
    sw.add_argument("--d", help="SG damping grid")
    sw.add_argument("--workers", type=int, help="parallel jobs (default: SWINGLAB_THREADS)")

    an = sub.add_parser("analyze", help="energy ledger and verdict for a stored trace")
    an.add_argument("trace", type=Path)
    an.add_argument("--reference", type=Path,
                    help="JSON with the energy reference (default: sibling summary.json)")
    an.add_argument("--out", type=Path, help="output directory (default: next to the trace)")
    an.add_argument("--t-j", type=float, default=8.0, help="inertia when inferring [s]")
    an.add_argument("--d", type=float, default=10.0, help="damping when inferring")
    an.add_argument("--f-g", type=float, default=50.0, help="grid frequency when inferring")

    lc = sub.add_parser("list-cases", help="print the builtin study cases")
    lc.add_argument("--json", action="store_true")
    return parser


def _run_config(args, **flags) -> RunConfig:
    case = None
    if args.case is not None:
        case = lab.CaseId(args.case, args.variant)
    return RunConfig(scenario_path=args.scenario, case=case, dt=args.dt, t_end=args.t_end,
                     out_dir=args.out, **flags)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "list-cases":
        return cmd_list_cases(args.json)
    if args.verb == "analyze":
        return cmd_analyze(args.trace, args.reference, args.out, args.t_j, args.d, args.f_g)
    try:
        if args.verb == "run":
            cfg = _run_config(args, emit_trace=not args.no_trace, emit_phase=not args.no_phase,
                              emit_cycles=not args.no_cycles)
            return cmd_run(cfg)
        cfg = _run_config(args)
        axes = {}
        for flag, axis in _AXIS_FLAGS.items():
            text = getattr(args, flag)
            if text is not None:
                axes[axis] = parse_range(text)
        if not axes:
            return _fail("sweep needs at least one of --sigma, --rate, --r_f, --d")
    except (SwingLabError, ValueError) as exc:
        return _fail(str(exc))
    return cmd_sweep(cfg, axes, args.workers)


if __name__ == "__main__":
    sys.exit(main())
