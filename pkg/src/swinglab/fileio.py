"""Scenario files, trace CSVs and JSON reports.

Scenario files are flat TOML: one ``section.key_unit = value`` line per
field, units spelled out in the key, complex admittances split into
``_re_pu`` / ``_im_pu``.  Unknown or missing keys are rejected with the line
they occur on.  Floats are written with ``repr`` so that a scenario survives
a write/read cycle exactly.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
import tomli

from .errors import InvalidScenario, ScenarioFileError, SwingLabError, TraceSchemaError
from .ibr_control import IbrParams
from .network import FaultSpec, PostFaultTopology, RawNetworkParams
from .simulator import MachineSetup, Scenario

# --- scenario files ---------------------------------------------------------


@dataclass(frozen=True)
class _Key:
    name: str
    kind: type
    get: Callable[[Scenario], Any]
    required: bool = True


def _cplx(attr: str, part: str):
    return lambda s: getattr(getattr(s.network, attr), part)


_KEYS: tuple[_Key, ...] = (
    _Key("name", str, lambda s: s.name, required=False),
    _Key("t_end_s", float, lambda s: s.t_end),
    _Key("dt_s", float, lambda s: s.dt),
    _Key("d_omega0_pu", float, lambda s: s.d_omega0, required=False),
    _Key("freeze_ibr", bool, lambda s: s.freeze_ibr, required=False),
    _Key("network.y_s_re_pu", float, _cplx("y_s", "real")),
    _Key("network.y_s_im_pu", float, _cplx("y_s", "imag")),
    _Key("network.y_g_re_pu", float, _cplx("y_g", "real")),
    _Key("network.y_g_im_pu", float, _cplx("y_g", "imag")),
    _Key("network.y_w_re_pu", float, _cplx("y_w", "real"), required=False),
    _Key("network.y_w_im_pu", float, _cplx("y_w", "imag"), required=False),
    _Key("network.u_g_re_pu", float, _cplx("u_g", "real"), required=False),
    _Key("network.u_g_im_pu", float, _cplx("u_g", "imag"), required=False),
    _Key("network.f_g_hz", float, lambda s: s.network.f_g, required=False),
    _Key("network.s_base_mva", float, lambda s: s.network.s_base_mva, required=False),
    _Key("network.z_base_ohm", float, lambda s: s.network.z_base_ohm, required=False),
    _Key("machine.p_mw", float, lambda s: s.machine.p_mw),
    _Key("machine.t_j_s", float, lambda s: s.machine.t_j),
    _Key("machine.d_pu", float, lambda s: s.machine.d),
    _Key("machine.x_d_prime_pu", float, lambda s: s.machine.x_d_prime, required=False),
    _Key("ibr.p_mw", float, lambda s: s.p_ibr_mw),
    _Key("ibr.sigma_pu", float, lambda s: s.ibr.sigma),
    _Key("ibr.recovery_rate_pu_per_s", float, lambda s: s.ibr.recovery_rate),
    _Key("ibr.k_q_pu", float, lambda s: s.ibr.k_q, required=False),
    _Key("ibr.u_enter_pu", float, lambda s: s.ibr.u_enter, required=False),
    _Key("ibr.u_exit_pu", float, lambda s: s.ibr.u_exit, required=False),
    _Key("ibr.i_max_pu", float, lambda s: s.ibr.i_max, required=False),
    _Key("fault.enabled", bool, lambda s: s.fault is not None, required=False),
    _Key("fault.r_f_ohm", float, lambda s: s.fault.r_f_ohm, required=False),
    _Key("fault.lam", float, lambda s: s.fault.lam, required=False),
    _Key("fault.t_on_s", float, lambda s: s.fault.t_on, required=False),
    _Key("fault.t_clear_s", float, lambda s: s.fault.t_clear, required=False),
    _Key("fault.post_fault_topology", str, lambda s: s.fault.post_fault_topology.value,
         required=False),
)
_BY_NAME = {k.name: k for k in _KEYS}
SCENARIO_KEYS = tuple(_BY_NAME)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)  # repr of inf is "inf", valid TOML


def scenario_to_text(scenario: Scenario) -> str:
    lines = ["# swinglab scenario; per-unit values on the system MVA base"]
    for key in _KEYS:
        if key.name.startswith("fault.") and key.name != "fault.enabled" and scenario.fault is None:
            continue
        lines.append(f"{key.name} = {_toml_value(key.get(scenario))}")
    return "\n".join(lines) + "\n"


def write_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(scenario_to_text(scenario))


def _flatten(table: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in table.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, name + "."))
        else:
            out[name] = v
    return out


def _line_of(text: str, key: str) -> int | None:
    pattern = re.compile(r"^\s*" + r"\s*\.\s*".join(map(re.escape, key.split("."))) + r"\s*=")
    for n, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return n
    return None


def parse_scenario(text: str) -> Scenario:
    """Build a Scenario from scenario-file text.

    Raises ScenarioFileError carrying the offending line and key.
    """
    try:
        table = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ScenarioFileError(str(exc), line=int(m.group(1)) if m else None) from exc

    flat = _flatten(table)
    values: dict[str, Any] = {}
    for name, raw in flat.items():
        key = _BY_NAME.get(name)
        if key is None:
            raise ScenarioFileError("unknown key", line=_line_of(text, name), key=name)
        if key.kind is float and isinstance(raw, (int, float)) and not isinstance(raw, bool):
            values[name] = float(raw)
        elif isinstance(raw, key.kind):
            values[name] = raw
        else:
            raise ScenarioFileError(f"expected {key.kind.__name__}, got {type(raw).__name__}",
                                    line=_line_of(text, name), key=name)

    has_fault = values.get("fault.enabled", True)
    for key in _KEYS:
        needed = key.required or (has_fault and key.name in ("fault.t_on_s", "fault.t_clear_s"))
        if needed and key.name not in values:
            raise ScenarioFileError("missing required key", key=key.name)

    def get(name, default):
        return values.get(name, default)

    def first_line(prefix):
        lines = [_line_of(text, k) for k in values if k.startswith(prefix)]
        lines = [n for n in lines if n is not None]
        return min(lines) if lines else None

    try:
        network = RawNetworkParams(
            y_s=complex(values["network.y_s_re_pu"], values["network.y_s_im_pu"]),
            y_g=complex(values["network.y_g_re_pu"], values["network.y_g_im_pu"]),
            y_w=complex(get("network.y_w_re_pu", 0.0), get("network.y_w_im_pu", -10.0)),
            u_g=complex(get("network.u_g_re_pu", 1.0), get("network.u_g_im_pu", 0.0)),
            f_g=get("network.f_g_hz", 50.0),
            s_base_mva=get("network.s_base_mva", 1000.0),
            z_base_ohm=get("network.z_base_ohm", 52.9),
        )
    except (ValueError, SwingLabError) as exc:
        raise ScenarioFileError(str(exc), line=first_line("network."), key="network") from exc
    try:
        ibr = IbrParams(
            sigma=values["ibr.sigma_pu"],
            recovery_rate=values["ibr.recovery_rate_pu_per_s"],
            k_q=get("ibr.k_q_pu", 2.0),
            u_enter=get("ibr.u_enter_pu", 0.9),
            u_exit=get("ibr.u_exit_pu", 0.9),
            i_max=get("ibr.i_max_pu", 1.2),
        )
    except ValueError as exc:
        raise ScenarioFileError(str(exc), line=first_line("ibr."), key="ibr") from exc
    fault = None
    if has_fault:
        try:
            fault = FaultSpec(
                r_f_ohm=get("fault.r_f_ohm", 0.0),
                lam=get("fault.lam", 0.5),
                t_on=values["fault.t_on_s"],
                t_clear=values["fault.t_clear_s"],
                post_fault_topology=PostFaultTopology(
                    get("fault.post_fault_topology", PostFaultTopology.RESTORE_FULL.value)),
            )
        except ValueError as exc:
            raise ScenarioFileError(str(exc), line=first_line("fault."), key="fault") from exc
    try:
        return Scenario(
            network=network,
            machine=MachineSetup(p_mw=values["machine.p_mw"], t_j=values["machine.t_j_s"],
                                 d=values["machine.d_pu"],
                                 x_d_prime=get("machine.x_d_prime_pu", 0.15)),
            p_ibr_mw=values["ibr.p_mw"],
            ibr=ibr,
            fault=fault,
            t_end=values["t_end_s"],
            dt=values["dt_s"],
            d_omega0=get("d_omega0_pu", 0.0),
            freeze_ibr=get("freeze_ibr", False),
            name=get("name", ""),
        )
    except InvalidScenario as exc:
        raise ScenarioFileError(str(exc)) from exc


def read_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioFileError(f"cannot read scenario file '{path}': {exc.strerror}") from exc
    return parse_scenario(text)


# --- traces -----------------------------------------------------------------

CSV_COLUMNS = ("t_s", "delta_rad", "domega_pu", "p_e_pu", "p_sg_pu", "p_w_pu", "i_d_pu",
               "i_q_pu", "u_pcc_mag_pu", "u_pcc_ang_rad", "mode", "v_pu")
_ATTRS = ("t", "delta", "d_omega", "p_e", "p_sg", "p_w", "i_d", "i_q", "u_pcc_mag",
          "u_pcc_ang", "mode", "v")


def _num(x: float) -> str:
    return format(float(x), ".17g")


def write_trace_csv(trace, path: str | Path) -> None:
    cols = [getattr(trace, a) for a in _ATTRS]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in zip(*cols):
            w.writerow([str(x) if name == "mode" else _num(x) for name, x in zip(_ATTRS, row)])


@dataclass(frozen=True)
class TraceTable:
    """Trace columns read back from CSV (same attribute names as Trace)."""

    t: np.ndarray
    delta: np.ndarray
    d_omega: np.ndarray
    p_e: np.ndarray
    p_sg: np.ndarray
    p_w: np.ndarray
    i_d: np.ndarray
    i_q: np.ndarray
    u_pcc_mag: np.ndarray
    u_pcc_ang: np.ndarray
    mode: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def read_trace_csv(path: str | Path) -> TraceTable:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise TraceSchemaError(f"cannot read trace '{path}': {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceSchemaError(f"trace '{path}' is empty")
        header = [h.strip() for h in header]
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise TraceSchemaError(f"trace '{path}' lacks column(s): {', '.join(missing)}")
        idx = [header.index(c) for c in CSV_COLUMNS]
        rows = list(reader)
    data: dict[str, np.ndarray] = {}
    for attr, col, i in zip(_ATTRS, CSV_COLUMNS, idx):
        raw = [r[i] if i < len(r) else "" for r in rows]
        if attr == "mode":
            data[attr] = np.array(raw, dtype=object)
            continue
        try:
            data[attr] = np.array([float(x) for x in raw], dtype=float)
        except ValueError as exc:
            raise TraceSchemaError(f"column '{col}': {exc}") from exc
    return TraceTable(**data)


def write_phase_csv(trace, path: str | Path) -> None:
    """Phase-plane data: delta against speed deviation, plus V."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t_s", "delta_rad", "domega_pu", "v_pu"))
        for row in zip(trace.t, trace.delta, trace.d_omega, trace.v):
            w.writerow([_num(x) for x in row])


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return _jsonable(x.item())
    return x


def write_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n")
