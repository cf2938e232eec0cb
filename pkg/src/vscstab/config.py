"""Plain-text run configuration: ``section.key = value`` per line.

Five sections (circuit, control, analysis, sim, output) with typed keys and
complete defaults; unknown sections or keys are rejected so typos cannot
silently fall back to defaults. The same validation path serves config files
and command-line ``--set`` overrides.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .params import (CircuitParams, ConfigurationError, ControllerParams,
                     OperatingPoint, build_circuit, solve_operating_point,
                     tune_controllers)
from .seqmodel import VscModel

ConfigDict = Dict[str, Dict[str, object]]


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_float(raw: str) -> float:
    return float(raw)          # accepts inf for an ideal grid


def _parse_complex(raw: str) -> complex:
    return complex(raw.strip().replace(" ", ""))


def _parse_choice(*options: str):
    def parse(raw: str) -> str:
        val = raw.strip()
        if val not in options:
            raise ValueError(f"must be one of {options}, got {raw!r}")
        return val
    return parse


# key -> (parser, default)
SCHEMA = {
    "circuit": {
        "s_base_va": (_parse_float, 2.0e6),
        "v_base_v": (_parse_float, 690.0),
        "f1_hz": (_parse_float, 50.0),
        "r_filter_pu": (_parse_float, 0.025),
        "x_filter_pu": (_parse_float, 0.10),
        "scr": (_parse_float, 4.0),
        "xr_ratio": (_parse_float, 5.0),
        "e_grid_pu": (_parse_float, 1.0),
        "i_ref_pu": (_parse_complex, 0.5 + 0.0j),
    },
    "control": {
        "cc_bw_hz": (_parse_float, 200.0),
        "pll_bw_hz": (_parse_float, 5.0),
        "v0_mode": (_parse_choice("solved", "nominal"), "solved"),
    },
    "analysis": {
        "f_lo_hz": (_parse_float, 0.01),
        "f_hi_hz": (_parse_float, 1.0e4),
        "n_points": (int, 2000),
        "bode_lo_hz": (_parse_float, 0.1),
        "bode_hi_hz": (_parse_float, 100.0),
        "bode_n": (int, 1000),
        "passivity_lo_hz": (_parse_float, 1.0),
        "passivity_hi_hz": (_parse_float, 2000.0),
        "marginal_lo_hz": (_parse_float, 10.0),
        "marginal_hi_hz": (_parse_float, 30.0),
        "marginal_tol_hz": (_parse_float, 0.1),
    },
    "sim": {
        "duration_s": (_parse_float, 5.0),
        "dt_s": (_parse_float, 2.0e-5),
        "record_fs_hz": (_parse_float, 1000.0),
        "amplitude_pu": (_parse_float, 0.01),
        "window_s": (_parse_float, 0.5),
        "sweep_lo_hz": (_parse_float, 2.0),
        "sweep_hi_hz": (_parse_float, 98.0),
        "sweep_step_hz": (_parse_float, 2.0),
        "scenario": (_parse_choice("hold", "kick", "pll_step"), "hold"),
        "kick_pu": (_parse_float, 0.02),
        "pll_step_to_hz": (_parse_float, 20.0),
        "event_t_s": (_parse_float, 2.0),
        "parallel": (_parse_bool, True),
    },
    "output": {
        "dir": (str, "."),
        "spectrum_window_s": (_parse_float, 1.0),
        "top_k": (int, 5),
    },
}


def default_config() -> ConfigDict:
    return {sec: {key: spec[1] for key, spec in keys.items()}
            for sec, keys in SCHEMA.items()}


def _set_entry(cfg: ConfigDict, dotted: str, raw: str, where: str) -> None:
    if dotted.count(".") != 1:
        raise ConfigurationError(
            f"{where}: expected section.key, got {dotted!r}")
    section, key = dotted.split(".")
    if section not in SCHEMA:
        raise ConfigurationError(f"{where}: unknown section {section!r}")
    if key not in SCHEMA[section]:
        raise ConfigurationError(
            f"{where}: unknown key {key!r} in section {section!r}")
    parser = SCHEMA[section][key][0]
    try:
        cfg[section][key] = parser(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(
            f"{where}: bad value for {dotted}: {exc}") from exc


def parse_config(text: str) -> ConfigDict:
    """Parse config text onto the defaults; blank lines and # comments ok."""
    cfg = default_config()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                f"line {lineno}: expected 'section.key = value', got {line!r}")
        dotted, raw = stripped.split("=", 1)
        _set_entry(cfg, dotted.strip(), raw.strip(), f"line {lineno}")
    return cfg


def apply_overrides(cfg: ConfigDict, overrides: Sequence[str]) -> ConfigDict:
    """Apply 'section.key=value' strings (CLI --set) onto a config in place."""
    for n, item in enumerate(overrides, start=1):
        if "=" not in item:
            raise ConfigurationError(
                f"override {n}: expected section.key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        _set_entry(cfg, dotted.strip(), raw.strip(), f"override {n}")
    return cfg


def validate_config(data: Dict[str, Dict[str, object]]) -> ConfigDict:
    """Validate an already-structured mapping (service requests) against the
    schema, converting through the same per-key parsers via repr strings."""
    cfg = default_config()
    for section, keys in data.items():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section {section!r}")
        if not isinstance(keys, dict):
            raise ConfigurationError(f"section {section!r} must be a mapping")
        for key, value in keys.items():
            _set_entry(cfg, f"{section}.{key}", str(value),
                       f"section {section!r}")
    return cfg


@dataclass(frozen=True)
class AssembledCase:
    """Everything the analyses need, built once from a config."""

    circuit: CircuitParams
    controllers: ControllerParams
    op: OperatingPoint
    model: VscModel
    i_ref_pu: complex
    e_grid_pu: float


def assemble(cfg: ConfigDict) -> AssembledCase:
    c = cfg["circuit"]
    ctl = cfg["control"]
    circuit = build_circuit(
        s_base=c["s_base_va"], v_base=c["v_base_v"], f1=c["f1_hz"],
        z_filter_pu=complex(c["r_filter_pu"], c["x_filter_pu"]),
        scr=c["scr"], xr_ratio=c["xr_ratio"])
    i_ref_pu = complex(c["i_ref_pu"])
    e_grid_pu = float(c["e_grid_pu"])
    op = solve_operating_point(circuit, i_ref_pu, e_grid_pu)
    v0 = circuit.v_base_pk if ctl["v0_mode"] == "nominal" else op.v0
    if ctl["v0_mode"] == "nominal":
        op = OperatingPoint(i_c0=op.i_c0, v_c0=op.v_c0, v0=v0,
                            theta0=op.theta0)
    controllers = tune_controllers(ctl["cc_bw_hz"], ctl["pll_bw_hz"],
                                   circuit, v0)
    model = VscModel(circuit, controllers, op)
    return AssembledCase(circuit, controllers, op, model, i_ref_pu, e_grid_pu)


def retuned(case: AssembledCase, pll_bw: Optional[float] = None,
            cc_bw: Optional[float] = None) -> AssembledCase:
    """Same circuit and operating point with different controller bandwidths."""
    ctl = tune_controllers(
        case.controllers.cc_bw if cc_bw is None else cc_bw,
        case.controllers.pll_bw if pll_bw is None else pll_bw,
        case.circuit, case.op.v0)
    model = VscModel(case.circuit, ctl, case.op)
    return AssembledCase(case.circuit, ctl, case.op, model,
                         case.i_ref_pu, case.e_grid_pu)
