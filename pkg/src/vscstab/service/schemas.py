"""Request models for the HTTP service.

Sections mirror the config schema key for key; unknown fields are rejected
(422) so a typo in a request cannot silently run with defaults. Values are
revalidated through the config parsers, which also handles the complex
current reference passed as a string.
"""
from __future__ import annotations

from typing import Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CircuitSection(_Strict):
    s_base_va: Optional[float] = None
    v_base_v: Optional[float] = None
    f1_hz: Optional[float] = None
    r_filter_pu: Optional[float] = None
    x_filter_pu: Optional[float] = None
    scr: Optional[float] = None
    xr_ratio: Optional[float] = None
    e_grid_pu: Optional[float] = None
    i_ref_pu: Optional[Union[float, str]] = None


class ControlSection(_Strict):
    cc_bw_hz: Optional[float] = None
    pll_bw_hz: Optional[float] = None
    v0_mode: Optional[str] = None


class AnalysisSection(_Strict):
    f_lo_hz: Optional[float] = None
    f_hi_hz: Optional[float] = None
    n_points: Optional[int] = None
    bode_lo_hz: Optional[float] = None
    bode_hi_hz: Optional[float] = None
    bode_n: Optional[int] = None
    passivity_lo_hz: Optional[float] = None
    passivity_hi_hz: Optional[float] = None
    marginal_lo_hz: Optional[float] = None
    marginal_hi_hz: Optional[float] = None
    marginal_tol_hz: Optional[float] = None


class SimSection(_Strict):
    duration_s: Optional[float] = None
    dt_s: Optional[float] = None
    record_fs_hz: Optional[float] = None
    amplitude_pu: Optional[float] = None
    window_s: Optional[float] = None
    sweep_lo_hz: Optional[float] = None
    sweep_hi_hz: Optional[float] = None
    sweep_step_hz: Optional[float] = None
    scenario: Optional[str] = None
    kick_pu: Optional[float] = None
    pll_step_to_hz: Optional[float] = None
    event_t_s: Optional[float] = None
    parallel: Optional[bool] = None


class OutputSection(_Strict):
    dir: Optional[str] = None
    spectrum_window_s: Optional[float] = None
    top_k: Optional[int] = None


class ConfigSections(_Strict):
    circuit: Optional[CircuitSection] = None
    control: Optional[ControlSection] = None
    analysis: Optional[AnalysisSection] = None
    sim: Optional[SimSection] = None
    output: Optional[OutputSection] = None

    def provided(self) -> Dict[str, Dict[str, object]]:
        """Nested dict of only the keys the caller actually set."""
        out: Dict[str, Dict[str, object]] = {}
        for name in ("circuit", "control", "analysis", "sim", "output"):
            section = getattr(self, name)
            if section is not None:
                keys = section.model_dump(exclude_none=True)
                if keys:
                    out[name] = keys
        return out


class RunRequest(_Strict):
    config: Optional[ConfigSections] = None
    overrides: List[str] = []


class HealthResponse(BaseModel):
    status: str
    version: str
