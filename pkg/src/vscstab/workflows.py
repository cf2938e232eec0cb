"""Command pipelines shared by the CLI and the HTTP service.

Every ``run_*`` function takes a validated config dict and returns a
JSON-safe payload: a compact summary, the rendered output files keyed by
filename, and an ``exit_code`` the CLI propagates (0 on success, 2 when a
stability command finds the configured point unstable or a verification
check fails).
"""
from __future__ import annotations

import math
from typing import Dict, List

import numpy as np

from . import tables
from .config import ConfigDict, assemble, retuned
from .siso import (loop_impedance_accurate, loop_impedance_matrix_form,
                   loop_impedance_reduced)
from .stability import (count_encirclements, gnc_loci, gnc_verdict,
                        make_grid, marginal_pll_search, nyquist_locus,
                        passivity_crossings)
from .timesim import (Injection, Scenario, classify_boundedness,
                      impedance_sweep, inject_and_measure, integrate,
                      spectrum_report)

_KINDS = ("accurate", "reduced")
_SEQS = ("positive", "negative")

# retune scenario: a short series-voltage kick at the bandwidth-step instant,
# 11 Hz off the fundamental, so the transient of the new tuning is excited
# and visible above the numerical floor of the averaged model
_KICK_F_DQ = 11.0
_KICK_LEN = 0.02


def _zfun(kind: str):
    return loop_impedance_accurate if kind == "accurate" else loop_impedance_reduced


def _f_phase(f_dq: np.ndarray, f1: float, seq: str) -> np.ndarray:
    return f1 + f_dq if seq == "positive" else f1 - f_dq


def run_bode(cfg: ConfigDict) -> dict:
    case = assemble(cfg)
    an = cfg["analysis"]
    f = np.linspace(an["bode_lo_hz"], an["bode_hi_hz"], an["bode_n"])
    s = 1j * 2.0 * math.pi * f
    files: Dict[str, str] = {}
    summary = {}
    for kind in _KINDS:
        for seq in _SEQS:
            z = _zfun(kind)(case.model, s, seq)
            files[f"bode_{kind}_{seq}.csv"] = tables.bode_csv(
                f, _f_phase(f, case.circuit.f1, seq), z)
            k = int(np.argmin(np.abs(z)))
            summary[f"{kind}_{seq}_min_mag_ohm"] = float(np.abs(z[k]))
            summary[f"{kind}_{seq}_min_mag_f_hz"] = float(f[k])
    return {"command": "bode", "summary": summary, "files": files,
            "exit_code": 0}


def run_nyquist(cfg: ConfigDict) -> dict:
    case = assemble(cfg)
    an = cfg["analysis"]
    grid = make_grid(an["f_lo_hz"], an["f_hi_hz"], an["n_points"])
    files: Dict[str, str] = {}
    rows: List[tuple] = []
    verdicts = {}

    for kind in _KINDS:
        enc = {}
        for seq in _SEQS:
            locus = nyquist_locus(case.model, kind, seq, grid)
            files[f"nyquist_{kind}_{seq}.csv"] = tables.nyquist_csv(
                locus.omega, locus.values)
            enc[seq] = count_encirclements(locus)
        # unstable iff clockwise; see stability.nc_verdict on positive counts
        stable = all(v >= 0 for v in enc.values())
        verdicts[kind] = {"criterion": "NC", "stable": stable,
                          "encirclements": enc}
        rows.append(("NC", kind, "stable", int(stable)))
        rows.extend(("NC", kind, f"encirclements_{seq}", enc[seq])
                    for seq in _SEQS)

    for locus in gnc_loci(case.model, grid):
        files[f"nyquist_mimo_{locus.label}.csv"] = tables.nyquist_csv(
            locus.omega, locus.values)
    gv = gnc_verdict(case.model, grid)
    verdicts["mimo"] = {"criterion": "GNC", "stable": gv.stable,
                        "encirclements": dict(gv.encirclements)}
    rows.append(("GNC", "mimo", "stable", int(gv.stable)))
    rows.extend(("GNC", "mimo", f"encirclements_{k}", v)
                for k, v in gv.encirclements.items())
    files["verdicts.csv"] = tables.verdict_csv(rows)

    unstable = not (verdicts["accurate"]["stable"] and gv.stable)
    return {"command": "nyquist", "verdicts": verdicts, "files": files,
            "exit_code": 2 if unstable else 0}


def run_passivity(cfg: ConfigDict) -> dict:
    case = assemble(cfg)
    an = cfg["analysis"]
    band = (an["passivity_lo_hz"], an["passivity_hi_hz"])
    rows: List[tuple] = []
    out = {}
    for kind in _KINDS:
        out[kind] = {}
        for seq in _SEQS:
            crossings = passivity_crossings(case.model, kind, seq, band)
            out[kind][seq] = [
                {"f_hz": c.f_res, "re_sign": c.re_sign, "re_ohm": c.re_ohm}
                for c in crossings]
            for i, c in enumerate(crossings, start=1):
                rows.append(("passivity", kind, f"{seq}_crossing_{i}_f_hz",
                             c.f_res))
                rows.append(("passivity", kind, f"{seq}_crossing_{i}_re_ohm",
                             c.re_ohm))
        stable = all(c["re_sign"] == "positive"
                     for seq in _SEQS for c in out[kind][seq])
        out[kind]["stable"] = stable
        rows.append(("passivity", kind, "stable", int(stable)))
    files = {"verdicts.csv": tables.verdict_csv(rows)}
    return {"command": "passivity", "crossings": out,
            "band_hz": [float(band[0]), float(band[1])], "files": files,
            "exit_code": 0 if out["accurate"]["stable"] else 2}


def run_marginal(cfg: ConfigDict) -> dict:
    case = assemble(cfg)
    an = cfg["analysis"]
    grid = make_grid(an["f_lo_hz"], an["f_hi_hz"], an["n_points"])

    def build(bw: float):
        return retuned(case, pll_bw=bw).model

    res = marginal_pll_search(build, an["marginal_lo_hz"],
                              an["marginal_hi_hz"], tol=an["marginal_tol_hz"],
                              grid=grid)
    rows = [("marginal", "accurate", "boundary_pll_bw_hz", res.bw_hz),
            ("marginal", "accurate", "iterations", res.iterations)]
    rows.extend(("marginal", "accurate",
                 f"resonance_{i}_{c.sequence}_f_hz", c.f_res)
                for i, c in enumerate(res.resonances, start=1))
    return {"command": "marginal",
            "boundary_pll_bw_hz": float(res.bw_hz),
            "iterations": res.iterations,
            "resonances": [{"f_hz": float(c.f_res), "re_sign": c.re_sign,
                            "re_ohm": float(c.re_ohm),
                            "sequence": c.sequence}
                           for c in res.resonances],
            "files": {"verdicts.csv": tables.verdict_csv(rows)},
            "exit_code": 0}


def run_measure(cfg: ConfigDict) -> dict:
    case = assemble(cfg)
    sim = cfg["sim"]
    rows, skipped = impedance_sweep(
        case.circuit, case.controllers, case.op, case.i_ref_pu,
        f_lo=sim["sweep_lo_hz"], f_hi=sim["sweep_hi_hz"],
        step=sim["sweep_step_hz"], amplitude_pu=sim["amplitude_pu"],
        dt=sim["dt_s"], parallel=sim["parallel"], window=sim["window_s"],
        fs=sim["record_fs_hz"])

    points = []
    worst_mag = worst_phase = 0.0
    for m in rows:
        z_ref = complex(loop_impedance_accurate(
            case.model, 1j * 2.0 * math.pi * m.f_dq, m.sequence))
        entry = {"f_dq_hz": m.f_dq, "sequence": m.sequence,
                 "z_re_ohm": m.z_loop.real, "z_im_ohm": m.z_loop.imag,
                 "model_re_ohm": z_ref.real, "model_im_ohm": z_ref.imag,
                 "diverged": m.diverged}
        if not m.diverged:
            mag_err = abs(abs(m.z_loop) - abs(z_ref)) / abs(z_ref) * 100.0
            dphi = np.angle(m.z_loop / z_ref)
            entry["mag_err_pct"] = float(mag_err)
            entry["phase_err_deg"] = float(abs(math.degrees(dphi)))
            worst_mag = max(worst_mag, entry["mag_err_pct"])
            worst_phase = max(worst_phase, entry["phase_err_deg"])
        points.append(entry)

    files = {}
    for seq in _SEQS:
        sel = [m for m in rows if m.sequence == seq and not m.diverged]
        f = np.array([m.f_dq for m in sel])
        z = np.array([m.z_loop for m in sel])
        files[f"bode_measured_{seq}.csv"] = tables.bode_csv(
            f, _f_phase(f, case.circuit.f1, seq), z)
    return {"command": "measure", "points": points,
            "skipped": [{"f_dq_hz": f, "sequence": seq, "reason": why}
                        for f, seq, why in skipped],
            "worst_mag_err_pct": float(worst_mag),
            "worst_phase_err_deg": float(worst_phase),
            "files": files, "exit_code": 0}


def run_simulate(cfg: ConfigDict) -> dict:
    case = assemble(cfg)
    sim, out_cfg = cfg["sim"], cfg["output"]
    if sim["scenario"] == "pll_step":
        t_ev = sim["event_t_s"]
        scen = Scenario(
            duration=sim["duration_s"], dt=sim["dt_s"],
            record_fs=sim["record_fs_hz"],
            events=((t_ev, "pll_bw_hz", sim["pll_step_to_hz"]),),
            injection=Injection("positive", _KICK_F_DQ, sim["amplitude_pu"],
                                t_start=t_ev, t_stop=t_ev + _KICK_LEN))
    elif sim["scenario"] == "kick":
        # stability probe: a short burst off the equilibrium, then watch the
        # response decay or grow
        scen = Scenario(duration=sim["duration_s"], dt=sim["dt_s"],
                        record_fs=sim["record_fs_hz"],
                        injection=Injection("positive", _KICK_F_DQ,
                                            sim["kick_pu"], t_start=0.1,
                                            t_stop=0.2))
    else:
        scen = Scenario(duration=sim["duration_s"], dt=sim["dt_s"],
                        record_fs=sim["record_fs_hz"])
    res = integrate(case.circuit, case.controllers, case.op, case.i_ref_pu,
                    scen, e_grid_pu=case.e_grid_pu)
    label = classify_boundedness(res, case.circuit, case.i_ref_pu)

    ib = case.circuit.i_base_pk
    ia_pu = res.i_alpha / ib
    rep = spectrum_report(ia_pu, fs=sim["record_fs_hz"],
                          window=out_cfg["spectrum_window_s"],
                          fundamental_hz=case.circuit.f1,
                          top_k=out_cfg["top_k"])
    files = {
        "timeseries.csv": tables.timeseries_csv(
            res.t, ia_pu, res.i_beta / ib, res.theta),
        "spectrum.csv": tables.spectrum_csv(rep.f, rep.magnitude),
    }
    return {"command": "simulate", "scenario": sim["scenario"],
            "boundedness": label, "diverged": bool(res.diverged),
            "t_diverged": None if math.isnan(res.t_diverged)
            else float(res.t_diverged),
            "peaks": [{"f_hz": f, "magnitude_pu": m} for f, m in rep.peaks],
            "files": files, "exit_code": 0}


def run_verify(cfg: ConfigDict) -> dict:
    """Cross-model consistency checks at the configured operating point."""
    case = assemble(cfg)
    model = case.model
    checks: List[dict] = []

    def add(name: str, value: float, tol: float):
        checks.append({"name": name, "value": float(value), "tol": float(tol),
                       "passed": bool(value <= tol)})

    f = np.logspace(-1, 4, 2000)
    s = 1j * 2.0 * math.pi * f
    for seq in _SEQS:
        za = loop_impedance_accurate(model, s, seq)
        zm = loop_impedance_matrix_form(model, s, seq)
        add(f"matrix_vs_closed_form_{seq}",
            np.max(np.abs(za - zm) / np.abs(zm)), 1e-10)

    rng = np.random.default_rng(7)
    sr = rng.normal(0, 200, 300) + 1j * rng.normal(0, 2000, 300)
    y_direct = model.load_admittance_pn(sr)
    y_via_dq = model.dq_to_modified_sequence(model.dq_impedance_blocks(sr))
    err = max(np.max(np.abs(getattr(y_direct, k) - getattr(y_via_dq, k))
                     / np.maximum(np.abs(getattr(y_direct, k)), 1e-12))
              for k in ("pp", "pn", "np", "nn"))
    add("dq_vs_sequence_assembly", err, 1e-10)

    y1 = model.load_admittance_pn(sr)
    y2 = model.load_admittance_pn(np.conj(sr))
    sym = max(np.max(np.abs(y1.nn - np.conj(y2.pp))),
              np.max(np.abs(y1.np - np.conj(y2.pn))))
    add("coefficient_conjugate_symmetry", sym, 1e-12)

    m0 = retuned(case, pll_bw=0.0).model
    y0 = m0.load_admittance_pn(s)
    direct = 1.0 / (m0.h_c(s) + m0.z_f_pp(s))
    coupling = max(np.max(np.abs(y0.pn)), np.max(np.abs(y0.np)))
    add("frozen_pll_decoupling", coupling, 1e-12)
    add("frozen_pll_diagonal", np.max(np.abs(y0.pp - direct) / np.abs(direct)),
        1e-12)

    meas = inject_and_measure(case.circuit, case.controllers, case.op,
                              case.i_ref_pu, f_dq=24.0, sequence="positive",
                              amplitude_pu=cfg["sim"]["amplitude_pu"],
                              dt=cfg["sim"]["dt_s"])
    z_ref = complex(loop_impedance_accurate(model, 1j * 2.0 * math.pi * 24.0,
                                            "positive"))
    add("sim_crosscheck_mag_pct",
        abs(abs(meas.z_loop) - abs(z_ref)) / abs(z_ref) * 100.0, 5.0)
    add("sim_crosscheck_phase_deg",
        abs(math.degrees(np.angle(meas.z_loop / z_ref))), 5.0)

    rows = [("verify", "all", c["name"],
             f"{c['value']:.3e}|tol {c['tol']:g}|"
             f"{'pass' if c['passed'] else 'fail'}") for c in checks]
    ok = all(c["passed"] for c in checks)
    return {"command": "verify", "checks": checks, "all_passed": ok,
            "files": {"verdicts.csv": tables.verdict_csv(rows)},
            "exit_code": 0 if ok else 2}


RUNNERS = {
    "bode": run_bode,
    "nyquist": run_nyquist,
    "passivity": run_passivity,
    "marginal": run_marginal,
    "measure": run_measure,
    "simulate": run_simulate,
    "verify": run_verify,
}
