"""Averaged nonlinear time-domain model of the grid-tied converter.

Stationary-frame plant (filter + Thevenin grid, no switching), dq-frame PI
current control with reference-side decoupling, and the PLL, integrated with
fixed-step classical RK4. Serves as the independent oracle for the
frequency-domain models: single-tone injection runs reproduce the loop
impedance seen by the analytical formulas.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numba as nb
import numpy as np

from .params import (PLL_DAMPING, PLL_FREQ_SCALE, CircuitParams,
                     ControllerParams, OperatingPoint, tune_controllers)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SimState:
    """Full integrator state; theta_pll normalized to [0, 2*pi)."""

    i_alpha: float
    i_beta: float
    theta_pll: float
    x_pll: float
    x_cc_d: float
    x_cc_q: float
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta_pll", self.theta_pll % TWO_PI)

    def as_array(self) -> np.ndarray:
        return np.array([self.i_alpha, self.i_beta, self.theta_pll,
                         self.x_pll, self.x_cc_d, self.x_cc_q])


@dataclass(frozen=True)
class Injection:
    """Series voltage tone in the grid branch, sequence-selective.

    A positive-sequence tone at dq frequency f rotates at f1 + f in the
    stationary frame; a negative-sequence tone rotates at f1 - f (a negative
    stationary frequency IS the negative-sequence set).
    """

    sequence: str = "positive"
    f_dq: float = 10.0
    amplitude_pu: float = 0.01
    t_start: float = 0.1
    t_stop: float = math.inf
    phase: float = 0.0

    def stationary_hz(self, f1: float) -> float:
        return f1 + self.f_dq if self.sequence == "positive" else f1 - self.f_dq


@dataclass(frozen=True)
class Scenario:
    duration: float
    dt: float = 2.0e-5
    record_fs: float = 1000.0
    events: Tuple[Tuple[float, str, float], ...] = ()
    injection: Optional[Injection] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if list(self.events) != sorted(self.events, key=lambda e: e[0]):
            raise ValueError("events must be time-ordered")


@dataclass(frozen=True)
class PhasorMeasurement:
    f_dq: float
    sequence: str
    u_inj: complex        # injected phasor, V
    i_resp: complex       # current response phasor, A
    z_loop: complex       # -u_inj / i_resp (conjugated for negative sequence)
    diverged: bool = False


@dataclass(frozen=True)
class SimResult:
    t: np.ndarray
    i_alpha: np.ndarray
    i_beta: np.ndarray
    theta: np.ndarray
    final_state: SimState
    diverged: bool = False
    t_diverged: float = math.nan


# parameter vector layout for the jit kernel
# 0 w1, 1 e_pk, 2 lf, 3 rf, 4 ls, 5 rs, 6 kp_cc, 7 ki_cc, 8 kp_pll, 9 ki_pll,
# 10 iref_d, 11 iref_q, 12 inj_amp, 13 inj_w, 14 inj_ph, 15 inj_t0, 16 inj_t1

@nb.njit(cache=True, nogil=True)
def _rhs(t, y, pr):
    w1 = pr[0]
    e_re = pr[1] * np.cos(w1 * t)
    e_im = pr[1] * np.sin(w1 * t)
    if pr[15] <= t < pr[16]:
        ph = pr[13] * t + pr[14]
        e_re += pr[12] * np.cos(ph)
        e_im += pr[12] * np.sin(ph)

    i_re, i_im, th, xp, xc_d, xc_q = y[0], y[1], y[2], y[3], y[4], y[5]
    lf, rf, ls, rs = pr[2], pr[3], pr[4], pr[5]
    ct = np.cos(th)
    st = np.sin(th)

    # current in the converter frame, error against the constant reference
    ic_d = i_re * ct + i_im * st
    ic_q = -i_re * st + i_im * ct
    er_d = pr[10] - ic_d
    er_q = pr[11] - ic_q

    # PI plus reference-side decoupling feed-forward  j*w1*lf*i_ref
    uc_d = pr[6] * er_d + xc_d - w1 * lf * pr[11]
    uc_q = pr[6] * er_q + xc_q + w1 * lf * pr[10]
    ucs_re = uc_d * ct - uc_q * st
    ucs_im = uc_d * st + uc_q * ct

    lt = lf + ls
    rt = rf + rs
    di_re = (ucs_re - e_re - rt * i_re) / lt
    di_im = (ucs_im - e_im - rt * i_im) / lt

    # PCC voltage from the inductive divider between converter and grid
    k = (lf * rs - rf * ls) / lt
    up_re = (ls * ucs_re + lf * e_re) / lt + k * i_re
    up_im = (ls * ucs_im + lf * e_im) / lt + k * i_im
    u_q = -up_re * st + up_im * ct

    dth = w1 + pr[8] * u_q + xp
    dxp = pr[9] * u_q
    return np.array([di_re, di_im, dth, dxp, pr[7] * er_d, pr[7] * er_q])


@nb.njit(cache=True, nogil=True)
def _integrate(y, t0, n_steps, dt, n_rec, pr, out, i_cap2):
    k_out = 0
    t = t0
    for k in range(n_steps):
        if k % n_rec == 0:
            out[k_out, 0] = t
            out[k_out, 1] = y[0]
            out[k_out, 2] = y[1]
            out[k_out, 3] = y[2]
            k_out += 1
        k1 = _rhs(t, y, pr)
        k2 = _rhs(t + 0.5 * dt, y + 0.5 * dt * k1, pr)
        k3 = _rhs(t + 0.5 * dt, y + 0.5 * dt * k2, pr)
        k4 = _rhs(t + dt, y + dt * k3, pr)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (k + 1) * dt
        if y[0] * y[0] + y[1] * y[1] > i_cap2:
            return y, k_out, t, True
    out[k_out, 0] = t
    out[k_out, 1] = y[0]
    out[k_out, 2] = y[1]
    out[k_out, 3] = y[2]
    k_out += 1
    return y, k_out, t, False


def _pack(circuit: CircuitParams, controllers: ControllerParams,
          i_ref_pu: complex, injection: Optional[Injection],
          e_grid_pu: float) -> np.ndarray:
    i_ref = i_ref_pu * circuit.i_base_pk
    if injection is None:
        inj = (0.0, 0.0, 0.0, math.inf, math.inf)
    else:
        inj = (injection.amplitude_pu * circuit.v_base_pk,
               TWO_PI * injection.stationary_hz(circuit.f1),
               injection.phase, injection.t_start, injection.t_stop)
    return np.array([
        circuit.omega1, e_grid_pu * circuit.v_base_pk, circuit.lf, circuit.rf,
        circuit.ls, circuit.rs, controllers.kp_cc, controllers.ki_cc,
        controllers.kp_pll, controllers.ki_pll, i_ref.real, i_ref.imag, *inj])


def derivative(state: SimState, circuit: CircuitParams,
               controllers: ControllerParams, i_ref_pu: complex,
               t: Optional[float] = None,
               injection: Optional[Injection] = None,
               e_grid_pu: float = 1.0) -> np.ndarray:
    """State derivative [di_alpha, di_beta, dtheta, dx_pll, dx_cc_d, dx_cc_q]."""
    pr = _pack(circuit, controllers, i_ref_pu, injection, e_grid_pu)
    return _rhs(state.t if t is None else t, state.as_array(), pr)


def equilibrium_state(circuit: CircuitParams, op: OperatingPoint,
                      i_ref_pu: complex) -> SimState:
    """Exact steady state: current on its reference, PI integrators holding
    the converter voltage minus what the feed-forward already supplies."""
    i_ref = i_ref_pu * circuit.i_base_pk
    i0 = i_ref * np.exp(1j * op.theta0)
    xc0 = op.v_c0 - 1j * circuit.omega1 * circuit.lf * i_ref
    return SimState(i_alpha=i0.real, i_beta=i0.imag, theta_pll=op.theta0,
                    x_pll=0.0, x_cc_d=xc0.real, x_cc_q=xc0.imag, t=0.0)


def pll_settle_time(pll_bw: float) -> float:
    """Five time constants of the PLL tracking mode, floored at 0.5 s."""
    if pll_bw <= 0:
        return 0.5
    tau = 1.0 / (PLL_DAMPING * PLL_FREQ_SCALE * TWO_PI * pll_bw)
    return max(5.0 * tau, 0.5)


def integrate(circuit: CircuitParams, controllers: ControllerParams,
              op: OperatingPoint, i_ref_pu: complex, scenario: Scenario,
              initial: Optional[SimState] = None, e_grid_pu: float = 1.0,
              divergence_cap_pu: float = 1.0e6) -> SimResult:
    """Run a scenario, applying parameter-change events at their timestamps.

    Supported event keys: ``pll_bw_hz`` and ``cc_bw_hz`` (controllers are
    retuned against the operating-point voltage and the run continues from
    the reached state). Divergence beyond the cap sets the flag and stops;
    that is an expected outcome for unstable scenarios, not an error.
    """
    if initial is None:
        initial = equilibrium_state(circuit, op, i_ref_pu)
    dt = scenario.dt
    n_rec = max(1, int(round(1.0 / (scenario.record_fs * dt))))
    i_cap2 = (divergence_cap_pu * circuit.i_base_pk) ** 2

    cuts = [0.0] + [e[0] for e in scenario.events] + [scenario.duration]
    ctl = controllers
    y = initial.as_array()
    t0 = initial.t
    chunks: List[np.ndarray] = []
    diverged = False
    t_div = math.nan
    for k in range(len(cuts) - 1):
        if k > 0:
            _, key, value = scenario.events[k - 1]
            if key == "pll_bw_hz":
                ctl = tune_controllers(ctl.cc_bw, value, circuit, op.v0)
            elif key == "cc_bw_hz":
                ctl = tune_controllers(value, ctl.pll_bw, circuit, op.v0)
            else:
                raise ValueError(f"unknown event key {key!r}")
        seg = cuts[k + 1] - cuts[k]
        n_steps = int(round(seg / dt))
        if n_steps <= 0:
            continue
        pr = _pack(circuit, ctl, i_ref_pu, scenario.injection, e_grid_pu)
        out = np.empty((n_steps // n_rec + 2, 4))
        y, k_out, t_end, div = _integrate(y, t0, n_steps, dt, n_rec, pr,
                                          out, i_cap2)
        # drop the duplicated boundary sample of the following chunk
        chunks.append(out[:k_out] if k == len(cuts) - 2 or div
                      else out[:k_out - 1])
        t0 = t_end
        if div:
            diverged = True
            t_div = t_end
            break
    rec = np.vstack(chunks)
    final = SimState(i_alpha=y[0], i_beta=y[1], theta_pll=y[2], x_pll=y[3],
                     x_cc_d=y[4], x_cc_q=y[5], t=t0)
    return SimResult(t=rec[:, 0], i_alpha=rec[:, 1], i_beta=rec[:, 2],
                     theta=rec[:, 3] % TWO_PI, final_state=final,
                     diverged=diverged, t_diverged=t_div)


def fft_phasor(samples: np.ndarray, f: float, fs: float, window: float,
               t0: float = 0.0) -> complex:
    """Single-bin Fourier projection at frequency f over the window.

    Normalization: a complex tone A*exp(j(2*pi*f*t + phi)) returns
    A*exp(j*phi); a real cosine of amplitude A returns (A/2)*exp(j*phi).
    Warns when f*window is not an integer count of cycles (leakage).
    """
    n = int(round(window * fs))
    x = np.asarray(samples)[:n]
    if abs(f * window - round(f * window)) > 1e-9:
        warnings.warn(f"non-coherent window: {f} Hz over {window} s leaks",
                      RuntimeWarning, stacklevel=2)
    t = t0 + np.arange(len(x)) / fs
    return complex(np.mean(x * np.exp(-1j * TWO_PI * f * t)))


def inject_and_measure(circuit: CircuitParams, controllers: ControllerParams,
                       op: OperatingPoint, i_ref_pu: complex, f_dq: float,
                       sequence: str = "positive", amplitude_pu: float = 0.01,
                       dt: float = 2.0e-5, window: float = 0.5,
                       fs: float = 1000.0) -> PhasorMeasurement:
    """Measure the loop impedance at one dq-frame frequency.

    Injects a small series tone, waits out the PLL settle time, then projects
    the stationary-frame complex current onto the injected frequency over a
    coherent window. The loop impedance is -u_inj/i_resp; the negative
    sequence result is conjugated back to the positive-frequency convention.
    """
    f_st = Injection(sequence, f_dq).stationary_hz(circuit.f1)
    if abs(f_st) < 1e-12:
        raise ValueError("injection lands at 0 Hz stationary; not measurable")
    t_on = 0.1
    settle = pll_settle_time(controllers.pll_bw)
    t_w = math.ceil((t_on + settle) * fs) / fs
    inj = Injection(sequence, f_dq, amplitude_pu, t_start=t_on)
    scen = Scenario(duration=t_w + window + 2.0 / fs, dt=dt, record_fs=fs,
                    injection=inj)
    res = integrate(circuit, controllers, op, i_ref_pu, scen)
    if res.diverged:
        return PhasorMeasurement(f_dq, sequence, complex(np.nan),
                                 complex(np.nan), complex(np.nan), True)
    sel = res.t >= t_w - 1e-9
    iv = (res.i_alpha + 1j * res.i_beta)[sel]
    tw = res.t[sel]
    c_i = fft_phasor(iv, f_st, fs, window, t0=tw[0])
    u_inj = amplitude_pu * circuit.v_base_pk + 0.0j
    z = -u_inj / c_i
    if sequence == "negative":
        z = np.conj(z)
    return PhasorMeasurement(f_dq, sequence, u_inj, c_i, complex(z))


def impedance_sweep(circuit: CircuitParams, controllers: ControllerParams,
                    op: OperatingPoint, i_ref_pu: complex,
                    f_lo: float = 2.0, f_hi: float = 98.0, step: float = 2.0,
                    sequences: Sequence[str] = ("positive", "negative"),
                    amplitude_pu: float = 0.01, dt: float = 2.0e-5,
                    parallel: bool = True, window: float = 0.5,
                    fs: float = 1000.0
                    ) -> Tuple[List[PhasorMeasurement], List[Tuple[float, str, str]]]:
    """One measurement per (frequency, sequence); parallel across runs.

    Frequencies whose stationary-frame injection would land on 0 Hz or a
    multiple of the fundamental are skipped and flagged.
    """
    freqs = np.arange(f_lo, f_hi + step / 2, step)
    jobs = []
    skipped: List[Tuple[float, str, str]] = []
    for seq in sequences:
        for f in freqs:
            f_st = Injection(seq, float(f)).stationary_hz(circuit.f1)
            ratio = f_st / circuit.f1
            if abs(ratio - round(ratio)) < 1e-9:
                skipped.append((float(f), seq,
                                f"stationary {f_st:g} Hz collides with the fundamental grid"))
            else:
                jobs.append((float(f), seq))

    def work(job):
        f, seq = job
        return inject_and_measure(circuit, controllers, op, i_ref_pu, f, seq,
                                  amplitude_pu, dt, window, fs)

    if parallel and len(jobs) > 1:
        with ThreadPoolExecutor() as pool:
            rows = list(pool.map(work, jobs))
    else:
        rows = [work(j) for j in jobs]
    return rows, skipped


@dataclass(frozen=True)
class SpectrumReport:
    f: np.ndarray
    magnitude: np.ndarray
    peaks: List[Tuple[float, float]] = field(default_factory=list)


def spectrum_report(samples: np.ndarray, fs: float = 1000.0,
                    window: float = 1.0, fundamental_hz: float = 50.0,
                    exclude_hz: float = 3.0, top_k: int = 5) -> SpectrumReport:
    """One-sided amplitude spectrum of the last ``window`` seconds plus the
    dominant non-fundamental peaks (local maxima, largest first)."""
    n = int(round(window * fs))
    x = np.asarray(samples, dtype=float)[-n:]
    mag = np.abs(np.fft.rfft(x)) / len(x)
    mag[1:] *= 2.0
    f = np.fft.rfftfreq(len(x), d=1.0 / fs)
    local = (mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:])
    keep = local & (np.abs(f[1:-1] - fundamental_hz) > exclude_hz)
    idx = 1 + np.flatnonzero(keep)
    order = idx[np.argsort(mag[idx])[::-1][:top_k]]
    peaks = [(float(f[i]), float(mag[i])) for i in order]
    return SpectrumReport(f=f, magnitude=mag, peaks=peaks)


def classify_boundedness(result: SimResult, circuit: CircuitParams,
                         i_ref_pu: complex, tail: float = 5.0,
                         bounded_tol: float = 0.1,
                         diverged_tol: float = 0.5) -> str:
    """Label a run bounded/diverged/marginal from the current deviation.

    Instabilities of this plant saturate into large limit cycles through the
    PLL nonlinearity instead of blowing up numerically, so the classifier
    looks at the deviation from the reference magnitude over the final
    seconds rather than relying on the hard divergence cap alone.
    """
    if result.diverged:
        return "diverged"
    i_pu = np.hypot(result.i_alpha, result.i_beta) / circuit.i_base_pk
    dev = np.abs(i_pu - abs(i_ref_pu))
    sel = result.t >= result.t[-1] - tail
    worst = float(dev[sel].max())
    if worst > diverged_tol:
        return "diverged"
    if worst < bounded_tol:
        return "bounded"
    return "marginal"
