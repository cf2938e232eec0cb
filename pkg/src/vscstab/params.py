"""Per-unit to SI conversion, controller tuning, and steady-state operating point.

Everything downstream (linearized blocks and the time-domain model) is
parameterized by the three value objects defined here.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass


class ConfigurationError(ValueError):
    """Raised when a physical configuration value is out of range; names the key."""


class InfeasibleOperatingPointError(RuntimeError):
    """Fixed-point solve for the steady state did not converge (grid too weak)."""


# PLL tracking-loop design constants. The loop is deliberately underdamped and
# its natural frequency sits below the requested bandwidth, so that the -3 dB
# point of the closed tracking loop lands near the request (at zeta=0.2 the
# -3 dB point is 1.60*wn, giving 0.91*pll_bw with the 0.57 scale).
PLL_DAMPING = 0.2
PLL_FREQ_SCALE = 0.57


@dataclass(frozen=True)
class CircuitParams:
    """SI-valued plant: filter, Thevenin grid, and the per-unit bases."""

    s_base: float   # VA
    v_base: float   # line-line RMS, V
    f1: float       # Hz
    omega1: float   # rad/s
    lf: float       # filter inductance, H
    rf: float       # filter resistance, ohm
    ls: float       # grid inductance, H
    rs: float       # grid resistance, ohm
    scr: float
    xr_ratio: float

    @property
    def z_base(self) -> float:
        return self.v_base ** 2 / self.s_base

    @property
    def v_base_pk(self) -> float:
        """Phase-voltage amplitude base (peak of the phase quantity)."""
        return self.v_base * math.sqrt(2.0 / 3.0)

    @property
    def i_base_pk(self) -> float:
        """Phase-current amplitude base; s_base = (3/2) v_pk i_pk."""
        return 2.0 * self.s_base / (3.0 * self.v_base_pk)


@dataclass(frozen=True)
class ControllerParams:
    cc_bw: float    # Hz
    pll_bw: float   # Hz; 0 encodes a frozen PLL
    kp_cc: float    # ohm
    ki_cc: float    # ohm/s
    kp_pll: float   # rad/s per V
    ki_pll: float   # rad/s^2 per V


@dataclass(frozen=True)
class OperatingPoint:
    """Steady-state phasors in the PLL-aligned converter dq frame (SI, peak)."""

    i_c0: complex   # converter generation current, A
    v_c0: complex   # converter internal voltage, V
    v0: float       # PCC voltage magnitude, V
    theta0: float   # PLL angle relative to the grid EMF, rad


def build_circuit(s_base: float, v_base: float, f1: float,
                  z_filter_pu: complex, scr: float,
                  xr_ratio: float) -> CircuitParams:
    """Convert a per-unit description into SI circuit values.

    The grid Thevenin impedance magnitude is the reciprocal of the
    short-circuit ratio; its angle comes from the X/R ratio. ``scr=math.inf``
    yields an ideal grid (rs = ls = 0).
    """
    if s_base <= 0:
        raise ConfigurationError("circuit.s_base_va must be positive")
    if v_base <= 0:
        raise ConfigurationError("circuit.v_base_v must be positive")
    if f1 <= 0:
        raise ConfigurationError("circuit.f1_hz must be positive")
    if z_filter_pu.real <= 0 or z_filter_pu.imag <= 0:
        raise ConfigurationError(
            "circuit.filter_r_pu and circuit.filter_x_pu must be positive")
    if scr <= 0:
        raise ConfigurationError("circuit.scr must be positive")
    if xr_ratio <= 0:
        raise ConfigurationError("circuit.xr_ratio must be positive")

    z_base = v_base ** 2 / s_base
    omega1 = 2.0 * math.pi * f1
    rf = z_filter_pu.real * z_base
    lf = z_filter_pu.imag * z_base / omega1
    if math.isinf(scr):
        rs, ls = 0.0, 0.0
    else:
        zs_mag = z_base / scr
        rs = zs_mag / math.sqrt(1.0 + xr_ratio ** 2)
        ls = rs * xr_ratio / omega1
    return CircuitParams(s_base, v_base, f1, omega1, lf, rf, ls, rs, scr, xr_ratio)


def to_per_unit(circuit: CircuitParams) -> dict:
    """Express the SI circuit back in per-unit (round-trip check support)."""
    zb = circuit.z_base
    w1 = circuit.omega1
    return {
        "filter_r_pu": circuit.rf / zb,
        "filter_x_pu": w1 * circuit.lf / zb,
        "grid_r_pu": circuit.rs / zb,
        "grid_x_pu": w1 * circuit.ls / zb,
    }


def tune_controllers(cc_bw: float, pll_bw: float, circuit: CircuitParams,
                     v0: float) -> ControllerParams:
    """PI gains from requested bandwidths.

    Current loop: internal-model tuning, kp = 2*pi*cc_bw*lf and
    ki = 2*pi*cc_bw*rf, which closes a first-order loop of bandwidth cc_bw.
    PLL: second-order tracking loop with v0*kp = 2*zeta*wn, v0*ki = wn^2,
    wn = PLL_FREQ_SCALE * 2*pi*pll_bw and zeta = PLL_DAMPING (see the
    constants' note above). pll_bw = 0 freezes the PLL entirely.
    """
    if cc_bw < 0:
        raise ConfigurationError("control.cc_bw_hz must be non-negative")
    if pll_bw < 0:
        raise ConfigurationError("control.pll_bw_hz must be non-negative")
    if v0 <= 0:
        raise ConfigurationError("operating-point voltage must be positive")
    kp_cc = 2.0 * math.pi * cc_bw * circuit.lf
    ki_cc = 2.0 * math.pi * cc_bw * circuit.rf
    if pll_bw == 0.0:
        kp_pll = ki_pll = 0.0
    else:
        wn = PLL_FREQ_SCALE * 2.0 * math.pi * pll_bw
        kp_pll = 2.0 * PLL_DAMPING * wn / v0
        ki_pll = wn ** 2 / v0
    return ControllerParams(cc_bw, pll_bw, kp_cc, ki_cc, kp_pll, ki_pll)


def solve_operating_point(circuit: CircuitParams, i_ref_pu: complex,
                          e_grid_pu: float = 1.0) -> OperatingPoint:
    """Steady state of the phasor circuit with a PLL-aligned frame.

    Generation notation: the converter current flows out of the converter
    into the grid, raising the PCC above the EMF behind the grid impedance.
    The PLL angle theta0 is the fixed point at which the PCC voltage,
    expressed in the converter frame, has zero q component. With integral
    current control the converter current equals its reference exactly.
    """
    if e_grid_pu <= 0:
        raise ConfigurationError("circuit.e_grid_pu must be positive")
    e_si = e_grid_pu * circuit.v_base_pk
    i_ref = i_ref_pu * circuit.i_base_pk
    zs = circuit.rs + 1j * circuit.omega1 * circuit.ls
    zf = circuit.rf + 1j * circuit.omega1 * circuit.lf

    theta = 0.0
    u_conv = e_si + 0j
    for _ in range(100):
        i_grid = i_ref * cmath.exp(1j * theta)
        u_grid = e_si + zs * i_grid
        u_conv = u_grid * cmath.exp(-1j * theta)
        if abs(u_conv.imag) / circuit.v_base_pk < 1e-12:
            break
        theta += math.atan2(u_conv.imag, u_conv.real)
    else:
        raise InfeasibleOperatingPointError(
            f"no steady state for i_ref={i_ref_pu} p.u. at scr={circuit.scr}")

    v0 = abs(u_conv)
    v_c0 = u_conv + zf * i_ref
    return OperatingPoint(i_c0=i_ref, v_c0=v_c0, v0=v0, theta0=theta)


def operating_point_residual(circuit: CircuitParams, op: OperatingPoint,
                             i_ref_pu: complex, e_grid_pu: float = 1.0) -> float:
    """Max phasor KVL residual in p.u. (quality gauge for the fixed point)."""
    e_si = e_grid_pu * circuit.v_base_pk
    zs = circuit.rs + 1j * circuit.omega1 * circuit.ls
    zf = circuit.rf + 1j * circuit.omega1 * circuit.lf
    i_grid = op.i_c0 * cmath.exp(1j * op.theta0)
    u_grid = e_si + zs * i_grid
    u_conv = u_grid * cmath.exp(-1j * op.theta0)
    r1 = abs(u_conv.imag) / circuit.v_base_pk
    r2 = abs(op.v_c0 - (u_conv + zf * op.i_c0)) / circuit.v_base_pk
    r3 = abs(op.v0 - abs(u_conv)) / circuit.v_base_pk
    r4 = abs(op.i_c0 - i_ref_pu * circuit.i_base_pk) / circuit.i_base_pk
    return max(r1, r2, r3, r4)
