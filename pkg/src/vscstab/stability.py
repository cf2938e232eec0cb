"""Stability verdicts from the impedance models.

Classic Nyquist runs on the SISO minor loop gains, the generalized criterion
on the eigenvalue loci of the MIMO minor loop matrix, and the passivity scan
on real-axis crossings of the loop impedances. Encirclement counting uses a
closed contour sampled densely enough near (-1, 0) that every polyline
segment subtends a small angle at the critical point, so near-tangent loci
count correctly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Tuple

import numpy as np

from .seqmodel import VscModel
from .siso import equivalent_load_admittance, loop_impedance_accurate, \
    loop_impedance_reduced

CRITICAL = -1.0 + 0.0j

# refinement: inside NEAR_RADIUS of the critical point, a segment may not be
# longer than CHORD_FRACTION of its distance to it (angle < ~9 deg), nor
# exceed the absolute cap inside the inner radius
NEAR_RADIUS = 0.4
CHORD_FRACTION = 0.15
INNER_RADIUS = 0.2
INNER_CHORD = 0.05
MAX_POINTS = 500_000


class MarginalStabilityError(RuntimeError):
    """Locus passes through (or counting is ambiguous at) the critical point."""


class EigenTrackingError(RuntimeError):
    """Eigenvalue branch pairing is inconsistent at doubled resolution."""


class SearchDomainError(ValueError):
    """Bisection interval endpoints share the same verdict."""


class PassivityCrossing(NamedTuple):
    f_res: float    # dq-frame Hz
    re_sign: str    # "positive" | "negative"
    re_ohm: float
    sequence: str = "positive"


@dataclass(frozen=True)
class Locus:
    """Closed Nyquist contour samples, omega ascending over both signs."""

    omega: np.ndarray
    values: np.ndarray
    label: str
    model_kind: str = "accurate"
    sequence: str = "positive"


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    criterion: str                       # NC | GNC | passivity
    encirclements: dict = field(default_factory=dict)
    resonances: List[PassivityCrossing] = field(default_factory=list)
    model_kind: str = "accurate"


def make_grid(f_lo: float = 0.01, f_hi: float = 1.0e4, n: int = 2000) -> np.ndarray:
    """Logarithmic positive frequency grid in rad/s."""
    return 2.0 * np.pi * np.logspace(math.log10(f_lo), math.log10(f_hi), n)


def minor_loop_gain(model: VscModel, s, kind: str = "accurate",
                    seq: str = "positive"):
    """Grid impedance times the (equivalent or diagonal) load admittance."""
    s = np.asarray(s, dtype=complex)
    zs = model.grid_impedance_pn(s)
    zs_own = zs.pp if seq == "positive" else zs.nn
    return zs_own * equivalent_load_admittance(model, s, seq, kind)


def _signed_gain_evaluator(model: VscModel, kind: str,
                           seq: str) -> Callable[[np.ndarray], np.ndarray]:
    """Evaluate the closed-contour gain at signed omega.

    Positive omega samples the studied sequence directly; negative omega uses
    the structural relation gamma_seq(-j w) = conj(gamma_other(j w)).
    """
    other = "negative" if seq == "positive" else "positive"

    def ev(omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        out = np.empty(omega.shape, dtype=complex)
        pos = omega >= 0
        if np.any(pos):
            out[pos] = minor_loop_gain(model, 1j * omega[pos], kind, seq)
        if np.any(~pos):
            out[~pos] = np.conj(
                minor_loop_gain(model, 1j * (-omega[~pos]), kind, other))
        return out

    return ev


def _refine_near_critical(ev: Callable[[np.ndarray], np.ndarray],
                          omega: np.ndarray, values: np.ndarray,
                          point: complex = CRITICAL
                          ) -> Tuple[np.ndarray, np.ndarray]:
    """Insert omega midpoints until segments near the critical point are short.

    Vectorized passes: each pass finds every offending segment, evaluates all
    midpoints at once, and merges. Terminates because each split halves an
    interval and only segments within NEAR_RADIUS ever qualify.
    """
    for _ in range(64):
        d0 = np.abs(values[:-1] - point)
        d1 = np.abs(values[1:] - point)
        dmin = np.minimum(d0, d1)
        chord = np.abs(np.diff(values))
        need = (dmin < NEAR_RADIUS) & (chord > CHORD_FRACTION * dmin)
        need |= (dmin < INNER_RADIUS) & (chord > INNER_CHORD)
        if not np.any(need):
            return omega, values
        if len(omega) + np.count_nonzero(need) > MAX_POINTS:
            raise MarginalStabilityError(
                "refinement near the critical point did not converge")
        idx = np.flatnonzero(need)
        mid_w = 0.5 * (omega[idx] + omega[idx + 1])
        mid_v = ev(mid_w)
        omega = np.insert(omega, idx + 1, mid_w)
        values = np.insert(values, idx + 1, mid_v)
    return omega, values


def nyquist_locus(model: VscModel, kind: str = "accurate",
                  seq: str = "positive", grid: np.ndarray | None = None) -> Locus:
    """Closed Nyquist contour of the chosen minor loop gain.

    The negative-frequency branch is the conjugated mirror-sequence gain, so
    the returned samples run from -omega_max through zero to +omega_max. The
    gains roll off to a real constant at infinity, so joining the endpoints
    closes the contour.
    """
    if grid is None:
        grid = make_grid()
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("grid must be strictly positive (both signs derived)")
    omega = np.concatenate([-grid[::-1], grid])
    ev = _signed_gain_evaluator(model, kind, seq)
    values = ev(omega)
    omega, values = _refine_near_critical(ev, omega, values)
    return Locus(omega=omega, values=values, label=f"gamma_{seq}",
                 model_kind=kind, sequence=seq)


def count_encirclements(locus: Locus, point: complex = CRITICAL) -> int:
    """Winding number of the closed locus around a point, counterclockwise
    positive, via summed argument increments."""
    z = locus.values - point
    if np.min(np.abs(z)) < 1e-9:
        raise MarginalStabilityError(
            f"locus passes through {point}; refine the grid")
    steps = np.angle(np.roll(z, -1) / z)  # includes the closing segment
    w = float(np.sum(steps)) / (2.0 * math.pi)
    if abs(w - round(w)) > 0.05:
        raise MarginalStabilityError(
            f"non-integer winding {w:.3f}; sampling too coarse near {point}")
    return int(round(w))


def nc_verdict(model: VscModel, kind: str = "accurate",
               grid: np.ndarray | None = None) -> StabilityVerdict:
    """Classic Nyquist on both SISO minor loop gains.

    Counts are signed (counterclockwise positive). For an open-loop stable
    minor loop gain, closed-loop right-half-plane zeros show up as clockwise
    encirclements, so the verdict is unstable iff either count is negative.
    A positive count can occur here without instability: the two sequence
    branches of the composite contour can pass on opposite sides of the
    critical point, trapping it counterclockwise between them. That channel
    carries no right-half-plane meaning and the generalized criterion
    confirms such points as stable.
    """
    enc = {}
    for seq in ("positive", "negative"):
        enc[seq] = count_encirclements(nyquist_locus(model, kind, seq, grid))
    return StabilityVerdict(stable=all(v >= 0 for v in enc.values()),
                            criterion="NC", encirclements=enc,
                            model_kind=kind)


# -- generalized Nyquist ---------------------------------------------------

def _loop_matrix_entries(model: VscModel, s):
    y = model.load_admittance_pn(s)
    zs = model.grid_impedance_pn(s)
    return zs.pp * y.pp, zs.pp * y.pn, zs.nn * y.np, zs.nn * y.nn


def _raw_eigenvalues(model: VscModel, omega: np.ndarray):
    l11, l12, l21, l22 = _loop_matrix_entries(model, 1j * omega)
    tr = l11 + l22
    disc = np.sqrt(tr * tr - 4.0 * (l11 * l22 - l12 * l21))
    return (tr + disc) / 2.0, (tr - disc) / 2.0


def _pair_by_continuity(a: np.ndarray, b: np.ndarray):
    """Order the two root chains into continuous loci (nearest neighbor)."""
    l1 = np.empty_like(a)
    l2 = np.empty_like(b)
    l1[0], l2[0] = a[0], b[0]
    for k in range(1, len(a)):
        keep = abs(a[k] - l1[k - 1]) + abs(b[k] - l2[k - 1])
        swap = abs(b[k] - l1[k - 1]) + abs(a[k] - l2[k - 1])
        if swap < keep:
            l1[k], l2[k] = b[k], a[k]
        else:
            l1[k], l2[k] = a[k], b[k]
    return l1, l2


def gnc_loci(model: VscModel, grid: np.ndarray | None = None
             ) -> Tuple[Locus, Locus]:
    """Continuity-paired eigenvalue loci of the MIMO minor loop matrix."""
    if grid is None:
        grid = make_grid()
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("grid must be strictly positive (both signs derived)")
    omega = np.concatenate([-grid[::-1], grid])
    a, b = _raw_eigenvalues(model, omega)
    l1, l2 = _pair_by_continuity(a, b)

    # joint refinement: both loci share the omega grid so the pairing stays
    # well defined; re-pair globally after each insertion pass
    for _ in range(64):
        need = np.zeros(len(omega) - 1, dtype=bool)
        for loc in (l1, l2):
            d = np.minimum(np.abs(loc[:-1] - CRITICAL), np.abs(loc[1:] - CRITICAL))
            chord = np.abs(np.diff(loc))
            need |= (d < NEAR_RADIUS) & (chord > CHORD_FRACTION * d)
            need |= (d < INNER_RADIUS) & (chord > INNER_CHORD)
        if not np.any(need):
            break
        if len(omega) + np.count_nonzero(need) > MAX_POINTS:
            raise MarginalStabilityError(
                "eigenvalue locus refinement did not converge")
        idx = np.flatnonzero(need)
        mid_w = 0.5 * (omega[idx] + omega[idx + 1])
        ma, mb = _raw_eigenvalues(model, mid_w)
        omega = np.insert(omega, idx + 1, mid_w)
        a = np.insert(a, idx + 1, ma)
        b = np.insert(b, idx + 1, mb)
        l1, l2 = _pair_by_continuity(a, b)

    return (Locus(omega=omega, values=l1, label="lambda_1", model_kind="mimo"),
            Locus(omega=omega, values=l2, label="lambda_2", model_kind="mimo"))


def _gnc_windings(model: VscModel, grid: np.ndarray) -> Tuple[int, int]:
    loc1, loc2 = gnc_loci(model, grid)
    w = (count_encirclements(loc1), count_encirclements(loc2))

    # cross-check: det(I + L) = (1 + l1)(1 + l2) must wind around the origin
    # by the sum of the individual counts
    detz = Locus(omega=loc1.omega,
                 values=(1.0 + loc1.values) * (1.0 + loc2.values),
                 label="det")
    w_det = count_encirclements(detz, point=0.0 + 0.0j)
    if w_det != w[0] + w[1]:
        raise EigenTrackingError(
            f"det winding {w_det} != eigenvalue windings {w[0]}+{w[1]}")
    return w[0], w[1]


def gnc_verdict(model: VscModel, grid: np.ndarray | None = None) -> StabilityVerdict:
    """Generalized Nyquist on the MIMO minor loop matrix Z_S * Y_L.

    Negative frequencies are swept explicitly: the eigenvalue loci of the
    complex-coefficient matrix have no conjugate symmetry. The verdict is
    re-derived at doubled base resolution; a count change means the branch
    pairing is unresolved and raises a diagnostic error.
    """
    if grid is None:
        grid = make_grid()
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("grid must be strictly positive (both signs derived)")

    w1a, w2a = _gnc_windings(model, grid)
    dense = np.geomspace(grid[0], grid[-1], 2 * len(grid))
    w1b, w2b = _gnc_windings(model, dense)
    if w1a + w2a != w1b + w2b:
        raise EigenTrackingError(
            f"windings changed under grid doubling: "
            f"({w1a},{w2a}) vs ({w1b},{w2b})")
    return StabilityVerdict(stable=(w1a + w2a == 0), criterion="GNC",
                            encirclements={"lambda_1": w1a, "lambda_2": w2a},
                            model_kind="mimo")


# -- passivity -------------------------------------------------------------

def passivity_crossings(model: VscModel, kind: str = "accurate",
                        seq: str = "positive",
                        band: Tuple[float, float] = (1.0, 2000.0),
                        n: int = 40001) -> List[PassivityCrossing]:
    """Real-axis crossings of the loop impedance over a dq-frequency band.

    Zeros of Im(Z_loop) are bracketed on a log grid and bisected to 1e-3 Hz;
    the sign of Re(Z_loop) at each crossing labels the resonance (negative
    real part at a crossing signals an unstable resonance). Brackets where
    |Z| blows up are poles of the loop impedance, not resonances, and are
    rejected.
    """
    zfun = loop_impedance_accurate if kind == "accurate" else loop_impedance_reduced
    f = np.logspace(math.log10(band[0]), math.log10(band[1]), n)
    z = zfun(model, 1j * 2.0 * math.pi * f, seq)
    sign = np.sign(z.imag)
    out: List[PassivityCrossing] = []
    for i in np.flatnonzero(sign[:-1] * sign[1:] < 0):
        a, b = f[i], f[i + 1]
        im_a = z.imag[i]
        while b - a > 1e-3:
            c = 0.5 * (a + b)
            zc = complex(zfun(model, np.array([1j * 2.0 * math.pi * c]), seq)[0])
            if np.sign(zc.imag) == np.sign(im_a):
                a = c
            else:
                b = c
        c = 0.5 * (a + b)
        zc = complex(zfun(model, np.array([1j * 2.0 * math.pi * c]), seq)[0])
        if abs(zc) > 1e3 * model.circuit.z_base:
            continue  # pole of the loop impedance
        out.append(PassivityCrossing(
            f_res=c, re_sign="positive" if zc.real > 0 else "negative",
            re_ohm=zc.real, sequence=seq))
    return out


def passivity_verdict(model: VscModel, kind: str = "accurate",
                      band: Tuple[float, float] = (1.0, 2000.0)) -> StabilityVerdict:
    """Passivity summary over both sequences: stable resonances everywhere?"""
    res: List[PassivityCrossing] = []
    for seq in ("positive", "negative"):
        res.extend(passivity_crossings(model, kind, seq, band))
    return StabilityVerdict(stable=all(r.re_sign == "positive" for r in res),
                            criterion="passivity", resonances=res,
                            model_kind=kind)


# -- marginal PLL bandwidth -------------------------------------------------

@dataclass(frozen=True)
class MarginalResult:
    bw_hz: float
    resonances: List[PassivityCrossing]
    iterations: int


def marginal_pll_search(build: Callable[[float], VscModel],
                        bw_lo: float, bw_hi: float,
                        kind: str = "accurate", tol: float = 0.1,
                        grid: np.ndarray | None = None) -> MarginalResult:
    """Bisect the PLL bandwidth between a stable and an unstable verdict.

    ``build`` maps a PLL bandwidth in Hz to a fully assembled model (the
    operating point does not depend on the PLL gains, but the caller owns
    that assembly). Stops at ``tol`` Hz resolution and reports the real-axis
    crossings of both sequence loop impedances at the boundary, which locate
    the marginal resonances (sub-synchronous on the positive sequence, near
    the coupling mirror on the negative).
    """
    lo, hi = float(bw_lo), float(bw_hi)
    v_lo = nc_verdict(build(lo), kind, grid).stable
    v_hi = nc_verdict(build(hi), kind, grid).stable
    if v_lo == v_hi:
        raise SearchDomainError(
            f"verdict is {'stable' if v_lo else 'unstable'} at both "
            f"{lo} Hz and {hi} Hz; widen the interval")
    n = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if nc_verdict(build(mid), kind, grid).stable == v_lo:
            lo = mid
        else:
            hi = mid
        n += 1
    bw = 0.5 * (lo + hi)
    boundary = build(bw)
    res: List[PassivityCrossing] = []
    for seq in ("positive", "negative"):
        res.extend(passivity_crossings(boundary, kind, seq, band=(1.0, 100.0)))
    return MarginalResult(bw_hz=bw, resonances=res, iterations=n)
