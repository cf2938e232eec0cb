"""Linearized converter blocks and the 2x2 MIMO admittance in modified
sequence coordinates, plus the dq assembly and the notation translations
between dq-frame, phase-domain, and complex-vector forms.

Generation notation throughout: the converter current flows out of the
converter, and the load admittance maps PCC voltage to minus that current.
"""
from __future__ import annotations

import numpy as np

from .params import CircuitParams, ControllerParams, OperatingPoint
from .tfcore import SeqMatrix, TfBlock, coeff_conjugate

SQRT2 = np.sqrt(2.0)


class VscModel:
    """Immutable bundle of circuit, controllers, operating point, and the
    derived transfer blocks every analysis consumes.

    All block evaluators are vectorized over ndarrays of complex s (rad/s).
    The current-control and PLL PI blocks carry a 1/s pole, so grids must not
    contain s = 0 exactly; every consumer here works on log-spaced grids.
    """

    def __init__(self, circuit: CircuitParams, controllers: ControllerParams,
                 op: OperatingPoint):
        self.circuit = circuit
        self.controllers = controllers
        self.op = op

        c, k = circuit, controllers
        w1lf = c.omega1 * c.lf
        w1ls = c.omega1 * c.ls

        self.h_c = TfBlock(lambda s: k.kp_cc + k.ki_cc / s, real_coefficients=True)
        self.h_pll = TfBlock(lambda s: k.kp_pll + k.ki_pll / s, real_coefficients=True)
        self.z_f_pp = TfBlock(lambda s: c.rf + s * c.lf + 1j * w1lf)
        self.z_f_nn = TfBlock(lambda s: c.rf + s * c.lf - 1j * w1lf)
        self.z_s_pp = TfBlock(lambda s: c.rs + s * c.ls + 1j * w1ls)
        self.z_s_nn = TfBlock(lambda s: c.rs + s * c.ls - 1j * w1ls)

        # T_pll as an explicit rational (clears the internal 1/s) so that
        # T_pll(0) = 1 whenever ki_pll > 0 and T_pll = 0 for a frozen PLL.
        v0 = op.v0
        a1, a0 = v0 * k.kp_pll, v0 * k.ki_pll
        if k.pll_bw == 0.0:
            self.t_pll = TfBlock(lambda s: np.zeros_like(s), real_coefficients=True)
        else:
            self.t_pll = TfBlock(lambda s: (a1 * s + a0) / (s * s + a1 * s + a0),
                                 real_coefficients=True)

    # -- PLL coupling blocks --------------------------------------------

    def gpll(self, s):
        """G_pll(s) = T_pll(s)/(2 v0) * (H_c(s) i_c0 + v_c0)."""
        s = np.asarray(s, dtype=complex)
        return self.t_pll(s) / (2.0 * self.op.v0) * (
            self.h_c(s) * self.op.i_c0 + self.op.v_c0)

    def gpll_c(self, s):
        """Coefficient-conjugate of gpll: phasors conjugated, real blocks kept."""
        s = np.asarray(s, dtype=complex)
        return self.t_pll(s) / (2.0 * self.op.v0) * (
            self.h_c(s) * np.conj(self.op.i_c0) + np.conj(self.op.v_c0))

    # -- MIMO admittance and grid impedance ------------------------------

    def load_admittance_pn(self, s) -> SeqMatrix:
        """The 2x2 modified-sequence load admittance.

        The nn/np row is the coefficient conjugate of the pp/pn row, which is
        what produces the mirror-frequency coupling separated by 2*omega1.
        """
        s = np.asarray(s, dtype=complex)
        hc = self.h_c(s)
        g = self.gpll(s)
        gc = self.gpll_c(s)
        dp = hc + self.z_f_pp(s)
        dn = hc + self.z_f_nn(s)
        return SeqMatrix(pp=(1.0 - g) / dp, pn=g / dp,
                         np=gc / dn, nn=(1.0 - gc) / dn, tag="sequence")

    def grid_impedance_pn(self, s) -> SeqMatrix:
        s = np.asarray(s, dtype=complex)
        zero = np.zeros_like(s)
        return SeqMatrix(pp=self.z_s_pp(s), pn=zero,
                         np=zero, nn=self.z_s_nn(s), tag="sequence")

    # -- dq assembly and the coordinate transform -------------------------

    def dq_impedance_blocks(self, s) -> SeqMatrix:
        """Assemble the dq-frame load admittance from the individual blocks.

        Loop: PI control on the current error plus the PLL current/voltage
        paths feeding the modulation, closed through the filter impedance.
        The reference-side decoupling feed-forward does not appear: acting on
        the constant reference it contributes nothing to the small signal.
        """
        s = np.asarray(s, dtype=complex)
        c, op = self.circuit, self.op
        hc = self.h_c(s)
        t = self.t_pll(s)
        v0 = op.v0
        icd, icq = op.i_c0.real, op.i_c0.imag
        vcd, vcq = op.v_c0.real, op.v_c0.imag

        a = hc + c.rf + s * c.lf
        b = c.omega1 * c.lf
        det = a * a + b * b
        # right side I + H_c*P_i - P_v is upper triangular
        r12 = (hc * icq + vcq) * t / v0
        r22 = 1.0 - (hc * icd + vcd) * t / v0
        return SeqMatrix(pp=a / det,
                         pn=(a * r12 + b * r22) / det,
                         np=(-b + 0.0 * s) / det,
                         nn=(-b * r12 + a * r22) / det,
                         tag="dq")

    @staticmethod
    def dq_to_modified_sequence(m: SeqMatrix) -> SeqMatrix:
        """Similarity transform A M A^H with unitary A = (1/sqrt2)[[1, j], [1, -j]]."""
        if m.tag != "dq":
            raise ValueError(f"expected a dq-tagged matrix, got {m.tag!r}")
        m11, m12, m21, m22 = m.pp, m.pn, m.np, m.nn
        return SeqMatrix(
            pp=(m11 + m22 + 1j * (m21 - m12)) / 2.0,
            pn=(m11 - m22 + 1j * (m21 + m12)) / 2.0,
            np=(m11 - m22 - 1j * (m21 + m12)) / 2.0,
            nn=(m11 + m22 - 1j * (m21 - m12)) / 2.0,
            tag="sequence")

    # -- frequency-notation translations ----------------------------------

    def to_phase_domain_notation(self, s_phase) -> SeqMatrix:
        """Re-index the sequence admittance to phase-domain frequencies.

        The positive-sequence component at phase frequency f corresponds to
        dq frequency f - f1; the coupled negative-sequence partner sits at
        phase frequency f - 2 f1, which lands at the same dq argument.
        """
        s_phase = np.asarray(s_phase, dtype=complex)
        shifted = self.load_admittance_pn(s_phase - 1j * self.circuit.omega1)
        return SeqMatrix(pp=shifted.pp, pn=shifted.pn,
                         np=shifted.np, nn=shifted.nn, tag="phase")

    def impedance_blocks(self):
        """The four entries of the sequence impedance matrix as TfBlocks."""
        def entry(name):
            def ev(s):
                y = self.load_admittance_pn(s)
                det = y.det()
                picked = {"pp": y.nn, "pn": -y.pn, "np": -y.np, "nn": y.pp}[name]
                return picked / det
            return TfBlock(ev=ev)
        return {k: entry(k) for k in ("pp", "pn", "np", "nn")}

    def to_complex_vector_form(self, s) -> SeqMatrix:
        """Compact complex-vector impedance matrix at phase-domain s.

        Row one holds Z_pp and the coefficient-conjugated Z_pn evaluated at
        the mirrored argument; row two pairs Z_np with the conjugated Z_pp.
        The assembled model satisfies Z_np*(s) = Z_pn(s) and
        Z_pp*(s) = Z_nn(s).
        """
        s = np.asarray(s, dtype=complex)
        w1 = self.circuit.omega1
        z = self.impedance_blocks()
        zpn_cc = coeff_conjugate(z["pn"])
        zpp_cc = coeff_conjugate(z["pp"])
        return SeqMatrix(
            pp=z["pp"](s - 1j * w1),
            pn=zpn_cc(np.conj(s) + 1j * w1),
            np=z["np"](s - 1j * w1),
            nn=zpp_cc(np.conj(s) + 1j * w1),
            tag="cvector")
