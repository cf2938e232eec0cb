"""SISO reductions of the MIMO sequence model.

The accurate form folds the mirror-sequence circuit into the studied
sequence through the coupling terms; the reduced form keeps only the
diagonal admittance (strong-grid shortcut). Both are exercised against the
closed-loop matrix form, which solves the 2x2 network directly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seqmodel import VscModel
from .tfcore import SingularMatrixError

_SEQS = ("positive", "negative")


def _check_seq(seq: str):
    if seq not in _SEQS:
        raise ValueError(f"sequence must be one of {_SEQS}, got {seq!r}")


def _zl_entries(model: VscModel, s):
    """Entries of the load impedance matrix (inverse of the admittance)."""
    y = model.load_admittance_pn(s)
    det = y.det()
    bad = np.abs(det) <= 1e-300
    if np.any(bad):
        idx = np.argmax(bad)
        raise SingularMatrixError(
            "load admittance singular", np.asarray(s, dtype=complex).ravel()[idx])
    return y.nn / det, -y.pn / det, -y.np / det, y.pp / det


def loop_impedance_matrix_form(model: VscModel, s, seq: str = "positive"):
    """Loop impedance from the closed 2x2 network: 1 / (C (Z_L + Z_S)^-1 B).

    B = C^T selects the studied sequence: [1 0] for positive, [0 1] for
    negative. The result is what a single-tone injection in that sequence
    sees looking into the whole loop.
    """
    _check_seq(seq)
    s = np.asarray(s, dtype=complex)
    zlpp, zlpn, zlnp, zlnn = _zl_entries(model, s)
    zs = model.grid_impedance_pn(s)
    t11 = zlpp + zs.pp
    t22 = zlnn + zs.nn
    det = t11 * t22 - zlpn * zlnp
    bad = np.abs(det) <= 1e-300
    if np.any(bad):
        idx = np.argmax(bad)
        raise SingularMatrixError("loop matrix singular", s.ravel()[idx])
    # (inverse)[0,0] = t22/det, [1,1] = t11/det
    diag = t22 / det if seq == "positive" else t11 / det
    return 1.0 / diag


def loop_impedance_accurate(model: VscModel, s, seq: str = "positive"):
    """Closed-form loop impedance with the mirror sequence folded in.

    Positive: Z_S^pp + Z_L^pp - Z_L^pn Z_L^np / (Z_S^nn + Z_L^nn); the
    negative case swaps the roles of both sequences.
    """
    _check_seq(seq)
    s = np.asarray(s, dtype=complex)
    zlpp, zlpn, zlnp, zlnn = _zl_entries(model, s)
    zs = model.grid_impedance_pn(s)
    if seq == "positive":
        return zs.pp + zlpp - zlpn * zlnp / (zs.nn + zlnn)
    return zs.nn + zlnn - zlnp * zlpn / (zs.pp + zlpp)


def loop_impedance_reduced(model: VscModel, s, seq: str = "positive"):
    """Strong-grid loop impedance: grid plus the diagonal admittance alone."""
    _check_seq(seq)
    s = np.asarray(s, dtype=complex)
    y = model.load_admittance_pn(s)
    zs = model.grid_impedance_pn(s)
    if seq == "positive":
        return zs.pp + 1.0 / y.pp
    return zs.nn + 1.0 / y.nn


def equivalent_load_admittance(model: VscModel, s, seq: str = "positive",
                               kind: str = "accurate"):
    """The admittance factor of the minor loop gain.

    Accurate kind: Y such that loop impedance = Z_S + 1/Y after folding in
    the mirror sequence. Reduced kind: the diagonal MIMO entry itself.
    """
    _check_seq(seq)
    s = np.asarray(s, dtype=complex)
    if kind == "reduced":
        y = model.load_admittance_pn(s)
        return y.pp if seq == "positive" else y.nn
    if kind != "accurate":
        raise ValueError(f"kind must be accurate or reduced, got {kind!r}")
    zs = model.grid_impedance_pn(s)
    zs_own = zs.pp if seq == "positive" else zs.nn
    return 1.0 / (loop_impedance_accurate(model, s, seq) - zs_own)


@dataclass(frozen=True)
class SisoModel:
    """A (kind, sequence) view over a VscModel, for callers that want an object."""

    model: VscModel
    kind: str = "accurate"
    sequence: str = "positive"

    def loop_impedance(self, s):
        if self.kind == "accurate":
            return loop_impedance_accurate(self.model, s, self.sequence)
        return loop_impedance_reduced(self.model, s, self.sequence)

    def load_admittance(self, s):
        return equivalent_load_admittance(self.model, s, self.sequence, self.kind)
