"""Complex frequency-response algebra: pointwise transfer blocks and 2x2 matrices.

Blocks are pointwise evaluators rather than rational-coefficient objects;
every model formula is a composition of a handful of rational primitives and
downstream consumers only ever need values on a frequency grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

_SEQ_TAGS = ("sequence", "dq", "phase", "cvector")


class SingularMatrixError(ArithmeticError):
    """2x2 inversion hit a (near-)zero determinant; carries the frequency."""

    def __init__(self, message: str, s: complex | None = None):
        super().__init__(message)
        self.s = s


@dataclass(frozen=True)
class TfBlock:
    """A transfer function as an evaluator of complex s (rad/s).

    ``real_coefficients`` asserts value(conj(s)) = conj(value(s)); blocks with
    that property are fixed points of coefficient conjugation.
    """

    ev: Callable[[np.ndarray], np.ndarray]
    real_coefficients: bool = False

    def __call__(self, s):
        return self.ev(np.asarray(s, dtype=complex))


def coeff_conjugate(block: TfBlock) -> TfBlock:
    """The coefficient-conjugate block g(s) = conj(f(conj(s))).

    For rational f this conjugates every coefficient, so real-coefficient
    blocks are returned unchanged and the operation is an involution.
    """
    if block.real_coefficients:
        return block
    f = block.ev
    return TfBlock(ev=lambda s: np.conj(f(np.conj(s))), real_coefficients=False)


@dataclass(frozen=True)
class SeqMatrix:
    """One 2x2 complex frequency-response sample (or a vectorized stack).

    Entries may be scalars or equal-shape ndarrays. The coordinate tag
    records which basis the sample lives in.
    """

    pp: complex
    pn: complex
    np: complex
    nn: complex
    tag: str = "sequence"

    def __post_init__(self):
        if self.tag not in _SEQ_TAGS:
            raise ValueError(f"unknown coordinate tag {self.tag!r}")

    def det(self):
        return self.pp * self.nn - self.pn * self.np

    def as_array(self) -> np.ndarray:
        return np.array([[self.pp, self.pn], [self.np, self.nn]])


def mat2_inverse(m: SeqMatrix, s: complex | None = None) -> SeqMatrix:
    """Pointwise inverse. Raises SingularMatrixError below |det| = 1e-300."""
    det = m.det()
    if np.min(np.abs(det)) <= 1e-300:
        raise SingularMatrixError(f"singular 2x2 at s={s}", s)
    return SeqMatrix(pp=m.nn / det, pn=-m.pn / det,
                     np=-m.np / det, nn=m.pp / det, tag=m.tag)


def mat2_eigenvalues(m: SeqMatrix,
                     prev: Optional[Tuple[complex, complex]] = None
                     ) -> Tuple[complex, complex]:
    """Both roots of the characteristic quadratic.

    With ``prev`` given (the pair at the previous frequency sample), the roots
    are ordered by nearest-neighbor continuity so that loci can be traced
    without branch swaps.
    """
    tr = m.pp + m.nn
    disc = np.sqrt(tr * tr - 4.0 * m.det())
    a = (tr + disc) / 2.0
    b = (tr - disc) / 2.0
    if prev is not None:
        p1, p2 = prev
        keep = abs(a - p1) + abs(b - p2)
        swap = abs(b - p1) + abs(a - p2)
        if swap < keep:
            a, b = b, a
    return a, b
