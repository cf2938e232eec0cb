"""CSV emission with exact floating-point round-trip.

Numbers are written with repr (shortest string that parses back to the same
double), newline is fixed to \\n, so identical inputs produce byte-identical
files and reading a file back reproduces the written values bit for bit.
"""
from __future__ import annotations

from typing import Iterable, List, Sequence, Tuple

import numpy as np


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def format_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> Tuple[List[str], List[List[str]]]:
    lines = text.strip("\n").split("\n")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def parse_csv_floats(text: str) -> Tuple[List[str], np.ndarray]:
    header, rows = parse_csv(text)
    data = np.array([[float(c) for c in row] for row in rows]) if rows \
        else np.empty((0, len(header)))
    return header, data


BODE_HEADER = ["f_dq_hz", "f_phase_hz", "re_ohm", "im_ohm", "mag_ohm",
               "phase_deg"]
NYQUIST_HEADER = ["omega_rad_s", "re", "im"]
VERDICT_HEADER = ["method", "model", "item", "value"]
TIMESERIES_HEADER = ["t_s", "ia", "ib", "ic", "id", "iq", "theta_pll"]
SPECTRUM_HEADER = ["f_hz", "magnitude"]


def bode_csv(f_dq, f_phase, z) -> str:
    z = np.asarray(z)
    rows = zip(f_dq, f_phase, z.real, z.imag, np.abs(z),
               np.degrees(np.angle(z)))
    return format_csv(BODE_HEADER, rows)


def nyquist_csv(omega, values) -> str:
    values = np.asarray(values)
    return format_csv(NYQUIST_HEADER, zip(omega, values.real, values.imag))


def verdict_csv(rows: Iterable[Sequence]) -> str:
    return format_csv(VERDICT_HEADER, rows)


def timeseries_csv(t, i_alpha, i_beta, theta) -> str:
    i_alpha = np.asarray(i_alpha)
    i_beta = np.asarray(i_beta)
    theta = np.asarray(theta)
    # amplitude-invariant two-axis to three-phase
    ia = i_alpha
    ib = -0.5 * i_alpha + (np.sqrt(3.0) / 2.0) * i_beta
    ic = -0.5 * i_alpha - (np.sqrt(3.0) / 2.0) * i_beta
    rot = np.exp(-1j * theta) * (i_alpha + 1j * i_beta)
    return format_csv(TIMESERIES_HEADER,
                      zip(t, ia, ib, ic, rot.real, rot.imag, theta))


def spectrum_csv(f, magnitude) -> str:
    return format_csv(SPECTRUM_HEADER, zip(f, magnitude))
