"""SISO loop impedances: matrix form vs closed forms, the reduced shortcut,
and the equivalent admittance used in minor loop gains."""
import math

import numpy as np
import pytest

from conftest import build_case
from vscstab.siso import (SisoModel, equivalent_load_admittance,
                          loop_impedance_accurate,
                          loop_impedance_matrix_form, loop_impedance_reduced)

RNG = np.random.default_rng(3)


def random_s(n):
    return RNG.normal(0.0, 300.0, n) + 1j * RNG.normal(0.0, 3000.0, n)


def test_frozen_pll_positive_sequence_is_series_loop(case_frozen):
    m = case_frozen.model
    s = 1j * 2.0 * math.pi * np.linspace(1.0, 300.0, 40)
    want = m.z_s_pp(s) + m.h_c(s) + m.z_f_pp(s)
    np.testing.assert_allclose(loop_impedance_matrix_form(m, s), want,
                               rtol=1e-12)
    np.testing.assert_allclose(loop_impedance_reduced(m, s), want, rtol=1e-12)


@pytest.mark.parametrize("seq", ["positive", "negative"])
def test_matrix_form_equals_closed_form_at_random_s(case_pll100, seq):
    m = case_pll100.model
    s = random_s(500)
    za = loop_impedance_accurate(m, s, seq)
    zm = loop_impedance_matrix_form(m, s, seq)
    assert np.max(np.abs(za - zm) / np.abs(zm)) < 1e-10


def test_frozen_pll_collapse(case_frozen):
    m = case_frozen.model
    s = 1j * 2.0 * math.pi * np.logspace(-1, 4, 500)
    for seq in ("positive", "negative"):
        za = loop_impedance_accurate(m, s, seq)
        zr = loop_impedance_reduced(m, s, seq)
        assert np.max(np.abs(za - zr) / np.abs(zr)) < 1e-14


def test_ideal_grid_collapse():
    # with zero grid impedance the coupling correction cancels exactly
    case = build_case(scr=math.inf, pll_bw=100.0)
    s = 1j * 2.0 * math.pi * np.logspace(-1, 3, 300)
    for seq in ("positive", "negative"):
        za = loop_impedance_accurate(case.model, s, seq)
        zr = loop_impedance_reduced(case.model, s, seq)
        assert np.max(np.abs(za - zr) / np.abs(zr)) < 1e-12


@pytest.mark.parametrize("kind,zfun", [
    ("accurate", loop_impedance_accurate),
    ("reduced", loop_impedance_reduced),
])
def test_sequence_conjugate_symmetry(case_pll100, kind, zfun):
    # Z^n(jw) = conj(Z^p(-jw)) on a 200-point grid
    m = case_pll100.model
    w = 2.0 * math.pi * np.logspace(-1, 3, 200)
    zn = zfun(m, 1j * w, "negative")
    zp = zfun(m, -1j * w, "positive")
    np.testing.assert_allclose(zn, np.conj(zp), rtol=1e-12)


def test_strong_grid_limit_monotone():
    # the reduced model converges to the accurate one as the grid stiffens
    s = 1j * 2.0 * math.pi * np.linspace(0.5, 100.0, 200)
    devs = []
    for scr in (4.0, 8.0, 16.0, 64.0):
        m = build_case(scr=scr, pll_bw=100.0).model
        za = loop_impedance_accurate(m, s, "negative")
        zr = loop_impedance_reduced(m, s, "negative")
        devs.append(float(np.max(np.abs(za - zr) / np.abs(za))))
    assert all(a > b for a, b in zip(devs, devs[1:]))


def test_equivalent_admittance_reconstructs_loop(case_pll100):
    m = case_pll100.model
    s = 1j * 2.0 * math.pi * np.linspace(2.0, 98.0, 49)
    for seq, zs_own in (("positive", m.z_s_pp(s)), ("negative", m.z_s_nn(s))):
        y = equivalent_load_admittance(m, s, seq, "accurate")
        z = loop_impedance_accurate(m, s, seq)
        np.testing.assert_allclose(zs_own + 1.0 / y, z, rtol=1e-12)


def test_equivalent_admittance_reduced_is_diagonal_entry(case_pll100):
    m = case_pll100.model
    s = 1j * 2.0 * math.pi * np.array([7.0, 31.0, 77.0])
    y = equivalent_load_admittance(m, s, "positive", "reduced")
    np.testing.assert_allclose(y, m.load_admittance_pn(s).pp, rtol=1e-15)


def test_frozen_pll_equivalent_admittance_is_plain_admittance(case_frozen):
    m = case_frozen.model
    s = 1j * 2.0 * math.pi * np.linspace(1.0, 200.0, 50)
    ya = equivalent_load_admittance(m, s, "positive", "accurate")
    np.testing.assert_allclose(ya, m.load_admittance_pn(s).pp, rtol=1e-12)


def test_sequence_argument_validated(case_default):
    with pytest.raises(ValueError, match="sequence"):
        loop_impedance_accurate(case_default.model, 1j, "zero")
    with pytest.raises(ValueError, match="kind"):
        equivalent_load_admittance(case_default.model, 1j, "positive", "bad")


def test_siso_model_view(case_pll100):
    s = 1j * 2.0 * math.pi * np.array([11.0, 43.0])
    view = SisoModel(case_pll100.model, kind="accurate", sequence="negative")
    np.testing.assert_allclose(
        view.loop_impedance(s),
        loop_impedance_accurate(case_pll100.model, s, "negative"), rtol=1e-15)
    np.testing.assert_allclose(
        view.load_admittance(s),
        equivalent_load_admittance(case_pll100.model, s, "negative"),
        rtol=1e-15)
