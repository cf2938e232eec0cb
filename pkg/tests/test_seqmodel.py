"""Sequence-domain admittance structure, the dq assembly, and the notation
translations between dq, phase-domain, and complex-vector forms.

Random evaluation points deliberately sit off the imaginary axis: the
identities under test are algebraic in s, not properties of one contour.
"""
import numpy as np
import pytest

from conftest import build_case
from vscstab.seqmodel import VscModel
from vscstab.tfcore import SeqMatrix

RNG = np.random.default_rng(11)


def random_s(n):
    return RNG.normal(0.0, 300.0, n) + 1j * RNG.normal(0.0, 3000.0, n)


def entries(m):
    return {"pp": m.pp, "pn": m.pn, "np": m.np, "nn": m.nn}


def test_pll_transfer_is_unity_at_dc(case_default):
    t = case_default.model.t_pll(np.array([1e-8 + 0j]))[0]
    assert t == pytest.approx(1.0, rel=1e-6)


def test_gpll_at_dc_without_load():
    case = build_case(i_ref=0j)
    m = case.model
    got = m.gpll(np.array([1e-12 + 0j]))[0]
    assert got == pytest.approx(m.op.v_c0 / (2.0 * m.op.v0), rel=1e-9)


def test_frozen_pll_decouples_sequences(case_frozen):
    s = 1j * 2.0 * np.pi * np.logspace(-1, 4, 50)
    y = case_frozen.model.load_admittance_pn(s)
    assert np.max(np.abs(y.pn)) == 0.0
    assert np.max(np.abs(y.np)) == 0.0


def test_frozen_pll_diagonal_is_filter_plus_pi(case_frozen):
    m = case_frozen.model
    s = 1j * 2.0 * np.pi * np.linspace(1.0, 500.0, 40)
    y = m.load_admittance_pn(s)
    np.testing.assert_allclose(y.pp, 1.0 / (m.h_c(s) + m.z_f_pp(s)), rtol=1e-14)
    np.testing.assert_allclose(y.nn, 1.0 / (m.h_c(s) + m.z_f_nn(s)), rtol=1e-14)


def test_coefficient_conjugate_symmetry_on_the_axis(case_default):
    # nn(jw) = conj(pp(-jw)) and np(jw) = conj(pn(-jw)), 200-point grid
    w = 2.0 * np.pi * np.logspace(-1, 3, 200)
    m = case_default.model
    y_pos = m.load_admittance_pn(1j * w)
    y_neg = m.load_admittance_pn(-1j * w)
    np.testing.assert_allclose(y_pos.nn, np.conj(y_neg.pp), rtol=1e-12)
    np.testing.assert_allclose(y_pos.np, np.conj(y_neg.pn), rtol=1e-12)


def test_coefficient_conjugate_symmetry_off_axis(case_pll100):
    s = random_s(300)
    m = case_pll100.model
    y1 = m.load_admittance_pn(s)
    y2 = m.load_admittance_pn(np.conj(s))
    np.testing.assert_allclose(y1.nn, np.conj(y2.pp), rtol=1e-12)
    np.testing.assert_allclose(y1.np, np.conj(y2.pn), rtol=1e-12)


def test_grid_impedance_phasor_at_dc(case_default):
    m = case_default.model
    zs = m.grid_impedance_pn(np.array([0j]))
    zb = case_default.circuit.z_base
    want = (0.25 / np.sqrt(26.0)) * (1.0 + 5.0j) * zb
    assert complex(zs.pp[0]) == pytest.approx(want, rel=1e-12)
    assert complex(zs.nn[0]) == pytest.approx(np.conj(want), rel=1e-12)
    assert np.all(zs.pn == 0.0) and np.all(zs.np == 0.0)


def test_dq_assembly_matches_sequence_model(case_pll100):
    # the two constructions must agree at 500 random s, on and off the axis
    m = case_pll100.model
    s = random_s(500)
    direct = m.load_admittance_pn(s)
    via_dq = m.dq_to_modified_sequence(m.dq_impedance_blocks(s))
    for k, v in entries(direct).items():
        ref = np.maximum(np.abs(v), 1e-12)
        assert np.max(np.abs(v - entries(via_dq)[k]) / ref) < 1e-10


def test_dq_blocks_frozen_pll_are_antisymmetric(case_frozen):
    s = 1j * 2.0 * np.pi * np.linspace(0.5, 200.0, 30)
    y = case_frozen.model.dq_impedance_blocks(s)
    np.testing.assert_allclose(y.pp, y.nn, rtol=1e-14)
    np.testing.assert_allclose(y.pn, -y.np, rtol=1e-14)
    assert y.tag == "dq"


def test_symmetric_dq_matrix_diagonalizes():
    z, x = 0.7 + 0j, 2.3 + 0j
    m = SeqMatrix(pp=z, pn=-x, np=x, nn=z, tag="dq")
    seq = VscModel.dq_to_modified_sequence(m)
    assert seq.pp == pytest.approx(z + 1j * x)
    assert seq.nn == pytest.approx(z - 1j * x)
    assert abs(seq.pn) < 1e-15 and abs(seq.np) < 1e-15
    assert seq.tag == "sequence"


def test_dq_transform_requires_dq_tag(case_default):
    m = SeqMatrix(pp=1.0, pn=0.0, np=0.0, nn=1.0, tag="sequence")
    with pytest.raises(ValueError, match="dq"):
        case_default.model.dq_to_modified_sequence(m)


def test_phase_domain_reindexing(case_pll100):
    # positive sequence at 60 Hz phase-domain is the 10 Hz dq evaluation
    m = case_pll100.model
    f1 = case_pll100.circuit.f1
    ph = m.to_phase_domain_notation(1j * 2.0 * np.pi * (f1 + 10.0))
    dq = m.load_admittance_pn(1j * 2.0 * np.pi * 10.0)
    for k in ("pp", "pn", "np", "nn"):
        assert complex(entries(ph)[k]) == pytest.approx(
            complex(entries(dq)[k]), rel=1e-12)
    assert ph.tag == "phase"


def test_phase_domain_shift_is_a_bijection(case_default):
    m = case_default.model
    w1 = case_default.circuit.omega1
    s = 1j * 2.0 * np.pi * np.linspace(51.0, 149.0, 50)
    there = m.to_phase_domain_notation(s)
    back = m.load_admittance_pn(s - 1j * w1)
    for k in ("pp", "pn", "np", "nn"):
        np.testing.assert_allclose(entries(there)[k], entries(back)[k],
                                   rtol=1e-12)


def test_impedance_blocks_conjugate_relations(case_pll100):
    # Z_np is the coefficient conjugate of Z_pn; Z_nn of Z_pp
    z = case_pll100.model.impedance_blocks()
    s = random_s(100)
    np.testing.assert_allclose(np.conj(z["np"](np.conj(s))), z["pn"](s),
                               rtol=1e-10)
    np.testing.assert_allclose(np.conj(z["pp"](np.conj(s))), z["nn"](s),
                               rtol=1e-10)


def test_complex_vector_form_structure(case_pll100):
    m = case_pll100.model
    w1 = case_pll100.circuit.omega1
    z = m.impedance_blocks()
    s = 1j * 2.0 * np.pi * np.array([65.0, 80.0, 110.0])
    cv = m.to_complex_vector_form(s)
    np.testing.assert_allclose(cv.pp, z["pp"](s - 1j * w1), rtol=1e-12)
    np.testing.assert_allclose(cv.np, z["np"](s - 1j * w1), rtol=1e-12)
    # conjugated entries: same dq argument through the mirrored evaluation
    np.testing.assert_allclose(cv.nn, np.conj(z["pp"](s - 1j * w1)),
                               rtol=1e-12)
    np.testing.assert_allclose(cv.pn, np.conj(z["pn"](s - 1j * w1)),
                               rtol=1e-12)
    assert cv.tag == "cvector"


def test_complex_vector_form_frozen_pll_antidiagonal(case_frozen):
    s = 1j * 2.0 * np.pi * np.array([60.0, 75.0])
    cv = case_frozen.model.to_complex_vector_form(s)
    assert np.max(np.abs(cv.pn)) < 1e-15
    assert np.max(np.abs(cv.np)) < 1e-15


def test_coupling_confined_to_pll_bandwidth(case_pll100):
    # |pn| collapses with T_pll well above the PLL bandwidth
    m = case_pll100.model
    low = abs(complex(m.load_admittance_pn(1j * 2.0 * np.pi * 10.0).pn))
    high = abs(complex(m.load_admittance_pn(1j * 2.0 * np.pi * 1.0e4).pn))
    assert high < 1e-2 * low
