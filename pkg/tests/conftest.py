"""Shared fixtures. Assembled cases are cached per (scr, pll, cc, i_ref)
because solving the operating point and building the model is cheap but the
same handful of conditions shows up in dozens of tests.
"""
import functools

import pytest

from vscstab.config import assemble, default_config


@functools.lru_cache(maxsize=None)
def _assemble_cached(scr, pll_bw, cc_bw, i_ref_str):
    cfg = default_config()
    cfg["circuit"]["scr"] = scr
    cfg["circuit"]["i_ref_pu"] = complex(i_ref_str)
    cfg["control"]["pll_bw_hz"] = pll_bw
    cfg["control"]["cc_bw_hz"] = cc_bw
    return assemble(cfg)


def build_case(scr=4.0, pll_bw=5.0, cc_bw=200.0, i_ref=0.5 + 0j):
    return _assemble_cached(float(scr), float(pll_bw), float(cc_bw),
                            str(complex(i_ref)))


@pytest.fixture(scope="session")
def case_default():
    """SCR=4, CC=200 Hz, PLL=5 Hz, 0.5 p.u. generation."""
    return build_case()


@pytest.fixture(scope="session")
def case_pll100():
    """Same grid and flow with the 100 Hz PLL (the unstable headline point)."""
    return build_case(pll_bw=100.0)


@pytest.fixture(scope="session")
def case_frozen():
    """PLL bandwidth zero: the sequence networks decouple exactly."""
    return build_case(pll_bw=0.0)
