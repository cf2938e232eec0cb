"""Sequence-domain impedance models and stability analysis of a grid-tied
voltage-source converter, with a time-domain simulator for verification."""

__version__ = "0.1.0"

from .params import (CircuitParams, ConfigurationError, ControllerParams,
                     InfeasibleOperatingPointError, OperatingPoint,
                     build_circuit, solve_operating_point, tune_controllers)
from .seqmodel import VscModel
from .siso import (SisoModel, loop_impedance_accurate,
                   loop_impedance_matrix_form, loop_impedance_reduced)
from .stability import (Locus, MarginalResult, PassivityCrossing,
                        StabilityVerdict, count_encirclements, gnc_loci,
                        gnc_verdict, make_grid, marginal_pll_search,
                        nc_verdict, nyquist_locus, passivity_crossings,
                        passivity_verdict)
from .timesim import (Injection, PhasorMeasurement, Scenario, SimResult,
                      SimState, classify_boundedness, equilibrium_state,
                      fft_phasor, impedance_sweep, inject_and_measure,
                      integrate, spectrum_report)

__all__ = [
    "__version__",
    "CircuitParams", "ControllerParams", "OperatingPoint", "VscModel",
    "ConfigurationError", "InfeasibleOperatingPointError",
    "build_circuit", "solve_operating_point", "tune_controllers",
    "SisoModel", "loop_impedance_accurate", "loop_impedance_matrix_form",
    "loop_impedance_reduced",
    "Locus", "StabilityVerdict", "PassivityCrossing", "MarginalResult",
    "make_grid", "nyquist_locus", "count_encirclements", "nc_verdict",
    "gnc_loci", "gnc_verdict", "passivity_crossings", "passivity_verdict",
    "marginal_pll_search",
    "SimState", "Scenario", "Injection", "SimResult", "PhasorMeasurement",
    "equilibrium_state", "integrate", "fft_phasor", "inject_and_measure",
    "impedance_sweep", "spectrum_report", "classify_boundedness",
]
