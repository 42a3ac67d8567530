"""Partial inverse spectral problem on a star graph with singular potentials.

Forward side: quasi-derivative Sturm-Liouville solves on each edge, Weyl
functions and branch-labelled graph spectra.  Inverse side: recovery of
the potentials on two edges from the remaining potentials, the spectrum of
one problem and half of the spectrum of a second one.
"""
from .graph_spectra import (AssumptionReport, SpectrumTable, StarProblem, char_delta,
                            find_eigenvalues, verify_assumptions)
from .interval_inverse import spectra_from_potential, two_spectra_reconstruct, weyl_fit_reconstruct
from .pipeline import ReconstructionParams, ReconstructionReport, run_full_reconstruction
from .products import Asymptote, ZeroSequence, product_eval, representation_check
from .riesz import HVector, frame_bound_check, hilbert_form_diag, recover_from_coefficients
from .sl_core import Potential, fundamental_at_pi, integrate_system, relative_l2_error
from .weyl import d_functions, weyl_m, weyl_sum_g, weyl_sums_h

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport", "Asymptote", "HVector", "Potential", "ReconstructionParams",
    "ReconstructionReport", "SpectrumTable", "StarProblem", "ZeroSequence", "char_delta",
    "d_functions", "find_eigenvalues", "frame_bound_check", "fundamental_at_pi",
    "hilbert_form_diag", "integrate_system", "product_eval", "recover_from_coefficients",
    "relative_l2_error", "representation_check", "run_full_reconstruction",
    "spectra_from_potential", "two_spectra_reconstruct", "verify_assumptions", "weyl_fit_reconstruct",
    "weyl_m", "weyl_sum_g", "weyl_sums_h",
]
