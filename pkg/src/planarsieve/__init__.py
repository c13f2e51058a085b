"""Planar concentration bounds and L1 recovery for short-time Fourier data."""

from .density import (DensityReport, Mask, TheoremReport, UncertaintyReport,
                      bound_curve, default_r_grid, empirical_delta,
                      lambda_weight, nyquist_density, optimize_R, sieve_bound,
                      uncertainty_check, verify_theorem1)
from .recover import (RecoveryResult, SolverParams, denoise_l1, inpaint_l1,
                      missing_data_bound, op_norm_power)
from .tfcore import (FORMAT_VERSION, FockRepr, GeometryError, Signal,
                     SignalGeometry, TFGrid, TFRepr, bargmann_from_stft,
                     fock_convolve, gaussian_window, local_reproducing_check,
                     stft, stft_adjoint, tf_norm, translate_fock,
                     window_values)

__version__ = "0.1.0"

__all__ = [
    "DensityReport", "Mask", "TheoremReport", "UncertaintyReport",
    "bound_curve", "default_r_grid", "empirical_delta", "lambda_weight",
    "nyquist_density", "optimize_R", "sieve_bound", "uncertainty_check",
    "verify_theorem1",
    "RecoveryResult", "SolverParams", "denoise_l1", "inpaint_l1",
    "missing_data_bound", "op_norm_power",
    "FORMAT_VERSION", "FockRepr", "GeometryError", "Signal",
    "SignalGeometry", "TFGrid", "TFRepr", "bargmann_from_stft",
    "fock_convolve", "gaussian_window", "local_reproducing_check", "stft",
    "stft_adjoint", "tf_norm", "translate_fock", "window_values",
    "__version__",
]
