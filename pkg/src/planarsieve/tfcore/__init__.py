from .types import (
    FORMAT_VERSION,
    FockRepr,
    GeometryError,
    Signal,
    SignalGeometry,
    TFGrid,
    TFRepr,
    WINDOW_TRUNC_RADIUS,
    tf_norm,
)
from .operator import (
    TfOperator,
    gaussian_window,
    get_operator,
    stft,
    stft_adjoint,
    window_values,
)
from .fock import (
    ReproducingReport,
    bargmann_from_stft,
    convolve_at,
    fock_convolve,
    local_reproducing_check,
    translate_fock,
)

__all__ = [
    "FORMAT_VERSION",
    "FockRepr",
    "GeometryError",
    "ReproducingReport",
    "Signal",
    "SignalGeometry",
    "TFGrid",
    "TFRepr",
    "TfOperator",
    "WINDOW_TRUNC_RADIUS",
    "bargmann_from_stft",
    "convolve_at",
    "fock_convolve",
    "gaussian_window",
    "get_operator",
    "local_reproducing_check",
    "stft",
    "stft_adjoint",
    "tf_norm",
    "translate_fock",
    "window_values",
]
