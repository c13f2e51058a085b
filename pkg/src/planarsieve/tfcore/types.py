"""Core value types: sampled signals, time-frequency grids, and plane samples.

All norms are Riemann sums over the sampling lattice: signals carry a step
``dt``, planar representations carry the cell area ``dx*dw``.  Arrays inside
the frozen dataclasses are marked read-only on construction.
"""

import numpy as np
from dataclasses import dataclass

FORMAT_VERSION = "planar-sieve/1"

# Hard truncation radius of the Gaussian window: |phi(t)| < 1e-40 for |t| >= 6.
WINDOW_TRUNC_RADIUS = 6.0


class GeometryError(ValueError):
    """Incompatible sampling geometries (extents, steps, symmetry)."""


def _freeze(arr, dtype):
    out = np.ascontiguousarray(arr, dtype=dtype)
    if out is arr:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Signal:
    """Finite complex time series sampled at t0 + k*dt, k = 0..n-1."""

    samples: np.ndarray
    dt: float
    t0: float

    def __post_init__(self):
        object.__setattr__(self, "samples", _freeze(self.samples, np.complex128))
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a nonempty 1-d array")
        if not (self.dt > 0) or not np.isfinite(self.dt):
            raise ValueError("dt must be a positive finite step")
        if not np.isfinite(self.t0):
            raise ValueError("t0 must be finite")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def norm(self, p=2) -> float:
        """Riemann-sum L^p norm: (sum |f|^p dt)^(1/p), or max |f| for p=inf."""
        a = np.abs(self.samples)
        if p == 1:
            return float(np.sum(a) * self.dt)
        if p == 2:
            return float(np.sqrt(np.sum(a * a) * self.dt))
        if p in ("inf", np.inf):
            return float(a.max())
        raise ValueError(f"unsupported norm order {p!r}")


@dataclass(frozen=True)
class SignalGeometry:
    """Sampling lattice of a signal without its values."""

    n: int
    dt: float
    t0: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not (self.dt > 0):
            raise ValueError("dt must be positive")

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @classmethod
    def of(cls, sig) -> "SignalGeometry":
        if isinstance(sig, cls):
            return sig
        if isinstance(sig, Signal):
            return cls(sig.n, sig.dt, sig.t0)
        n, dt, t0 = sig
        return cls(int(n), float(dt), float(t0))


@dataclass(frozen=True)
class TFGrid:
    """Uniform rectangular grid on the time-frequency plane.

    Cell centers sit at (x0 + i*dx, w0 + j*dw) for i = 0..nx-1, j = 0..nw-1;
    the cell area dA = dx*dw weights all planar Riemann sums.
    """

    nx: int
    nw: int
    dx: float
    dw: float
    x0: float
    w0: float

    def __post_init__(self):
        if self.nx < 1 or self.nw < 1:
            raise ValueError("grid must have at least one cell per axis")
        if not (self.dx > 0 and self.dw > 0):
            raise ValueError("dx and dw must be positive")

    @property
    def dA(self) -> float:
        return self.dx * self.dw

    @property
    def x_end(self) -> float:
        return self.x0 + (self.nx - 1) * self.dx

    @property
    def w_end(self) -> float:
        return self.w0 + (self.nw - 1) * self.dw

    @property
    def shape(self) -> tuple:
        return (self.nx, self.nw)

    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    def ws(self) -> np.ndarray:
        return self.w0 + self.dw * np.arange(self.nw)

    def span_x(self) -> float:
        return self.nx * self.dx

    def span_w(self) -> float:
        return self.nw * self.dw

    def frequency_symmetric(self, tol=1e-9) -> bool:
        """True when the frequency axis is symmetric about 0 (w_end = -w0)."""
        return abs(self.w_end + self.w0) <= tol * max(self.dw, 1.0)


def _check_plane_values(grid, values):
    v = _freeze(values, np.complex128)
    if v.shape != grid.shape:
        raise ValueError(f"values shape {v.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("plane samples must be finite")
    return v


@dataclass(frozen=True, eq=False)
class TFRepr:
    """Samples of a short-time Fourier transform on a TFGrid (time-major)."""

    grid: TFGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_plane_values(self.grid, self.values))


@dataclass(frozen=True, eq=False)
class FockRepr:
    """Weighted samples F(z)*exp(-pi*|z|^2/2) of an entire Fock-space function.

    Storing the weighted samples keeps magnitudes bounded; the raw F(z) would
    overflow for |z| of a few units.
    """

    grid: TFGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_plane_values(self.grid, self.values))


def tf_norm(rep, p=1) -> float:
    """Riemann-sum planar norm of a TFRepr or FockRepr.

    p=1: sum |V| dA; p=2: sqrt(sum |V|^2 dA); p=inf: max |V|.
    """
    a = np.abs(rep.values)
    dA = rep.grid.dA
    if p == 1:
        return float(np.sum(a) * dA)
    if p == 2:
        return float(np.sqrt(np.sum(a * a) * dA))
    if p in ("inf", np.inf):
        return float(a.max())
    raise ValueError(f"unsupported norm order {p!r}")
