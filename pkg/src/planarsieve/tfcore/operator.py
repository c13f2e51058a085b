"""Gaussian window and the discrete windowed-exponential analysis operator.

The forward map takes samples f_k on a uniform lattice to plane values

    V[i, j] = sum_k f_k * phi(t_k - x_i) * exp(-2i*pi*w_j*t_k) * dt,

a Riemann sum of the windowed-exponential integral.  Per time column the
frequency sum is a length-N DFT (N = 1/(dw*dt), which must be an integer:
the frequency step is locked to the signal lattice), so the whole transform
is a batch of FFTs plus per-column phases.  The adjoint is the exact discrete
adjoint in the weighted inner products (dt on signals, dA on the plane).
"""

import math

import numpy as np

from .types import (
    GeometryError,
    Signal,
    SignalGeometry,
    TFGrid,
    TFRepr,
    WINDOW_TRUNC_RADIUS,
)

_GAUSS_AMP = 2.0 ** 0.25


def gaussian_window(n: int, dt: float, center: float = 0.0) -> Signal:
    """Unit-energy Gaussian window sampled on a centered lattice.

    phi(t) = 2^(1/4) * exp(-pi*(t-center)^2), hard-truncated to zero where
    the true magnitude drops below 1e-40 (|t - center| >= 6).  The lattice is
    t = center - (n-1)*dt/2 + k*dt, symmetric about the center.
    """
    if n * dt < 2 * WINDOW_TRUNC_RADIUS:
        raise GeometryError(
            f"window span n*dt = {n * dt:.4g} shorter than the truncation "
            f"support {2 * WINDOW_TRUNC_RADIUS:.4g}")
    t0 = center - (n - 1) * dt / 2.0
    u = t0 - center + dt * np.arange(n)
    vals = _GAUSS_AMP * np.exp(-np.pi * u * u)
    vals[np.abs(u) > WINDOW_TRUNC_RADIUS] = 0.0
    return Signal(vals.astype(np.complex128), dt, t0)


def window_values(u) -> np.ndarray:
    """phi evaluated at offsets u from its center (truncated tails)."""
    u = np.asarray(u, dtype=float)
    vals = _GAUSS_AMP * np.exp(-np.pi * u * u)
    return np.where(np.abs(u) <= WINDOW_TRUNC_RADIUS, vals, 0.0)


class TfOperator:
    """Precomputed analysis/synthesis pair for one (signal lattice, grid).

    strict_support=True (default) rejects grids whose shifted windows are not
    fully sampled by the signal lattice; strict_support=False clips instead,
    which changes the operator and is meant only for solver-vs-oracle
    consistency instances, never for continuum-fidelity experiments.
    """

    def __init__(self, geometry, grid: TFGrid, strict_support: bool = True):
        geom = SignalGeometry.of(geometry)
        self.geometry = geom
        self.grid = grid
        self.strict_support = strict_support

        n_fft_f = 1.0 / (grid.dw * geom.dt)
        n_fft = round(n_fft_f)
        if n_fft < 1 or abs(n_fft_f - n_fft) > 1e-9 * n_fft_f:
            raise GeometryError(
                f"1/(dw*dt) = {n_fft_f:.6g} is not an integer: the frequency "
                "step must be locked to the signal lattice")
        self.n_fft = n_fft

        half = WINDOW_TRUNC_RADIUS
        xs = grid.xs()
        if strict_support:
            lo_ok = xs[0] - half >= geom.t0 - 0.5 * geom.dt - 1e-9
            hi_ok = xs[-1] + half <= geom.t_end + 0.5 * geom.dt + 1e-9
            if not (lo_ok and hi_ok):
                raise GeometryError(
                    f"shifted windows need samples on [{xs[0] - half:.4g}, "
                    f"{xs[-1] + half:.4g}] but the signal covers "
                    f"[{geom.t0:.4g}, {geom.t_end:.4g}]")

        # Per-column segment of at most seg_len samples covering the window.
        seg_len = min(geom.n, int(math.floor(2 * half / geom.dt + 1e-9)) + 1)
        k0 = np.ceil((xs - half - geom.t0) / geom.dt - 1e-9).astype(np.int64)
        k0 = np.clip(k0, 0, geom.n - seg_len)
        raw = k0[:, None] + np.arange(seg_len)[None, :]     # (nx, seg)
        t_raw = geom.t0 + raw * geom.dt
        self.seg_idx = raw
        self.win = window_values(t_raw - xs[:, None])
        self.seg_len = seg_len

        # Relative-index twiddle shared by all columns, and per-column
        # frequency phases exp(-2i*pi*w_j*t_{k0_i}).
        m = np.arange(seg_len)
        self.twiddle = np.exp(-2j * np.pi * grid.w0 * m * geom.dt)
        t_start = geom.t0 + k0 * geom.dt
        self.phases = np.exp(-2j * np.pi * np.outer(t_start, grid.ws()))
        self.freq_bins = np.arange(grid.nw) % n_fft
        self.seg_mod = m % n_fft
        self._bins_unique = grid.nw <= n_fft
        # The relative frequency index is periodic mod n_fft, so segments
        # longer than the FFT length fold exactly.
        self._fold_pad = (-seg_len) % n_fft if seg_len > n_fft else 0

    def forward(self, samples: np.ndarray) -> np.ndarray:
        """Samples (n,) -> plane values (nx, nw)."""
        f = np.asarray(samples, dtype=np.complex128)
        if f.shape != (self.geometry.n,):
            raise ValueError(f"expected {self.geometry.n} samples, got {f.shape}")
        seg = f[self.seg_idx] * self.win * self.twiddle[None, :]
        if self.seg_len > self.n_fft:
            seg = np.pad(seg, ((0, 0), (0, self._fold_pad)))
            seg = seg.reshape(self.grid.nx, -1, self.n_fft).sum(axis=1)
            spec = np.fft.fft(seg, axis=1)
        else:
            spec = np.fft.fft(seg, n=self.n_fft, axis=1)
        return spec[:, self.freq_bins] * self.phases * self.geometry.dt

    def adjoint(self, values: np.ndarray) -> np.ndarray:
        """Plane values (nx, nw) -> samples (n,); exact discrete adjoint."""
        v = np.asarray(values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {v.shape}")
        pre = np.zeros((self.grid.nx, self.n_fft), dtype=np.complex128)
        vp = v * np.conj(self.phases)
        if self._bins_unique:
            pre[:, self.freq_bins] = vp
        else:
            np.add.at(pre, (slice(None), self.freq_bins), vp)
        # Unnormalized inverse DFT: conj(fft(conj(.))).
        back = np.conj(np.fft.fft(np.conj(pre), axis=1))[:, self.seg_mod]
        contrib = back * self.win * np.conj(self.twiddle)[None, :] * self.grid.dA
        out = np.zeros(self.geometry.n, dtype=np.complex128)
        for i in range(self.grid.nx):                       # ordered reduction
            sl = self.seg_idx[i]
            out[sl[0]:sl[-1] + 1] += contrib[i]
        return out

    def norm_data(self, samples) -> float:
        a = np.abs(np.asarray(samples))
        return float(np.sqrt(np.sum(a * a) * self.geometry.dt))

    def norm_plane(self, values) -> float:
        a = np.abs(np.asarray(values))
        return float(np.sqrt(np.sum(a * a) * self.grid.dA))


_op_cache: dict = {}


def get_operator(geometry, grid: TFGrid, strict_support: bool = True) -> TfOperator:
    """Small keyed cache: operator tables are reused across calls."""
    geom = SignalGeometry.of(geometry)
    key = (geom.n, geom.dt, geom.t0, grid, strict_support)
    op = _op_cache.get(key)
    if op is None:
        if len(_op_cache) > 16:
            _op_cache.clear()
        op = TfOperator(geom, grid, strict_support=strict_support)
        _op_cache[key] = op
    return op


def stft(f: Signal, grid: TFGrid, strict_support: bool = True) -> TFRepr:
    """Windowed-exponential transform of a sampled signal on a plane grid."""
    op = get_operator(f, grid, strict_support=strict_support)
    return TFRepr(grid, op.forward(f.samples))


def stft_adjoint(rep: TFRepr, geometry, strict_support: bool = True) -> Signal:
    """Exact adjoint of `stft` for the given signal lattice."""
    geom = SignalGeometry.of(geometry)
    op = get_operator(geom, rep.grid, strict_support=strict_support)
    return Signal(op.adjoint(rep.values), geom.dt, geom.t0)
