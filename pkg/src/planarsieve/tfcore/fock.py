"""Bargmann-side operations on weighted plane samples.

A FockRepr stores F(z)*exp(-pi|z|^2/2) on the grid (z = x + i*w).  In that
weighting the three operations here take numerically stable forms:

* transform samples:   Fw[i,j] = exp(-i*pi*x_i*w_j) * V[i, flip(j)]
* translation by w:    Fw(z) -> exp(i*pi*Im(conj(w)*z)) * Fw(z - w)
* disc convolution:    (F * chi_D)w(z) =
      integral over |u| <= 1/R of Fw(z-u) exp(-pi|u|^2/2) exp(i*pi*Im(u*conj(z))) du

The convolution kernel uses exact-coverage weights on rim cells (midpoint
weights elsewhere); a plain center-in rasterization leaves an O(h) rim error
comparable to the residual tolerances this layer is verified against.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.integrate

from .types import FockRepr, GeometryError, TFGrid, TFRepr

log = logging.getLogger(__name__)


def bargmann_from_stft(rep: TFRepr) -> FockRepr:
    """Weighted Bargmann samples from STFT samples: frequency flip and chirp.

    Requires a frequency axis symmetric about zero so that w -> -w maps grid
    points to grid points.
    """
    grid = rep.grid
    if not grid.frequency_symmetric():
        raise GeometryError(
            "frequency axis must be symmetric about 0 for the flip w -> -w")
    chirp = np.exp(-1j * np.pi * np.outer(grid.xs(), grid.ws()))
    return FockRepr(grid, chirp * rep.values[:, ::-1])


def translate_fock(fock: FockRepr, w, mass_tol: float = 1e-6) -> FockRepr:
    """Translation by w = a + i*b acting on weighted samples.

    Lattice shifts (a, b multiples of dx, dw) are exact index shifts; other
    shifts fall back to bilinear interpolation of the weighted samples and
    are approximate.  Content shifted past the grid edge is dropped; if its
    L1 share exceeds `mass_tol` the translation is refused.
    """
    w = complex(w)
    a, b = w.real, w.imag
    grid = fock.grid
    vals = fock.values

    total = float(np.sum(np.abs(vals))) * grid.dA
    if total > 0.0:
        dest_x = grid.xs() + a
        dest_w = grid.ws() + b
        keep_i = (dest_x >= grid.x0 - grid.dx / 2) & \
                 (dest_x <= grid.x_end + grid.dx / 2)
        keep_j = (dest_w >= grid.w0 - grid.dw / 2) & \
                 (dest_w <= grid.w_end + grid.dw / 2)
        lost = total - float(np.sum(np.abs(vals[np.ix_(keep_i, keep_j)]))) * grid.dA
        if lost > mass_tol * total:
            raise GeometryError(
                f"translation by {w} pushes {lost / total:.3e} of the L1 mass "
                f"off-grid (tolerance {mass_tol:.1e})")

    da = a / grid.dx
    db = b / grid.dw
    on_lattice = abs(da - round(da)) <= 1e-9 and abs(db - round(db)) <= 1e-9
    shifted = np.zeros_like(vals)
    if on_lattice:
        di, dj = int(round(da)), int(round(db))
        src_i = slice(max(0, -di), grid.nx - max(0, di))
        src_j = slice(max(0, -dj), grid.nw - max(0, dj))
        dst_i = slice(max(0, di), grid.nx - max(0, -di))
        dst_j = slice(max(0, dj), grid.nw - max(0, -dj))
        shifted[dst_i, dst_j] = vals[src_i, src_j]
    else:
        log.debug("off-lattice translation %s: bilinear interpolation", w)
        gx = (grid.xs() - a - grid.x0) / grid.dx            # fractional source rows
        gy = (grid.ws() - b - grid.w0) / grid.dw
        i0 = np.floor(gx).astype(np.int64)
        j0 = np.floor(gy).astype(np.int64)
        fi = gx - i0
        fj = gy - j0
        padded = np.zeros((grid.nx + 2, grid.nw + 2), dtype=vals.dtype)
        padded[1:-1, 1:-1] = vals
        i0c = np.clip(i0 + 1, 0, grid.nx + 1)
        i1c = np.clip(i0 + 2, 0, grid.nx + 1)
        j0c = np.clip(j0 + 1, 0, grid.nw + 1)
        j1c = np.clip(j0 + 2, 0, grid.nw + 1)
        fi = fi[:, None]
        fj = fj[None, :]
        shifted = ((1 - fi) * (1 - fj) * padded[np.ix_(i0c, j0c)]
                   + (1 - fi) * fj * padded[np.ix_(i0c, j1c)]
                   + fi * (1 - fj) * padded[np.ix_(i1c, j0c)]
                   + fi * fj * padded[np.ix_(i1c, j1c)])

    # Im(conj(w) * z) = a*omega - b*x on the grid.
    phase = np.exp(1j * np.pi * (a * grid.ws()[None, :] - b * grid.xs()[:, None]))
    return FockRepr(grid, phase * shifted)


def _coverage(r, x0, x1, y0, y1):
    """Fraction of the rectangle covered by the closed disc of radius r."""

    def chord(u):
        c = math.sqrt(max(r * r - u * u, 0.0)) if abs(u) < r else 0.0
        return max(0.0, min(y1, c) - max(y0, -c))

    breaks = sorted({x0, x1,
                     *(s * math.sqrt(max(r * r - y * y, 0.0))
                       for y in (y0, y1) for s in (-1.0, 1.0)
                       if abs(y) < r),
                     *(v for v in (-r, r))})
    pts = [x for x in breaks if x0 < x < x1]
    area, _ = scipy.integrate.quad(chord, x0, x1, points=pts or None, limit=200)
    return area / ((x1 - x0) * (y1 - y0))


@lru_cache(maxsize=32)
def _disc_kernel(R, dx, dw):
    """Offsets and quadrature weights of the Gaussian-weighted disc kernel.

    Returns (ai, bj, wgt): integer offset arrays and complex-free weights
    coverage * exp(-pi*(a^2+b^2)/2) * dA for every cell meeting the disc.
    """
    r = 1.0 / R
    nx_r = int(math.ceil(r / dx)) + 1
    nw_r = int(math.ceil(r / dw)) + 1
    ai = np.arange(-nx_r, nx_r + 1)
    bj = np.arange(-nw_r, nw_r + 1)
    a = ai[:, None] * dx
    b = bj[None, :] * dw
    half_diag = math.hypot(dx, dw) / 2.0
    dist = np.hypot(a, b)
    inside = dist <= r - half_diag
    outside_lo = np.maximum(np.abs(a) - dx / 2, 0.0)
    outside_hi = np.maximum(np.abs(b) - dw / 2, 0.0)
    outside = np.hypot(outside_lo, outside_hi) > r
    cov = np.where(inside, 1.0, 0.0)
    rim = ~inside & ~outside
    for i, j in zip(*np.nonzero(rim)):
        cov[i, j] = _coverage(r, a[i, 0] - dx / 2, a[i, 0] + dx / 2,
                              b[0, j] - dw / 2, b[0, j] + dw / 2)
    wgt = cov * np.exp(-0.5 * np.pi * (a * a + b * b)) * (dx * dw)
    keep = wgt > 0.0
    ii, jj = np.nonzero(keep)
    out_ai = ai[ii]
    out_bj = bj[jj]
    out_w = wgt[ii, jj]
    for arr in (out_ai, out_bj, out_w):
        arr.setflags(write=False)
    return out_ai, out_bj, out_w


def _require_disc_fits(grid: TFGrid, R: float):
    r = 1.0 / R
    if 2.0 * r > min(grid.span_x(), grid.span_w()):
        raise GeometryError(
            f"disc of radius {r:.4g} exceeds the grid span "
            f"({grid.span_x():.4g} x {grid.span_w():.4g})")


def fock_convolve(fock: FockRepr, R: float) -> FockRepr:
    """Twisted convolution with the disc indicator, on the whole grid.

    Riemann evaluation of the weighted samples of F * chi_{D_{1/R}}; values
    near the boundary are truncated (the off-grid part of F is treated as
    zero).
    """
    grid = fock.grid
    _require_disc_fits(grid, R)
    ai, bj, wgt = _disc_kernel(float(R), float(grid.dx), float(grid.dw))
    xs = grid.xs()
    ws = grid.ws()
    vals = fock.values
    out = np.zeros_like(vals)
    # Per-offset phase: exp(i*pi*(b*x - a*omega)), separable in rows/cols.
    row_ph = {}
    col_ph = {}
    for off_a, off_b, wk in zip(ai, bj, wgt):
        aa = off_a * grid.dx
        bb = off_b * grid.dw
        rp = row_ph.get(off_b)
        if rp is None:
            rp = np.exp(1j * np.pi * bb * xs)
            row_ph[off_b] = rp
        cp = col_ph.get(off_a)
        if cp is None:
            cp = np.exp(-1j * np.pi * aa * ws)
            col_ph[off_a] = cp
        dst_i = slice(max(0, off_a), grid.nx + min(0, off_a))
        dst_j = slice(max(0, off_b), grid.nw + min(0, off_b))
        src_i = slice(max(0, -off_a), grid.nx - max(0, off_a))
        src_j = slice(max(0, -off_b), grid.nw - max(0, off_b))
        block = vals[src_i, src_j] * (wk * cp[dst_j])[None, :]
        block *= rp[dst_i][:, None]
        out[dst_i, dst_j] += block
    return FockRepr(grid, out)


def convolve_at(fock: FockRepr, R: float, i: int, j: int) -> complex:
    """Single-point evaluation of the disc convolution at grid index (i, j)."""
    grid = fock.grid
    _require_disc_fits(grid, R)
    ai, bj, wgt = _disc_kernel(float(R), float(grid.dx), float(grid.dw))
    si = i - ai
    sj = j - bj
    if si.min() < 0 or si.max() >= grid.nx or sj.min() < 0 or sj.max() >= grid.nw:
        raise GeometryError(
            f"probe ({i}, {j}) is within a disc radius of the grid boundary")
    x = grid.x0 + i * grid.dx
    w = grid.w0 + j * grid.dw
    phase = np.exp(1j * np.pi * (bj * grid.dw * x - ai * grid.dx * w))
    return complex(np.sum(fock.values[si, sj] * wgt * phase))


@dataclass(frozen=True)
class ReproducingReport:
    R: float
    max_residual: float
    residuals: tuple
    probes: tuple


def local_reproducing_check(fock: FockRepr, R: float, probes) -> ReproducingReport:
    """Residual of F(z) = (1 - e^{-pi/R^2})^{-1} (F * chi_D)(z) at probes.

    Probes are plane points (complex z or (x, w) pairs), snapped to the
    nearest grid index; residuals are normalized by max |F| over the grid
    (weighted samples on both sides, so the weights cancel).
    """
    grid = fock.grid
    scale = float(np.abs(fock.values).max())
    if scale == 0.0:
        snapped = tuple(_snap(grid, p) for p in probes)
        zeros = tuple(0.0 for _ in probes)
        return ReproducingReport(R=float(R), max_residual=0.0,
                                 residuals=zeros, probes=snapped)
    c = 1.0 - math.exp(-math.pi / (R * R))
    residuals = []
    snapped = []
    for p in probes:
        i, j = _snap_index(grid, p)
        conv = convolve_at(fock, R, i, j)
        res = abs(fock.values[i, j] - conv / c) / scale
        residuals.append(float(res))
        snapped.append((grid.x0 + i * grid.dx, grid.w0 + j * grid.dw))
    return ReproducingReport(R=float(R), max_residual=max(residuals),
                             residuals=tuple(residuals), probes=tuple(snapped))


def _snap_index(grid: TFGrid, p):
    if isinstance(p, (tuple, list)) or (hasattr(p, "__len__") and len(p) == 2):
        x, w = float(p[0]), float(p[1])
    else:
        pc = complex(p)
        x, w = pc.real, pc.imag
    i = int(round((x - grid.x0) / grid.dx))
    j = int(round((w - grid.w0) / grid.dw))
    if not (0 <= i < grid.nx and 0 <= j < grid.nw):
        raise GeometryError(f"probe ({x}, {w}) lies outside the grid")
    return i, j


def _snap(grid: TFGrid, p):
    i, j = _snap_index(grid, p)
    return (grid.x0 + i * grid.dx, grid.w0 + j * grid.dw)
