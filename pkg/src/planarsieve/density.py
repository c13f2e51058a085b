"""Planar maximum Nyquist density and the large-sieve bound built on it.

The density rho(Delta, R) is the largest Riemann measure of Delta visible
through a disc of radius 1/R, maximized over disc centers.  Discretely the
sup runs over cell centers of the grid padded by the disc radius; ties break
to the lexicographically smallest (time, frequency) index.  Two rasterization
modes are provided: "center_in" keeps a cell when its center lies in the
closed disc (reporting default), "outer" keeps it when the cell rectangle
meets the disc (conservative side of every theorem check).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .tfcore.types import TFGrid, TFRepr, GeometryError, tf_norm

DEFAULT_SLACK = 0.05
_R_GRID_POINTS = 33
_R_GRID_LO = 0.25
_R_GRID_HI = 4.0


def default_r_grid() -> np.ndarray:
    """Log-spaced default sweep of disc parameters R."""
    return np.geomspace(_R_GRID_LO, _R_GRID_HI, _R_GRID_POINTS)


@dataclass(frozen=True, eq=False)
class Mask:
    """Boolean cell set on a TFGrid, in STFT coordinates (time-major)."""

    grid: TFGrid
    cells: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.cells, dtype=bool)
        if c is self.cells:
            c = c.copy()
        if c.shape != self.grid.shape:
            raise ValueError(
                f"cells shape {c.shape} does not match grid {self.grid.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.cells))

    @property
    def measure(self) -> float:
        """Riemann measure |Delta| = (number of cells) * dA."""
        return self.count * self.grid.dA

    def complement(self) -> "Mask":
        return Mask(self.grid, ~self.cells)

    @classmethod
    def empty(cls, grid: TFGrid) -> "Mask":
        return cls(grid, np.zeros(grid.shape, dtype=bool))

    @classmethod
    def full(cls, grid: TFGrid) -> "Mask":
        return cls(grid, np.ones(grid.shape, dtype=bool))

    @classmethod
    def from_discs(cls, grid: TFGrid, discs) -> "Mask":
        """Union of discs given as (x_center, w_center, radius), center-in."""
        xs = grid.xs()[:, None]
        ws = grid.ws()[None, :]
        cells = np.zeros(grid.shape, dtype=bool)
        for (cx, cw, r) in discs:
            cells |= (xs - cx) ** 2 + (ws - cw) ** 2 <= r * r
        return cls(grid, cells)


@dataclass(frozen=True)
class DensityReport:
    R: float
    count: int
    rho: float
    measure: float
    argmax_center: tuple
    bound: float
    mode: str


@lru_cache(maxsize=64)
def _stencil_cached(R, dx, dw, mode, fx, fy):
    r = 1.0 / R
    rx = int(math.floor(r / dx + 1.0 + 1e-9))
    rw = int(math.floor(r / dw + 1.0 + 1e-9))
    a = (np.arange(-rx, rx + 1) * dx - fx * dx)[:, None]
    b = (np.arange(-rw, rw + 1) * dw - fy * dw)[None, :]
    if mode == "center_in":
        keep = a * a + b * b <= r * r
    elif mode == "outer":
        ca = np.maximum(np.abs(a) - dx / 2.0, 0.0)
        cb = np.maximum(np.abs(b) - dw / 2.0, 0.0)
        keep = ca * ca + cb * cb <= r * r
    else:
        raise ValueError(f"unknown rasterization mode {mode!r}")
    # Trim all-false border rows/cols so the stencil radius is tight.
    rows = np.flatnonzero(keep.any(axis=1))
    cols = np.flatnonzero(keep.any(axis=0))
    lo_r = min(rows[0], 2 * rx - rows[-1])
    lo_c = min(cols[0], 2 * rw - cols[-1])
    keep = keep[lo_r:2 * rx + 1 - lo_r, lo_c:2 * rw + 1 - lo_c]
    keep.setflags(write=False)
    return keep


def disc_raster(R: float, grid: TFGrid, mode: str = "center_in",
                frac_offset=(0.0, 0.0)) -> np.ndarray:
    """Boolean stencil of the disc of radius 1/R on the grid's cell lattice.

    The stencil is centered (odd side lengths) and symmetric for zero
    fractional offset; `frac_offset` shifts the disc center by fractions of a
    cell for supersampled scans.
    """
    if not (R > 0) or not math.isfinite(R):
        raise ValueError("R must be positive and finite")
    r = 1.0 / R
    if r < max(grid.dx, grid.dw):
        raise GeometryError(
            f"disc radius {r:.4g} is below one cell ({grid.dx:.4g} x {grid.dw:.4g})")
    return _stencil_cached(float(R), float(grid.dx), float(grid.dw), mode,
                           float(frac_offset[0]), float(frac_offset[1]))


def _row_spans(stencil):
    """Per-row [lo, hi] column bounds of the true span (None for empty rows)."""
    spans = []
    for row in stencil:
        idx = np.flatnonzero(row)
        spans.append(None if idx.size == 0 else (int(idx[0]), int(idx[-1])))
    return spans


def _sliding_disc_sums(field, stencil, dtype):
    """Sum of `field` under the stencil at every padded center.

    Returns an array of shape (nx + 2*rx, nw + 2*rw) whose [ic, jc] entry is
    the sum for the disc centered at grid index (ic - rx, jc - rw); centers
    run over the grid padded by the stencil radius.  Prefix sums along
    frequency, row adds along time: with an integer dtype the counts are
    exact.
    """
    nx, nw = field.shape
    sx, sw = stencil.shape
    rx, rw = sx // 2, sw // 2
    acc = np.zeros((nx + 2 * rx, nw + 2 * rw), dtype=dtype)
    csum = np.zeros((nx, nw + 1), dtype=dtype)
    np.cumsum(field, axis=1, out=csum[:, 1:])

    jc = np.arange(nw + 2 * rw)
    for b, span in enumerate(_row_spans(stencil)):
        if span is None:
            continue
        lo, hi = span
        # Center jc (grid col jc - rw) sees source columns jc - 2*rw + [lo, hi].
        j_lo = np.clip(jc - 2 * rw + lo, 0, nw)
        j_hi = np.clip(jc - 2 * rw + hi + 1, 0, nw)
        row_window = csum[:, j_hi] - csum[:, j_lo]          # (nx, centers)
        # Center ic (grid row ic - rx) sees source row ic - 2*rx + b.
        ic_lo = max(0, 2 * rx - b)
        ic_hi = nx + 2 * rx - b
        acc[ic_lo:ic_hi] += row_window[ic_lo - 2 * rx + b:ic_hi - 2 * rx + b]
    return acc


def nyquist_density(mask: Mask, R: float, mode: str = "center_in",
                    supersample: int = 1) -> DensityReport:
    """Maximum Nyquist density rho(Delta, R) of a mask.

    Scans every cell center of the grid padded by the disc radius (so discs
    may overhang the grid); `supersample` > 1 additionally scans fractional
    centers at 1/supersample cell steps, for convergence studies.  Ties take
    the first center in (time, frequency) scan order.
    """
    grid = mask.grid
    best = None
    for si in range(supersample):
        for sj in range(supersample):
            frac = (si / supersample, sj / supersample)
            stencil = disc_raster(R, grid, mode=mode, frac_offset=frac)
            rx, rw = stencil.shape[0] // 2, stencil.shape[1] // 2
            counts = _sliding_disc_sums(mask.cells.astype(np.int64), stencil,
                                        np.int64)
            flat = int(np.argmax(counts))
            ic, jc = np.unravel_index(flat, counts.shape)
            count = int(counts[ic, jc])
            center = (grid.x0 + (ic - rx + frac[0]) * grid.dx,
                      grid.w0 + (jc - rw + frac[1]) * grid.dw)
            if best is None or count > best[0]:
                best = (count, center)
    count, center = best
    rho = count * grid.dA
    return DensityReport(R=float(R), count=count, rho=rho,
                         measure=mask.measure, argmax_center=center,
                         bound=sieve_bound(rho, R), mode=mode)


def lambda_weight(mask: Mask, R: float, density_scale: float = 1.0,
                  mode: str = "center_in") -> float:
    """Sup over centers of the disc integral of exp(pi|z|^2/2) d mu.

    Here mu is the weighted measure density_scale * chi_Delta *
    exp(-pi|z|^2/2) dz; for density_scale = 1 the weights cancel cell by cell
    and the value equals nyquist_density(...).rho up to roundoff.
    """
    grid = mask.grid
    xs = grid.xs()[:, None]
    ws = grid.ws()[None, :]
    expo = (math.pi / 2.0) * (xs * xs + ws * ws)
    if expo.max() > 700.0:
        raise GeometryError("grid extends too far for the weighted measure")
    w_up = np.exp(expo)
    w_dn = np.exp(-expo)
    field = np.where(mask.cells, density_scale * w_up * w_dn * grid.dA, 0.0)

    stencil = disc_raster(R, grid, mode=mode)
    acc = _sliding_disc_sums(field, stencil, np.float64)
    return float(acc.max())


def sieve_bound(rho: float, R: float) -> float:
    """Concentration bound rho / (1 - exp(-pi/R^2))."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if not (R > 0) or not math.isfinite(R):
        raise ValueError("R must be positive and finite")
    return rho / (1.0 - math.exp(-math.pi / (R * R)))


def _admissible_r(grid: TFGrid, R: float) -> bool:
    r = 1.0 / R
    return (r >= max(grid.dx, grid.dw)
            and 2.0 * r <= min(grid.span_x(), grid.span_w()))


def optimize_R(mask: Mask, r_grid=None, mode: str = "center_in"):
    """Minimize the sieve bound over a finite R sweep.

    Returns (r_star, bound_star); ties resolve to the smallest R.  Raises
    when no sweep point admits a disc compatible with the grid.
    """
    if r_grid is None:
        r_grid = default_r_grid()
    best = None
    for R in sorted(float(r) for r in r_grid):
        if not _admissible_r(mask.grid, R):
            continue
        rep = nyquist_density(mask, R, mode=mode)
        if best is None or rep.bound < best[1] - 1e-15 * max(1.0, abs(best[1])):
            best = (R, rep.bound)
    if best is None:
        raise GeometryError("no admissible R in the sweep for this grid")
    return best


def bound_curve(mask: Mask, r_grid=None, mode: str = "center_in"):
    """Per-R density and bound rows for reporting: (R, rho, bound) tuples."""
    if r_grid is None:
        r_grid = default_r_grid()
    rows = []
    for R in (float(r) for r in r_grid):
        if not _admissible_r(mask.grid, R):
            continue
        rep = nyquist_density(mask, R, mode=mode)
        rows.append((R, rep.rho, rep.bound))
    return rows


def empirical_delta(mask: Mask, reps) -> float:
    """Largest observed concentration sum|P_Delta V| / sum|V| over a test set."""
    worst = 0.0
    for rep in reps:
        total = tf_norm(rep, 1)
        if total == 0.0:
            raise ValueError("empirical_delta requires nonzero representations")
        on_mask = float(np.sum(np.abs(rep.values)[mask.cells]) * rep.grid.dA)
        worst = max(worst, on_mask / total)
    return worst


@dataclass(frozen=True)
class TheoremReport:
    lhs: float
    rhs: float
    ratio: float
    rho: float
    R: float
    passed: bool


def verify_theorem1(rep: TFRepr, mask: Mask, R: float,
                    slack: float = DEFAULT_SLACK) -> TheoremReport:
    """Check sum_Delta |V| dA <= rho_outer/(1 - e^{-pi/R^2}) * sum |V| dA.

    Uses the outer rasterization for rho (conservative) and allows a
    multiplicative discretization slack on the right-hand side.
    """
    if rep.grid.shape != mask.grid.shape:
        raise ValueError("mask and representation grids differ")
    dens = nyquist_density(mask, R, mode="outer")
    lhs = float(np.sum(np.abs(rep.values)[mask.cells]) * rep.grid.dA)
    rhs = sieve_bound(dens.rho, R) * tf_norm(rep, 1)
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0.0 else math.inf
    return TheoremReport(lhs=lhs, rhs=rhs, ratio=ratio, rho=dens.rho,
                         R=float(R), passed=lhs <= rhs * (1.0 + slack))


@dataclass(frozen=True)
class UncertaintyReport:
    epsilon: float
    inf_bound: float
    r_star: float
    measure: float
    passed: bool


def uncertainty_check(rep: TFRepr, mask: Mask, r_grid=None,
                      slack: float = DEFAULT_SLACK) -> UncertaintyReport:
    """Concentration lower bound on the measure of the concentration set.

    Normalizes sum|V| dA to 1, measures epsilon = 1 - sum_Delta |V| dA, and
    checks 1 - eps <= inf_R bound(R) <= |Delta| with multiplicative slack on
    both inequalities (outer rasterization on the bound side).
    """
    total = tf_norm(rep, 1)
    if total == 0.0:
        raise ValueError("uncertainty_check requires a nonzero representation")
    if rep.grid.shape != mask.grid.shape:
        raise ValueError("mask and representation grids differ")
    on_mask = float(np.sum(np.abs(rep.values)[mask.cells]) * rep.grid.dA) / total
    eps = 1.0 - on_mask
    r_star, inf_bound = optimize_R(mask, r_grid=r_grid, mode="outer")
    ok = (1.0 - eps) <= inf_bound * (1.0 + slack) and \
        inf_bound <= mask.measure * (1.0 + slack)
    return UncertaintyReport(epsilon=eps, inf_bound=inf_bound, r_star=r_star,
                             measure=mask.measure, passed=ok)
