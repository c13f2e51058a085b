"""Independent slow-route oracles used to cross-check the fast implementations.

Each oracle re-derives its result from the defining formulas with a different
method than the production path: adaptive quadrature instead of FFT sums, a
materialized dense matrix instead of the implicit operator, per-center counting
instead of prefix-sum scans, and an LP instead of the primal-dual solver.
They are deliberately slow and refuse instances large enough to be slow in a
test suite.
"""

import math

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize

from .tfcore.types import (
    Signal,
    SignalGeometry,
    TFGrid,
    WINDOW_TRUNC_RADIUS,
)
from .density import Mask, disc_raster

# Facet count of the polyhedral approximation of the complex modulus used by
# the LP oracle.  |c| is underestimated by at most a factor cos(pi/FACETS),
# i.e. by about 0.12% for 64 facets.
LP_FACETS = 64
LP_MAX_PRIMAL = 200
ORACLE_MAX_GRID = 128


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested error target."""


class OracleSizeError(ValueError):
    """Instance is too large for the slow oracle route."""


def _window_value(t):
    # Gaussian window evaluated from its formula, kept local to the oracle on
    # purpose: the oracle must not share the production window table.
    t = np.asarray(t, dtype=float)
    out = 2.0 ** 0.25 * np.exp(-np.pi * t * t)
    return np.where(np.abs(t) <= WINDOW_TRUNC_RADIUS, out, 0.0)


def _sinc_interpolant(f: Signal):
    """Band-limited (Whittaker) interpolant of the samples.

    Exact for signals whose spectrum lies strictly inside the Nyquist band
    1/(2*dt); the Gaussian-atom corpus satisfies this with tails far below
    the quadrature target.
    """
    ts = f.times()
    vals = f.samples

    def interp(t):
        return complex(np.sum(vals * np.sinc((t - ts) / f.dt)))

    return interp


def quadrature_stft(f, points, target=1e-10, quad_limit=600):
    """Windowed-exponential integral evaluated per point by adaptive quadrature.

    Parameters
    ----------
    f : Signal or callable
        Signal samples (interpolated band-limitedly) or a callable f(t).
    points : sequence of (x, w)
        Plane points at which to evaluate.
    target : float
        Absolute error target per point; exceeding it raises QuadratureError.

    Returns
    -------
    np.ndarray of complex values, one per point.
    """
    if isinstance(f, Signal):
        fun = _sinc_interpolant(f)
        t_lo, t_hi = f.t0, f.t_end
    elif callable(f):
        fun = f
        t_lo, t_hi = -np.inf, np.inf
    else:
        raise TypeError("f must be a Signal or a callable")

    out = np.empty(len(points), dtype=np.complex128)
    for idx, (x, w) in enumerate(points):
        a = max(t_lo, x - WINDOW_TRUNC_RADIUS)
        b = min(t_hi, x + WINDOW_TRUNC_RADIUS)
        if b <= a:
            out[idx] = 0.0
            continue

        def integrand_re(t):
            z = fun(t) * float(_window_value(t - x))
            ph = -2.0 * np.pi * w * t
            return z.real * math.cos(ph) - z.imag * math.sin(ph)

        def integrand_im(t):
            z = fun(t) * float(_window_value(t - x))
            ph = -2.0 * np.pi * w * t
            return z.real * math.sin(ph) + z.imag * math.cos(ph)

        re, re_err = scipy.integrate.quad(
            integrand_re, a, b, epsabs=target / 4, epsrel=0.0, limit=quad_limit)
        im, im_err = scipy.integrate.quad(
            integrand_im, a, b, epsabs=target / 4, epsrel=0.0, limit=quad_limit)
        if re_err + im_err > target:
            raise QuadratureError(
                f"quadrature error estimate {re_err + im_err:.3e} exceeds "
                f"target {target:.3e} at point ({x}, {w})")
        out[idx] = re + 1j * im
    return out


def dense_operator(geometry, grid: TFGrid) -> np.ndarray:
    """Materialized analysis operator as a dense (nx*nw, n) matrix.

    Row (i, j) (row-major) maps samples to the value at grid point (x_i, w_j):
    entries phi(t_k - x_i) * exp(-2i*pi*w_j*t_k) * dt, with the window
    evaluated from its formula (no shared tables with the fast path).
    """
    geom = SignalGeometry.of(geometry)
    if grid.nx * grid.nw > ORACLE_MAX_GRID * ORACLE_MAX_GRID:
        raise OracleSizeError("grid too large for the dense operator oracle")
    ts = geom.times()
    xs = grid.xs()
    ws = grid.ws()
    win = _window_value(ts[None, :] - xs[:, None])          # (nx, n)
    osc = np.exp(-2j * np.pi * np.outer(ws, ts))            # (nw, n)
    mat = win[:, None, :] * osc[None, :, :] * geom.dt       # (nx, nw, n)
    return mat.reshape(grid.nx * grid.nw, geom.n)


def dense_operator_norm(geometry, grid: TFGrid) -> float:
    """Largest singular value of the analysis operator in the weighted norms.

    Weighted: domain norm sum|f|^2 dt, range norm sum|V|^2 dA, so the plain
    spectral norm of the matrix is scaled by sqrt(dA/dt).
    """
    geom = SignalGeometry.of(geometry)
    mat = dense_operator(geom, grid)
    s = scipy.linalg.svdvals(mat)
    return float(s[0] * math.sqrt(grid.dA / geom.dt))


def dense_frame_eigvec(geometry, grid: TFGrid):
    """Top eigenpair of the weighted frame operator: sqrt of the top
    eigenvalue equals the weighted operator norm."""
    geom = SignalGeometry.of(geometry)
    mat = dense_operator(geom, grid)
    gram = (mat.conj().T @ mat) * (grid.dA / geom.dt)
    vals, vecs = scipy.linalg.eigh(gram)
    return float(vals[-1]), vecs[:, -1]


def dense_density_oracle(mask: Mask, R: float, mode: str = "center_in"):
    """Maximum disc count by brute force: every center, every cell.

    Shares only the disc stencil with the fast path (the stencil is problem
    data; re-rounding the boundary predicate independently could flip rim
    cells).  Centers run over the grid padded by the stencil radius; ties
    resolve to the lexicographically smallest (time, frequency) index.

    Returns (count, rho, (x_center, w_center)).
    """
    grid = mask.grid
    if grid.nx > ORACLE_MAX_GRID or grid.nw > ORACLE_MAX_GRID:
        raise OracleSizeError(
            f"grid {grid.shape} exceeds oracle limit {ORACLE_MAX_GRID}")
    stencil = disc_raster(R, grid, mode=mode)
    rx = stencil.shape[0] // 2
    rw = stencil.shape[1] // 2
    # Pad by the full stencil diameter so every overhanging center (grid
    # padded by the radius on each side) sees a complete window.
    padded = np.zeros((grid.nx + 4 * rx, grid.nw + 4 * rw), dtype=bool)
    padded[2 * rx:2 * rx + grid.nx, 2 * rw:2 * rw + grid.nw] = mask.cells

    best = -1
    best_ij = (0, 0)
    for ic in range(grid.nx + 2 * rx):
        for jc in range(grid.nw + 2 * rw):
            window = padded[ic:ic + 2 * rx + 1, jc:jc + 2 * rw + 1]
            count = int(np.count_nonzero(window & stencil))
            if count > best:
                best = count
                best_ij = (ic, jc)
    x_c = grid.x0 + (best_ij[0] - rx) * grid.dx
    w_c = grid.w0 + (best_ij[1] - rw) * grid.dw
    return best, best * grid.dA, (x_c, w_c)


def lp_facet_slack() -> float:
    """Relative modulus underestimation of the polyhedral norm: sec(pi/n)-1."""
    return 1.0 / math.cos(math.pi / LP_FACETS) - 1.0


def lp_l1_oracle(geometry, grid: TFGrid, data, weights=None):
    """Weighted L1 STFT fit solved as an LP with a 64-facet modulus.

    min over g of sum_ij w_ij * |data_ij - (Kg)_ij| * dA, with |.| replaced by
    the inscribed regular-64-gon norm max_k Re(e^{-i theta_k} c) (underestimates
    the modulus by at most sec(pi/64)-1 ~ 0.12%).  Solved by scipy's HiGHS
    simplex.  Refuses instances with more than 200 primal signal variables;
    an unbounded or infeasible report is a defect and raises.

    Returns (optimum, minimizer_samples).
    """
    geom = SignalGeometry.of(geometry)
    if 2 * geom.n > LP_MAX_PRIMAL:
        raise OracleSizeError(
            f"{2 * geom.n} primal variables exceed the LP oracle limit {LP_MAX_PRIMAL}")
    data = np.asarray(data, dtype=np.complex128).reshape(grid.nx * grid.nw)
    if weights is None:
        keep = np.ones(data.size, dtype=bool)
    else:
        keep = np.asarray(weights, dtype=bool).reshape(data.size)
    if not keep.any():
        raise ValueError("empty weight support: nothing to fit")

    amat = dense_operator(geom, grid)[keep]                 # (m, n) complex
    gvec = data[keep]
    m, n = amat.shape

    # Variables: [g_re (n), g_im (n), s (m)].
    thetas = 2.0 * np.pi * np.arange(LP_FACETS) / LP_FACETS
    blocks = []
    rhs = []
    eye = -np.eye(m)
    for th in thetas:
        c = np.exp(-1j * th)
        ca = c * amat
        cg = c * gvec
        blocks.append(np.hstack([-ca.real, ca.imag, eye]))
        rhs.append(-cg.real)
    a_ub = np.vstack(blocks)
    b_ub = np.concatenate(rhs)
    cost = np.concatenate([np.zeros(2 * n), np.full(m, grid.dA)])
    bounds = [(None, None)] * (2 * n) + [(0.0, None)] * m

    res = scipy.optimize.linprog(
        cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(
            f"LP oracle reported status {res.status} ({res.message}); "
            "unbounded/infeasible is a defect signal for this problem class")
    g = res.x[:n] + 1j * res.x[n:2 * n]
    return float(res.fun), g


def nu_check(R: float, fock_list):
    """Measured norm ratio of the local reproducing identity on a test set.

    For each weighted Fock representation, convolves with the disc indicator
    and compares tf_norm(F*G_R, 1)/tf_norm(F, 1) against 1 - exp(-pi/R^2).
    Validates the constant used by the sieve bound; the convolution route is
    the tf-core implementation (its own checks live with tf-core).

    Returns (ratios, expected, max_abs_deviation).
    """
    from .tfcore.fock import fock_convolve
    from .tfcore.types import tf_norm

    expected = 1.0 - math.exp(-math.pi / (R * R))
    ratios = []
    for f in fock_list:
        denom = tf_norm(f, 1)
        if denom == 0.0:
            raise ValueError("nu_check requires nonzero test functions")
        conv = fock_convolve(f, R)
        ratios.append(tf_norm(conv, 1) / denom)
    dev = max(abs(r - expected) for r in ratios)
    return ratios, expected, dev
