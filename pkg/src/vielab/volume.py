"""The acoustic volume integral operator on the uniform grid.

Mathematical formulation
------------------------
The scattering problem is recast as a volume integral equation (the
Lippmann-Schwinger equation)

    u - A u = u_inc   on the scatterer,

    A u(x) = div int G_k(x-y) alpha(y) grad u(y) dy
           + int G_k(x-y) beta(y) u(y) dy,

with contrasts alpha = a - 1, beta = k(.)^2 - k^2. The divergence is
moved onto the kernel via div_x int G w = int grad_x G . w, so one
weakly singular scalar kernel (G) and d gradient-kernel components are
all that is ever sampled.

Discretization
--------------
Midpoint (one point per cell) quadrature on the included cells, with a
singular self-cell correction: the self contribution of the G-kernel is
the exact integral of G over the area/volume-equivalent disc/ball, and
the gradient-kernel self term is zero (its principal value over the
equivalent disc vanishes by symmetry). grad u uses centered second-order
differences inside the mask and one-sided first-order differences at
mask-boundary cells.

Application routes: direct summation via cached pairwise kernel
matrices (O(N^2)), or zero-padded FFT circular convolution with sampled
kernel tables (d+1 scalar convolutions, O(N log N)); both share the
identical quadrature weights, so they agree to rounding.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.fft as sfft
import scipy.sparse as sparse

from .coefficients import CoefficientField
from .geometry import VolumeGrid
from .special import WaveParameters, greens_gradient, greens_value

logger = logging.getLogger(__name__)

#: Above this many unknowns the "auto" method switches to the FFT route.
AUTO_FFT_THRESHOLD = 4096

#: Default cap on dense assembly (keeps full eigensolves at desk scale).
DENSE_CAP = 6000


# ---------------------------------------------------------------------------
# Dense operator container
# ---------------------------------------------------------------------------
@dataclass(eq=False)
class DenseOperator:
    """Square complex matrix with coordinate maps for its unknowns.

    Attributes
    ----------
    matrix : np.ndarray, complex, shape (n, n)
    row_points, col_points : np.ndarray, shape (n, d)
        Coordinates of the unknowns the rows/columns refer to.
    """

    matrix: np.ndarray
    row_points: np.ndarray
    col_points: np.ndarray

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        if len(self.row_points) != m.shape[0] or len(self.col_points) != m.shape[1]:
            raise ValueError("index maps do not match the matrix dimensions")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _check_field(grid: VolumeGrid, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u)
    if u.shape != (grid.n,):
        raise ValueError(f"field must have length {grid.n}, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("field contains non-finite values")
    return u.astype(np.complex128, copy=False)


# ---------------------------------------------------------------------------
# Singular self-cell correction
# ---------------------------------------------------------------------------
def self_cell_weight(params: WaveParameters, h: float) -> complex:
    """Exact integral of G_k over the disc/ball of the same area/volume.

    Replaces the (singular) midpoint contribution of the cell containing
    the target; the gradient-kernel self term is zero by symmetry.
    """
    k = params.k
    if params.dimension == 2:
        radius = h / np.sqrt(np.pi)
        if k == 0:
            return complex(radius * radius * (1.0 - 2.0 * np.log(radius)) / 4.0)
        from scipy.special import hankel1 as _h1
        return complex(0.5j * np.pi * radius / k * _h1(1, k * radius) - 1.0 / k ** 2)
    radius = h * (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)
    if k == 0:
        return complex(radius * radius / 2.0)
    return complex(np.exp(1j * k * radius) * (1.0 / k ** 2 - 1j * radius / k) - 1.0 / k ** 2)


# ---------------------------------------------------------------------------
# Cached discrete building blocks
# ---------------------------------------------------------------------------
@functools.lru_cache(maxsize=8)
def gradient_ops(grid: VolumeGrid) -> Tuple[sparse.csr_matrix, ...]:
    """Per-axis finite-difference matrices on the included cells.

    Centered second-order stencils where both axis neighbors are
    included, one-sided first-order at mask-boundary cells, zero where
    the cell has no neighbor along the axis.
    """
    d = grid.dimension
    h = grid.h
    n = grid.n
    ops = []
    for c in range(d):
        ip = _neighbor_index(grid, c, +1)
        im = _neighbor_index(grid, c, -1)
        rows, cols, vals = [], [], []
        idx = np.arange(n)
        both = (ip >= 0) & (im >= 0)
        rows += [idx[both], idx[both]]
        cols += [ip[both], im[both]]
        vals += [np.full(both.sum(), 0.5 / h), np.full(both.sum(), -0.5 / h)]
        onlyp = (ip >= 0) & (im < 0)
        rows += [idx[onlyp], idx[onlyp]]
        cols += [ip[onlyp], idx[onlyp]]
        vals += [np.full(onlyp.sum(), 1.0 / h), np.full(onlyp.sum(), -1.0 / h)]
        onlym = (ip < 0) & (im >= 0)
        rows += [idx[onlym], idx[onlym]]
        cols += [idx[onlym], im[onlym]]
        vals += [np.full(onlym.sum(), 1.0 / h), np.full(onlym.sum(), -1.0 / h)]
        op = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
        ops.append(op)
    return tuple(ops)


def _neighbor_index(grid: VolumeGrid, axis: int, step: int) -> np.ndarray:
    """Unknown index of each cell's neighbor along an axis, or -1."""
    nb = grid.coords.copy()
    nb[:, axis] += step
    valid = (nb[:, axis] >= 0) & (nb[:, axis] < grid.shape[axis])
    nb[:, axis] = np.clip(nb[:, axis], 0, grid.shape[axis] - 1)
    idx = grid.flat_index[tuple(nb.T)]
    return np.where(valid, idx, -1)


@functools.lru_cache(maxsize=2)
def kernel_matrices(grid: VolumeGrid, params: WaveParameters):
    """Pairwise quadrature matrices (G-kernel, then d gradient kernels).

    Entries carry the cell volume; diagonals hold the self-cell
    correction (G) and zero (gradient components).
    """
    n, d = grid.n, grid.dimension
    w = grid.cell_volume
    ws = self_cell_weight(params, grid.h)
    centers = grid.centers
    gm = np.empty((n, n), dtype=np.complex128)
    grads = [np.empty((n, n), dtype=np.complex128) for _ in range(d)]
    chunk = max(1, int(2**24 // max(n, 1)))
    for i0 in range(0, n, chunk):
        i1 = min(n, i0 + chunk)
        diff = centers[i0:i1, None, :] - centers[None, :, :]  # (B, n, d)
        r = np.linalg.norm(diff, axis=-1)
        self_mask = r < 1e-9 * grid.h
        r_safe = np.where(self_mask, grid.h, r)
        block = w * greens_value(params, r_safe)
        block[self_mask] = ws
        gm[i0:i1] = block
        diff_safe = np.where(self_mask[..., None], grid.h, diff)
        gvec = w * greens_gradient(params, diff_safe.reshape(-1, d)).reshape(i1 - i0, n, d)
        gvec[self_mask] = 0.0
        for c in range(d):
            grads[c][i0:i1] = gvec[..., c]
    return gm, tuple(grads)


@functools.lru_cache(maxsize=8)
def fft_kernel_tables(grid: VolumeGrid, params: WaveParameters):
    """FFTs of the sampled kernel tables on the zero-padded offset grid."""
    d = grid.dimension
    pshape = tuple(sfft.next_fast_len(2 * nc) for nc in grid.shape)
    offs = []
    for c in range(d):
        idx = np.arange(pshape[c])
        offs.append(np.where(idx < grid.shape[c], idx, idx - pshape[c]) * grid.h)
    mesh = np.meshgrid(*offs, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)  # (P, d)
    r = np.linalg.norm(pts, axis=1)
    origin = r == 0.0
    r_safe = np.where(origin, grid.h, r)
    w = grid.cell_volume
    g_tab = (w * greens_value(params, r_safe))
    g_tab[origin] = self_cell_weight(params, grid.h)
    pts_safe = np.where(origin[:, None], grid.h, pts)
    gvec = w * greens_gradient(params, pts_safe)
    gvec[origin] = 0.0
    g_hat = sfft.fftn(g_tab.reshape(pshape))
    grad_hats = tuple(sfft.fftn(gvec[:, c].reshape(pshape)) for c in range(d))
    return pshape, g_hat, grad_hats


# ---------------------------------------------------------------------------
# Kernel application (shared by the Newton potential and the operator)
# ---------------------------------------------------------------------------
def _apply_kernels_direct(grid, params, scalar_src=None, grad_src=None):
    gm, grads = kernel_matrices(grid, params)
    out = np.zeros(grid.n, dtype=np.complex128)
    if scalar_src is not None:
        out += gm @ scalar_src
    if grad_src is not None:
        for c in range(grid.dimension):
            out += grads[c] @ grad_src[c]
    return out


def _apply_kernels_fft(grid, params, scalar_src=None, grad_src=None):
    pshape, g_hat, grad_hats = fft_kernel_tables(grid, params)
    acc = np.zeros(pshape, dtype=np.complex128)
    if scalar_src is not None:
        acc += g_hat * sfft.fftn(grid.embed(scalar_src), s=pshape)
    if grad_src is not None:
        for c in range(grid.dimension):
            acc += grad_hats[c] * sfft.fftn(grid.embed(grad_src[c]), s=pshape)
    full = sfft.ifftn(acc)[tuple(slice(0, nc) for nc in grid.shape)]
    return grid.extract(full)


def _apply_kernels(grid, params, scalar_src, grad_src, method):
    if method == "auto":
        method = "fft" if grid.n > AUTO_FFT_THRESHOLD else "direct"
    if method == "direct":
        return _apply_kernels_direct(grid, params, scalar_src, grad_src)
    if method == "fft":
        return _apply_kernels_fft(grid, params, scalar_src, grad_src)
    raise ValueError(f"unknown method {method!r}")


def grad_field(grid: VolumeGrid, u: np.ndarray) -> List[np.ndarray]:
    """Finite-difference gradient components of a grid field."""
    u = _check_field(grid, u)
    return [op @ u for op in gradient_ops(grid)]


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------
def newton_potential(grid: VolumeGrid, params: WaveParameters, v: np.ndarray,
                     targets: Optional[np.ndarray] = None,
                     method: str = "auto") -> np.ndarray:
    """Volume potential (G_k * v) of a grid density.

    With ``targets=None`` the potential is returned at the grid's own
    cell centers (self-cells corrected); explicit targets are evaluated
    by direct summation, applying the self-cell correction whenever a
    target coincides with a cell center.
    """
    v = _check_field(grid, v)
    if targets is None:
        return _apply_kernels(grid, params, v, None, method)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    out = np.empty(len(targets), dtype=np.complex128)
    w = grid.cell_volume
    ws = self_cell_weight(params, grid.h)
    chunk = max(1, int(2**23 // max(grid.n, 1)))
    for t0 in range(0, len(targets), chunk):
        t1 = min(len(targets), t0 + chunk)
        diff = targets[t0:t1, None, :] - grid.centers[None, :, :]
        r = np.linalg.norm(diff, axis=-1)
        self_mask = r < 1e-9 * grid.h
        block = w * greens_value(params, np.where(self_mask, grid.h, r))
        block[self_mask] = ws
        out[t0:t1] = block @ v
    return out


def apply_A(grid: VolumeGrid, params: WaveParameters, coeffs: CoefficientField,
            u: np.ndarray) -> np.ndarray:
    """Direct-summation application of the volume operator A."""
    u = _check_field(grid, u)
    alpha = coeffs.alpha(grid.centers)
    beta = coeffs.beta(grid.centers)
    grad_src = None
    if np.any(alpha != 0):
        grad_src = [alpha * g for g in grad_field(grid, u)]
    scalar_src = beta * u if np.any(beta != 0) else None
    if scalar_src is None and grad_src is None:
        return np.zeros(grid.n, dtype=np.complex128)
    return _apply_kernels(grid, params, scalar_src, grad_src, "direct")


def apply_A_fft(grid: VolumeGrid, params: WaveParameters, coeffs: CoefficientField,
                u: np.ndarray) -> np.ndarray:
    """FFT-accelerated application of A; identical quadrature to apply_A."""
    u = _check_field(grid, u)
    alpha = coeffs.alpha(grid.centers)
    beta = coeffs.beta(grid.centers)
    grad_src = None
    if np.any(alpha != 0):
        grad_src = [alpha * g for g in grad_field(grid, u)]
    scalar_src = beta * u if np.any(beta != 0) else None
    if scalar_src is None and grad_src is None:
        return np.zeros(grid.n, dtype=np.complex128)
    return _apply_kernels(grid, params, scalar_src, grad_src, "fft")


def apply_A_smooth_form(grid: VolumeGrid, params: WaveParameters,
                        coeffs: CoefficientField, u: np.ndarray,
                        method: str = "auto") -> np.ndarray:
    """Apply A in the integrated-by-parts form valid when alpha = 0 on Gamma.

    For coefficients smooth across the boundary,

        A u = -alpha u + int G_k (beta - k^2 alpha) u
                        - div int G_k (grad alpha) u,

    which involves only weakly singular kernels acting on scalar
    densities (no derivative of the unknown). Rejects coefficient tags
    with a boundary jump, whose split form carries a double layer term
    this route omits by construction.
    """
    if coeffs.tag not in ("globally-smooth", "laplace-case"):
        raise ValueError(
            f"smooth-form operator requires alpha = 0 on Gamma; got tag {coeffs.tag!r}")
    u = _check_field(grid, u)
    alpha = coeffs.alpha(grid.centers)
    beta = coeffs.beta(grid.centers)
    galpha = coeffs.grad_alpha(grid.centers)
    k2 = params.k ** 2
    scalar_src = (beta - k2 * alpha) * u
    grad_src = [-(galpha[:, c]) * u for c in range(grid.dimension)]
    return -alpha * u + _apply_kernels(grid, params, scalar_src, grad_src, method)


def assemble_A_dense(grid: VolumeGrid, params: WaveParameters,
                     coeffs: CoefficientField, cap: int = DENSE_CAP) -> DenseOperator:
    """Assemble the dense matrix of I - A with the apply_A quadrature.

    Column j is (I - A) e_j by construction, so matrix-vector products
    reproduce ``u - apply_A(u)`` to rounding.
    """
    if grid.n > cap:
        raise ValueError(f"dense assembly capped at {cap} unknowns (N = {grid.n})")
    gm, grads = kernel_matrices(grid, params)
    alpha = coeffs.alpha(grid.centers)
    beta = coeffs.beta(grid.centers)
    a_mat = gm * beta[None, :]
    for c, dop in enumerate(gradient_ops(grid)):
        scaled = dop.multiply(alpha[:, None]).tocsc()  # diag(alpha) @ D_c
        a_mat += (scaled.T @ grads[c].T).T
    matrix = np.eye(grid.n, dtype=np.complex128) - a_mat
    return DenseOperator(matrix, grid.centers, grid.centers)


def identity_minus_A(grid: VolumeGrid, params: WaveParameters,
                     coeffs: CoefficientField, method: str = "fft") -> Callable:
    """Matrix-free applier u -> u - A u (the volume-integral system map)."""
    apply_op = apply_A_fft if method == "fft" else apply_A
    return lambda u: u - apply_op(grid, params, coeffs, u)


def operator_norm_estimate(applier: Callable, size: int, trials: int = 3,
                           iters: int = 20, rng: Optional[np.random.Generator] = None) -> float:
    """Power-iteration estimate of the l2 operator norm of a linear map.

    Runs ``iters`` normalized power steps from a random complex start and
    returns the largest final amplification over ``trials`` restarts
    (exact for normal operators, a sound lower estimate otherwise).
    """
    rng = rng or np.random.default_rng(0)
    best = 0.0
    for _ in range(trials):
        v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        v /= np.linalg.norm(v)
        amp = 0.0
        for _ in range(iters):
            w = applier(v)
            amp = float(np.linalg.norm(w))
            if amp == 0.0:
                break
            v = w / amp
        best = max(best, amp)
    return best


def discrete_laplacian(grid: VolumeGrid, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Five/seven-point discrete Laplacian and its full-stencil mask.

    Returns ``(lap, interior)`` where ``lap`` holds the stencil value at
    cells whose 2d axis neighbors are all included (zero elsewhere) and
    ``interior`` flags those cells.
    """
    u = _check_field(grid, u)
    h2 = grid.h * grid.h
    lap = np.zeros(grid.n, dtype=np.complex128)
    interior = np.ones(grid.n, dtype=bool)
    for c in range(grid.dimension):
        ip = _neighbor_index(grid, c, +1)
        im = _neighbor_index(grid, c, -1)
        ok = (ip >= 0) & (im >= 0)
        interior &= ok
        lap[ok] += (u[ip[ok]] - 2.0 * u[ok] + u[im[ok]]) / h2
    lap[~interior] = 0.0
    return lap, interior
