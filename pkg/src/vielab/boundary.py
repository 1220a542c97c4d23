"""Trace, double layer potential, and the boundary operator K on Gamma.

Mathematical formulation (2D)
-----------------------------
With the double layer kernel m(x, y) = d/dn(y) G_k(x - y) we use

    D phi(x) = int_Gamma m(x, y) phi(y) ds(y)      (x in the volume)
    K phi(x) = p.v. int_Gamma m(x, y) phi(y) ds(y) (x on Gamma)

and the interior trace satisfies the jump relation

    gamma(D phi) = -phi/2 + K phi.

On smooth curves the kernel extends continuously to the diagonal with
limit -kappa(x)/(4 pi) (signed curvature, positive for convex
boundaries); the Helmholtz kernel shares the harmonic kernel's diagonal
limit since their difference vanishes at coincident points. On polygon
edges the kernel vanishes identically for same-edge pairs, and the
graded mesh handles the corner singularity; the Nystrom diagonal is
zero there.

The trace operator maps volume fields to boundary nodes by a local
least-squares linear fit over the nearest included cell centers, which
reproduces constants and linear fields exactly.

Boundary operators are implemented for 2D shapes; the 3D double layer
kernel is weakly singular on the sphere and is outside this module's
Nystrom rule.
"""

from __future__ import annotations

import functools
import logging
from typing import Optional

import numpy as np
import scipy.sparse as sparse
from scipy.spatial import cKDTree

from .coefficients import CoefficientField
from .geometry import BoundaryMesh, VolumeGrid, build_boundary_mesh
from .special import WaveParameters, greens_gradient
from .volume import DenseOperator

logger = logging.getLogger(__name__)

TRACE_SEARCH_RADIUS = 3.0   # in units of the grid spacing
TRACE_MAX_NEIGHBORS = 6
NEAR_OVERSAMPLE = 8


def _require_2d(mesh: BoundaryMesh) -> None:
    if mesh.nodes.shape[1] != 2:
        raise ValueError("boundary operators are implemented for 2D meshes only")


def _check_density(mesh: BoundaryMesh, phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi)
    if phi.shape != (mesh.m,):
        raise ValueError(f"density must have length {mesh.m}, got shape {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise ValueError("density contains non-finite values")
    return phi.astype(np.complex128, copy=False)


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------
@functools.lru_cache(maxsize=8)
def trace_matrix(grid: VolumeGrid, mesh: BoundaryMesh) -> sparse.csr_matrix:
    """Sparse (M, N) interpolation matrix realizing the one-sided trace.

    Each boundary node gets a least-squares linear fit over the nearest
    included cell centers within three grid spacings (at most six,
    extended if the fit is rank deficient), evaluated at the node.
    """
    tree = cKDTree(grid.centers)
    radius = TRACE_SEARCH_RADIUS * grid.h
    d = grid.dimension
    rows, cols, vals = [], [], []
    for i, node in enumerate(mesh.nodes):
        cand = tree.query_ball_point(node, radius)
        if len(cand) < 3:
            raise ValueError(
                f"trace: fewer than 3 included cells within {TRACE_SEARCH_RADIUS}h "
                f"of boundary node {i}")
        cand = sorted(cand, key=lambda j: np.linalg.norm(grid.centers[j] - node))
        k = min(TRACE_MAX_NEIGHBORS, len(cand))
        while True:
            pts = grid.centers[cand[:k]]
            design = np.hstack([np.ones((k, 1)), (pts - node) / grid.h])
            if np.linalg.matrix_rank(design) >= d + 1 or k >= len(cand):
                break
            k = min(k + 2, len(cand))
        weights = np.linalg.pinv(design)[0]  # fit value at the node
        rows.extend([i] * k)
        cols.extend(cand[:k])
        vals.extend(weights)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(mesh.m, grid.n))


def trace(grid: VolumeGrid, mesh: BoundaryMesh, u: np.ndarray) -> np.ndarray:
    """Boundary values of a volume field by local linear fits."""
    u = np.asarray(u)
    if u.shape != (grid.n,):
        raise ValueError(f"field must have length {grid.n}")
    return trace_matrix(grid, mesh) @ u.astype(np.complex128, copy=False)


# ---------------------------------------------------------------------------
# Density resampling (for near-boundary quadrature upgrades)
# ---------------------------------------------------------------------------
def refine_mesh(mesh: BoundaryMesh, factor: int = NEAR_OVERSAMPLE) -> BoundaryMesh:
    """Rebuild the mesh with ``factor`` times as many nodes."""
    return build_boundary_mesh(mesh.domain, mesh.m * factor, mesh.grading)


def _trig_resample_matrix(m: int, mf: int) -> np.ndarray:
    """Trigonometric interpolation from m to mf equispaced periodic nodes."""
    spec = np.fft.fft(np.eye(m), axis=0)
    pad = np.zeros((mf, m), dtype=complex)
    half = m // 2
    for j in range(m):
        freq = j if j <= half else j - m
        if m % 2 == 0 and j == half:
            pad[half] += 0.5 * spec[j]
            pad[mf - half] += 0.5 * spec[j]
        else:
            pad[freq % mf] += spec[j]
    fine = np.fft.ifft(pad, axis=0) * (mf / m)
    return fine.real


def density_interp_matrix(mesh: BoundaryMesh, fine: BoundaryMesh) -> np.ndarray:
    """(Mf, M) matrix mapping nodal densities to the refined mesh's nodes.

    Smooth closed curves use trigonometric interpolation in the curve
    parameter (spectrally exact for trigonometric densities); polygons
    use per-edge linear interpolation in arclength.
    """
    if mesh.is_smooth:
        if fine.m % mesh.m != 0:
            raise ValueError("refined smooth mesh must be an integer multiple")
        return _trig_resample_matrix(mesh.m, fine.m)
    out = np.zeros((fine.m, mesh.m))
    verts = mesh.domain.vertices
    for e in range(len(verts)):
        coarse_sel = np.flatnonzero(mesh.edge_index == e)
        fine_sel = np.flatnonzero(fine.edge_index == e)
        origin = verts[e]
        s_coarse = np.linalg.norm(mesh.nodes[coarse_sel] - origin, axis=1)
        s_fine = np.linalg.norm(fine.nodes[fine_sel] - origin, axis=1)
        for basis, j in enumerate(coarse_sel):
            unit = np.zeros(len(coarse_sel))
            unit[basis] = 1.0
            out[fine_sel, j] = np.interp(s_fine, s_coarse, unit)
    return out


# ---------------------------------------------------------------------------
# Double layer potential into the volume
# ---------------------------------------------------------------------------
def _kernel_block(params: WaveParameters, targets: np.ndarray,
                  mesh: BoundaryMesh) -> np.ndarray:
    """Quadrature matrix (P, M): weight-scaled double layer kernel."""
    p = len(targets)
    diff = targets[:, None, :] - mesh.nodes[None, :, :]  # (P, M, 2)
    grad = greens_gradient(params, diff.reshape(-1, 2)).reshape(p, mesh.m, 2)
    kern = -np.sum(grad * mesh.normals[None, :, :], axis=-1)  # (P, M)
    return kern * mesh.weights[None, :]


def double_layer_matrix(mesh: BoundaryMesh, params: WaveParameters,
                        targets: np.ndarray,
                        near_distance: Optional[float] = None,
                        oversample: int = NEAR_OVERSAMPLE) -> np.ndarray:
    """Matrix evaluating D phi at volume targets from nodal densities.

    Targets closer to Gamma than ``near_distance`` get their quadrature
    upgraded by an ``oversample``-times finer mesh with the density
    interpolated onto it.
    """
    _require_2d(mesh)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    mat = _kernel_block(params, targets, mesh)
    if near_distance is not None and near_distance > 0:
        near = mesh.domain.boundary_distance(targets) < near_distance
        if np.any(near):
            fine = refine_mesh(mesh, oversample)
            interp = density_interp_matrix(mesh, fine)
            mat[near] = _kernel_block(params, targets[near], fine) @ interp
    return mat


def double_layer_potential(mesh: BoundaryMesh, params: WaveParameters,
                           phi: np.ndarray, targets: np.ndarray,
                           near_distance: Optional[float] = None) -> np.ndarray:
    """D phi evaluated at interior points (linear in phi)."""
    phi = _check_density(mesh, phi)
    return double_layer_matrix(mesh, params, targets, near_distance) @ phi


# ---------------------------------------------------------------------------
# Boundary operator K
# ---------------------------------------------------------------------------
def assemble_K(mesh: BoundaryMesh, params: WaveParameters) -> DenseOperator:
    """Nystrom matrix of the on-boundary double layer operator K.

    Smooth curves: continuous-kernel quadrature with the curvature
    diagonal -kappa/(4 pi) per node weight. Polygons: graded-mesh
    Nystrom with zero self-node diagonal (same-edge kernel entries
    vanish identically since (x - y) is tangential there).
    """
    _require_2d(mesh)
    m = mesh.m
    diff = mesh.nodes[:, None, :] - mesh.nodes[None, :, :]
    eye = np.eye(m, dtype=bool)
    diff_safe = np.where(eye[..., None], 1.0, diff)
    grad = greens_gradient(params, diff_safe.reshape(-1, 2)).reshape(m, m, 2)
    kern = -np.sum(grad * mesh.normals[None, :, :], axis=-1)
    if mesh.is_smooth:
        kern[eye] = -mesh.curvatures / (4.0 * np.pi)
    else:
        kern[eye] = 0.0
    return DenseOperator(kern * mesh.weights[None, :], mesh.nodes, mesh.nodes)


def jump_relation_check(mesh: BoundaryMesh, params: WaveParameters,
                        phi: np.ndarray, offset_scale: Optional[float] = None,
                        levels: int = 3) -> float:
    """Max-norm discrepancy of the interior trace of D phi vs -phi/2 + K phi.

    D phi is evaluated at interior points receding from each node along
    -n at offsets eps, eps/2, eps/4 (oversampled quadrature) and
    Richardson-extrapolated to the boundary with three levels.
    """
    _require_2d(mesh)
    if not mesh.is_smooth:
        raise ValueError("quantitative jump relation check requires a smooth curve")
    if levels != 3:
        raise ValueError("the extrapolation rule is calibrated for 3 levels")
    phi = _check_density(mesh, phi)
    if offset_scale is None:
        if mesh.domain.kind == "disc":
            offset_scale = 0.1 * mesh.domain.radius
        else:
            offset_scale = 0.1 * float(np.min(mesh.domain.semi_axes))
    fine = refine_mesh(mesh, NEAR_OVERSAMPLE)
    phi_fine = density_interp_matrix(mesh, fine) @ phi
    values = []
    for j in range(levels):
        eps = offset_scale * 0.5 ** j
        targets = mesh.nodes - eps * mesh.normals
        values.append(_kernel_block(params, targets, fine) @ phi_fine)
    f0, f1, f2 = values
    gamma_d = (8.0 * f2 - 6.0 * f1 + f0) / 3.0
    rhs = -0.5 * phi + assemble_K(mesh, params).matrix @ phi
    return float(np.max(np.abs(gamma_d - rhs)))


def commutator_K_alpha(mesh: BoundaryMesh, params: WaveParameters,
                       coeffs: CoefficientField, phi: np.ndarray) -> np.ndarray:
    """Commutator action [K, alpha] phi = K(alpha phi) - alpha K(phi)."""
    phi = _check_density(mesh, phi)
    alpha = coeffs.alpha(mesh.nodes)
    k_mat = assemble_K(mesh, params).matrix
    return k_mat @ (alpha * phi) - alpha * (k_mat @ phi)
