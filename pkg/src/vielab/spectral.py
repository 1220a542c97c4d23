"""Dense spectra, eigenvalue clustering, and Fredholm verdicts.

The continuum essential spectrum has no finite-dimensional counterpart;
its discrete signature is accumulation under refinement: eigenvalue
counts near an essential point grow with the resolution while counts
elsewhere stay bounded. Cluster detection implements exactly this
two-level test.

For piecewise-constant coefficients the boundary block of the coupled
operator is a multiple of sigma I - (I/2 - K), which ties coefficient
values to the essential spectrum Sigma of I/2 - K through the involution

    sigma = a / (a - 1)   <=>   a = sigma / (sigma - 1).

Fredholm verdicts check (i) that the coefficient never vanishes on the
closed domain and (ii) that no boundary coefficient value maps into
Sigma; for coefficients constant on the boundary the two conditions are
necessary and sufficient, otherwise sufficient only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from .coefficients import CoefficientField, constant_a
from .geometry import DomainGeometry, build_boundary_mesh, build_volume_grid
from .special import WaveParameters
from .volume import DenseOperator

logger = logging.getLogger(__name__)

EIG_DIMENSION_CAP = 7000
RESIDUAL_TOL = 1e-8


# ---------------------------------------------------------------------------
# Report containers
# ---------------------------------------------------------------------------
@dataclass
class ClusterReport:
    """Result of a two-level accumulation test.

    ``centers`` are detected accumulation points; ``clustered_fine``
    lists the fine-level eigenvalues lying within ``delta`` of a center.
    ``outside_*`` count eigenvalues further than ``delta`` from every
    center at each level (bounded outside counts are the essential-
    spectrum signature).
    """

    delta: float
    centers: np.ndarray
    counts_coarse: np.ndarray
    counts_fine: np.ndarray
    outside_coarse: int
    outside_fine: int
    clustered_fine: np.ndarray

    @property
    def diameter(self) -> float:
        """Spread of the detected accumulation set (fine level)."""
        if len(self.clustered_fine) < 2:
            return 0.0
        z = self.clustered_fine
        return float(np.max(np.abs(z[:, None] - z[None, :])))

    def contains(self, value: complex, tol: Optional[float] = None) -> bool:
        """Whether some clustered eigenvalue lies within tol (default delta)."""
        if len(self.clustered_fine) == 0:
            return False
        tol = self.delta if tol is None else tol
        return bool(np.min(np.abs(self.clustered_fine - value)) <= tol)


@dataclass
class FredholmVerdict:
    """Outcome of the two Fredholm conditions on a coefficient field.

    ``strength`` is "iff" when the coefficient is constant on the
    boundary (the conditions are then necessary and sufficient) and
    "sufficient-only" otherwise. ``inconclusive`` flags boundary values
    close to (but not within tolerance of) the breakdown set when Sigma
    is a numerically estimated interval.
    """

    condition_i: bool
    condition_ii: bool
    strength: str
    inconclusive: bool
    details: dict = field(default_factory=dict)

    @property
    def fredholm(self) -> bool:
        return self.condition_i and self.condition_ii


@dataclass
class SpectrumReport:
    """Eigenvalues with certified residuals plus optional diagnostics."""

    label: str
    eigenvalues: np.ndarray
    residuals: np.ndarray
    size: int
    clusters: Optional[ClusterReport] = None
    predicted_clusters: Optional[np.ndarray] = None
    verdict: Optional[FredholmVerdict] = None
    notes: List[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Dense eigensolve with residual certification
# ---------------------------------------------------------------------------
def eigenvalues_dense(op, residual_tol: float = RESIDUAL_TOL,
                      refine_steps: int = 3) -> Tuple[np.ndarray, np.ndarray]:
    """All eigenvalues of a complex matrix, each with a certified residual.

    Residuals are ||M v - lambda v|| / ||v|| from the computed right
    eigenvectors; eigenpairs above ``residual_tol`` get up to
    ``refine_steps`` inverse-iteration refinements. Eigenvalues are
    returned sorted by (real, imaginary) part; residuals that still
    exceed the tolerance are reported as-is rather than aborting.
    """
    matrix = op.matrix if isinstance(op, DenseOperator) else np.asarray(op, dtype=np.complex128)
    n = matrix.shape[0]
    if matrix.shape != (n, n):
        raise ValueError("eigenvalue computation needs a square matrix")
    if n > EIG_DIMENSION_CAP:
        raise ValueError(f"dense eigensolve capped at {EIG_DIMENSION_CAP} unknowns")
    vals, vecs = sla.eig(matrix)
    res = np.linalg.norm(matrix @ vecs - vecs * vals[None, :], axis=0)
    res /= np.linalg.norm(vecs, axis=0)
    bad = np.flatnonzero(res > residual_tol)
    for idx in bad:
        lam, vec, r = _inverse_iteration(matrix, vals[idx], vecs[:, idx], refine_steps)
        if r < res[idx]:
            vals[idx], res[idx] = lam, r
    order = np.lexsort((vals.imag, vals.real))
    if np.any(res[order] > residual_tol):
        worst = float(res.max())
        logger.warning("eigensolve: %d residuals above %.1e (worst %.2e)",
                       int(np.sum(res > residual_tol)), residual_tol, worst)
    return vals[order], res[order]


def _inverse_iteration(matrix, lam, vec, steps):
    n = matrix.shape[0]
    jitter = 1e-12 * np.linalg.norm(matrix, np.inf)
    best = (lam, vec, np.inf)
    v = vec / np.linalg.norm(vec)
    for _ in range(steps):
        try:
            lu = sla.lu_factor(matrix - (lam + jitter) * np.eye(n))
            v = sla.lu_solve(lu, v)
        except sla.LinAlgError:
            break
        v /= np.linalg.norm(v)
        lam = complex(np.vdot(v, matrix @ v))
        r = float(np.linalg.norm(matrix @ v - lam * v))
        if r < best[2]:
            best = (lam, v, r)
    return best


# ---------------------------------------------------------------------------
# Coefficient <-> essential-spectrum parameter maps
# ---------------------------------------------------------------------------
def sigma_to_a(sigma):
    """Boundary coefficient value a whose symbol parameter is sigma.

    The map t -> t / (t - 1) is an involution, so it inverts a_to_sigma;
    exact inputs (fractions) are mapped exactly. sigma = 1/2 gives the
    smooth-boundary breakdown value a = -1.
    """
    if sigma == 1:
        raise ValueError("sigma = 1 is the pole of the coefficient map")
    return sigma / (sigma - 1)


def a_to_sigma(a):
    """Symbol parameter sigma = a / (a - 1) of a boundary coefficient value."""
    if a == 1:
        raise ValueError("a = 1 is the pole of the symbol map (no contrast)")
    return a / (a - 1)


def predict_clusters(a_interior: Iterable[complex], a_boundary: complex,
                     sigma_set: Iterable[complex], tol: float = 1e-6) -> np.ndarray:
    """Predicted accumulation points of the assembled volume system I - A.

    Interior coefficient values accumulate as-is; each sigma in the
    essential set of I/2 - K contributes the boundary-symbol value
    (1 + a)/2 + (a - 1)(1/2 - sigma). For smooth boundaries the set
    {1/2} collapses the boundary prediction to (1 + a)/2.
    """
    points: List[complex] = []
    for val in a_interior:
        points.append(complex(val))
    ab = complex(a_boundary)
    for sigma in sigma_set:
        points.append(0.5 * (1.0 + ab) + (ab - 1.0) * (0.5 - complex(sigma)))
    reps: List[complex] = []
    for z in points:
        if not any(abs(z - r) <= tol for r in reps):
            reps.append(z)
    reps.sort(key=lambda z: (z.real, z.imag))
    return np.array(reps, dtype=complex)


# ---------------------------------------------------------------------------
# Cluster detection (two-level accumulation test)
# ---------------------------------------------------------------------------
def detect_clusters(eigs_coarse: np.ndarray, eigs_fine: np.ndarray, delta: float,
                    growth_threshold: float = 1.3, min_count: int = 4) -> ClusterReport:
    """Greedy density clustering of eigenvalues across two resolutions.

    Candidate centers are taken at the densest fine-level eigenvalues;
    a candidate becomes a cluster when the count within ``delta`` grows
    by at least ``growth_threshold`` from the coarse to the fine level.
    Dense but non-growing spots (stable outliers, e.g. isolated
    eigenvalues of fixed multiplicity) are rejected and counted outside.
    """
    eigs_coarse = np.asarray(eigs_coarse, dtype=complex)
    eigs_fine = np.asarray(eigs_fine, dtype=complex)
    remaining = eigs_fine.copy()
    centers: List[complex] = []
    counts_c: List[int] = []
    counts_f: List[int] = []
    while len(remaining) >= min_count:
        dist = np.abs(remaining[:, None] - remaining[None, :])
        counts = (dist <= delta).sum(axis=1)
        best = int(np.argmax(counts))
        if counts[best] < min_count:
            break
        local = remaining[dist[best] <= delta]
        center = complex(np.mean(local))
        c_fine = int(np.sum(np.abs(eigs_fine - center) <= delta))
        c_coarse = int(np.sum(np.abs(eigs_coarse - center) <= delta))
        grows = (c_fine >= growth_threshold * c_coarse) if c_coarse > 0 \
            else (c_fine >= 3 * min_count)
        if grows and c_fine >= min_count:
            centers.append(center)
            counts_c.append(c_coarse)
            counts_f.append(c_fine)
        keep = np.abs(remaining - center) > delta
        if keep.all():
            break
        remaining = remaining[keep]
    centers_arr = np.array(centers, dtype=complex)
    if len(centers_arr):
        d_fine = np.min(np.abs(eigs_fine[:, None] - centers_arr[None, :]), axis=1)
        d_coarse = np.min(np.abs(eigs_coarse[:, None] - centers_arr[None, :]), axis=1)
        clustered = eigs_fine[d_fine <= delta]
        outside_f = int(np.sum(d_fine > delta))
        outside_c = int(np.sum(d_coarse > delta))
    else:
        clustered = np.array([], dtype=complex)
        outside_f, outside_c = len(eigs_fine), len(eigs_coarse)
    return ClusterReport(delta, centers_arr, np.array(counts_c), np.array(counts_f),
                         outside_c, outside_f, clustered)


# ---------------------------------------------------------------------------
# Fredholm verdicts
# ---------------------------------------------------------------------------
def fredholm_verdict(coeffs: CoefficientField, domain: DomainGeometry,
                     sigma_estimate: Sequence[complex],
                     interior_samples: int = 2000,
                     boundary_samples: int = 256,
                     zero_tol: float = 1e-9,
                     breakdown_tol: float = 1e-6,
                     inconclusive_band: float = 0.02,
                     rng: Optional[np.random.Generator] = None) -> FredholmVerdict:
    """Evaluate the two Fredholm conditions on sampled coefficient values.

    (i) min |a| over a dense sample of the closed domain exceeds
    ``zero_tol``; (ii) every boundary value stays farther than
    ``breakdown_tol`` from every breakdown coefficient sigma/(sigma-1),
    sigma in the supplied essential-set estimate. Verdicts whose
    boundary values approach the breakdown set within
    ``inconclusive_band`` (without violating it) are flagged
    inconclusive when Sigma itself is a numeric estimate.
    """
    rng = rng or np.random.default_rng(0)
    box = domain.bounding_box
    pts = rng.uniform(box[:, 0], box[:, 1], size=(8 * interior_samples, domain.dimension))
    pts = pts[domain.contains(pts)][:interior_samples]
    mesh = build_boundary_mesh(domain, boundary_samples)
    a_in = coeffs.a(pts)
    a_bd = coeffs.a(mesh.nodes)
    min_abs_a = float(min(np.min(np.abs(a_in)), np.min(np.abs(a_bd))))
    cond_i = min_abs_a > zero_tol

    sigma_arr = np.array([complex(s) for s in sigma_estimate])
    breakdown = sigma_arr / (sigma_arr - 1.0)
    dist = np.min(np.abs(a_bd[:, None] - breakdown[None, :]), axis=1)
    min_dist = float(np.min(dist))
    cond_ii = min_dist > breakdown_tol

    const_dev = float(np.max(np.abs(a_bd - a_bd.mean())))
    strength = "iff" if const_dev <= 1e-10 else "sufficient-only"
    numeric_sigma = len(sigma_arr) > 1
    inconclusive = bool(numeric_sigma and cond_ii and min_dist <= inconclusive_band)
    details = {
        "min_abs_a": min_abs_a,
        "min_breakdown_distance": min_dist,
        "boundary_constancy_deviation": const_dev,
        "n_interior_samples": int(len(pts)),
        "n_boundary_samples": int(mesh.m),
    }
    return FredholmVerdict(cond_i, cond_ii, strength, inconclusive, details)


# ---------------------------------------------------------------------------
# Condition sweeps toward the breakdown locus
# ---------------------------------------------------------------------------
def condition_estimate(matrix: np.ndarray, iters: int = 20, restarts: int = 3,
                       rng: Optional[np.random.Generator] = None) -> float:
    """Power-iteration estimate of the l2 condition number of a matrix.

    Norm and inverse-norm are estimated by power iteration on M*M and on
    solves with the LU factorization; returns inf for singular systems.
    """
    rng = rng or np.random.default_rng(0)
    n = matrix.shape[0]
    try:
        lu = sla.lu_factor(matrix)
    except sla.LinAlgError:
        return float("inf")
    if not np.all(np.isfinite(lu[0])):
        return float("inf")

    def power(apply_pair):
        best = 0.0
        for _ in range(restarts):
            v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            v /= np.linalg.norm(v)
            s = 0.0
            for _ in range(iters):
                try:
                    w = apply_pair(v)
                except (ValueError, sla.LinAlgError):
                    return float("inf")
                s = float(np.linalg.norm(w))
                if not np.isfinite(s):
                    return float("inf")
                if s == 0.0:
                    break
                v = w / s
            best = max(best, np.sqrt(s))
        return best

    norm = power(lambda v: matrix.conj().T @ (matrix @ v))
    inv_norm = power(lambda v: sla.lu_solve(lu, sla.lu_solve(lu, v), trans=2))
    if not (np.isfinite(norm) and np.isfinite(inv_norm)):
        return float("inf")
    return float(norm * inv_norm)


def spectral_operator_matrix(domain: DomainGeometry, params: WaveParameters,
                             coeffs: CoefficientField, n_per_axis: int,
                             boundary_nodes: Optional[int] = None) -> np.ndarray:
    """The spectral instrument: quadrature-weighted boundary-domain matrix
    with the Nystrom boundary operator.

    This is the clean discrete representation of the volume system for
    eigenvalue-accumulation and conditioning experiments: the Nystrom K
    keeps the boundary essential cluster sharp, while the stencil-based
    volume assembly pollutes the band between 1 and the coefficient
    value (the mask-restricted difference symbol detunes at high grid
    frequencies).
    """
    from .coupled import assemble_coupled, quadrature_weighted_matrix
    grid = build_volume_grid(domain, n_per_axis)
    mesh = build_boundary_mesh(domain, boundary_nodes or 4 * n_per_axis)
    system = assemble_coupled(grid, mesh, params, coeffs, boundary_operator="nystrom")
    return quadrature_weighted_matrix(system)


def condition_sweep(domain: DomainGeometry, params: WaveParameters,
                    a_values: Sequence[complex], n_per_axis: int = 24,
                    boundary_nodes: Optional[int] = None,
                    k2_inside: Optional[complex] = None,
                    rng: Optional[np.random.Generator] = None) -> List[Tuple[complex, float]]:
    """Condition of the discretized volume system for each coefficient value.

    Uses the spectral instrument at one shared discretization so the
    comparison isolates the coefficient's effect; the breakdown
    signature is monotone growth as the boundary value approaches the
    image of the essential set. Singular assemblies report inf.
    """
    out = []
    for a_val in a_values:
        coeffs = constant_a(domain, params.k, a_val, k2_inside)
        matrix = spectral_operator_matrix(domain, params, coeffs, n_per_axis,
                                          boundary_nodes)
        cond = condition_estimate(matrix, rng=rng)
        logger.debug("condition sweep: a=%s cond=%.3e", a_val, cond)
        out.append((complex(a_val), cond))
    return out
