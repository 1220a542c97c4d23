"""Named scenario presets for the command-line harness.

Each preset is a complete scenario configuration (a plain dict, JSON
serializable). The registry covers the standing verification targets:
oracle-checked solves, cluster predictions, breakdown sweeps, corner
spectra, and the identity-check suites.
"""

from __future__ import annotations

import copy
from typing import Dict

_SQUARE = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]

_REGISTRY: Dict[str, dict] = {
    # Scattering solve checked against the transmission series (disc,
    # a=2, interior k^2=2, exterior k=1).
    "disc-a2-solve": {
        "task": "solve",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 1.0, "dimension": 2},
        "coefficients": {"name": "constant-a", "a": 2.0, "k2_inside": 2.0},
        "discretization": {"n_per_axis": 64, "boundary_nodes": 256},
        "solve": {"incident": "plane-wave", "direction": [1.0, 0.0],
                  "tol": 1e-8, "restart": 30, "maxiter": 400,
                  "exterior_radii": [2.0, 4.0, 8.0]},
        "seed": 0,
    },
    # Trivial solve: no contrast, field must equal the incident wave.
    "disc-no-contrast-solve": {
        "task": "solve",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 1.0, "dimension": 2},
        "coefficients": {"name": "constant-a", "a": 1.0},
        "discretization": {"n_per_axis": 24, "boundary_nodes": 96},
        "solve": {"incident": "plane-wave", "direction": [1.0, 0.0],
                  "tol": 1e-8, "restart": 30, "maxiter": 100},
        "seed": 0,
    },
    # Eigenvalue clusters of the volume system, piecewise-constant a=2:
    # predicted accumulation at {2, 1.5}.
    "disc-a2-spectrum": {
        "task": "spectrum",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 1.0, "dimension": 2},
        "coefficients": {"name": "constant-a", "a": 2.0},
        "discretization": {"n_per_axis": 40, "boundary_nodes": 160},
        "spectrum": {"operator": "coupled", "levels": [24, 40], "delta": 0.1},
        "seed": 0,
    },
    # Complex coefficient a=3+i: clusters {3+i, 2+0.5i}.
    "disc-a3i-spectrum": {
        "task": "spectrum",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 1.0, "dimension": 2},
        "coefficients": {"name": "constant-a", "a": [3.0, 1.0]},
        "discretization": {"n_per_axis": 40, "boundary_nodes": 160},
        "spectrum": {"operator": "coupled", "levels": [24, 40], "delta": 0.1},
        "seed": 0,
    },
    # Pure wavenumber contrast (alpha = 0): the operator is compact and
    # its eigenvalues accumulate only at zero.
    "beta-only-spectrum": {
        "task": "spectrum",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 1.0, "dimension": 2},
        "coefficients": {"name": "beta-only", "amplitude": 3.0,
                         "r_plateau": 0.7, "r_cut": 0.95},
        "discretization": {"n_per_axis": 40},
        "spectrum": {"operator": "contrast", "levels": [24, 40], "delta": 0.05},
        "seed": 0,
    },
    # Boundary operator spectra: essential point 1/2 on the circle,
    # corner-widened interval on the square.
    "circle-sigma-spectrum": {
        "task": "spectrum",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 0.0, "dimension": 2},
        "coefficients": {"name": "constant-a", "a": 2.0},
        "discretization": {"n_per_axis": 16, "boundary_nodes": 256},
        "spectrum": {"operator": "half-minus-K", "levels": [128, 256], "delta": 0.05},
        "seed": 0,
    },
    "square-sigma-spectrum": {
        "task": "spectrum",
        "geometry": {"shape": "polygon", "vertices": _SQUARE},
        "wave": {"k": 0.0, "dimension": 2},
        "coefficients": {"name": "polygon-constant-a", "a": 2.0},
        "discretization": {"n_per_axis": 16, "boundary_nodes": 256, "grading": 3.0},
        "spectrum": {"operator": "half-minus-K", "levels": [128, 256], "delta": 0.05},
        "seed": 0,
    },
    # Conditioning growth toward the smooth-boundary breakdown a = -1.
    "breakdown-sweep": {
        "task": "sweep",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 1.0, "dimension": 2},
        "coefficients": {"name": "constant-a", "a": 2.0},
        "discretization": {"n_per_axis": 24, "boundary_nodes": 96},
        "sweep": {"a_values": [-3.0, -1.4, -1.2, -1.1, -1.05]},
        "seed": 0,
    },
    # Identity-check suites.
    "verify-default": {
        "task": "verify",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 1.0, "dimension": 2},
        "coefficients": {"name": "constant-a", "a": 2.0},
        "discretization": {"n_per_axis": 32, "boundary_nodes": 128},
        "seed": 0,
    },
    "verify-smooth-bump": {
        "task": "verify",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 1.0, "dimension": 2},
        "coefficients": {"name": "smooth-bump-a", "amplitude": 2.0},
        "discretization": {"n_per_axis": 32, "boundary_nodes": 128},
        "seed": 0,
    },
    "verify-laplace": {
        "task": "verify",
        "geometry": {"shape": "disc", "radius": 1.0},
        "wave": {"k": 1.0, "dimension": 2},
        "coefficients": {"name": "beta-only", "amplitude": 3.0,
                         "r_plateau": 0.7, "r_cut": 0.95},
        "discretization": {"n_per_axis": 32, "boundary_nodes": 128},
        "seed": 0,
    },
}


def preset_names() -> list:
    """Sorted names of the shipped scenario presets."""
    return sorted(_REGISTRY)


def get_preset(name: str) -> dict:
    """Deep copy of a named preset configuration."""
    if name not in _REGISTRY:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(preset_names())}")
    return copy.deepcopy(_REGISTRY[name])
