"""Scenario-driven command line: solves, spectra, verification, sweeps.

Usage:
    vie solve|spectrum|verify|sweep --config scenario.json [--out DIR] [--seed N]
    vie presets [--list] [--write DIR]

A scenario is a single JSON file naming the geometry, wave parameters,
a coefficient registry entry, the discretization, and task parameters.
Outputs are machine readable: eigenvalues and fields as CSV (full
precision, LF line endings), reports as JSON with a stable key schema.
Every output file carries the configuration hash and artifact version.

Exit codes: 0 success, 2 configuration/validation failure (no outputs),
3 numerical failure (divergence or near-singular solve; the report
records the failure and partial outputs are flagged incomplete).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .boundary import assemble_K, jump_relation_check, trace
from .coefficients import CoefficientField, beta_only, constant_a, linear_a, smooth_bump_a
from .coupled import assemble_coupled, check_equivalence, solve_coupled
from .geometry import DomainGeometry, build_boundary_mesh, build_volume_grid
from .presets import get_preset, preset_names
from .scattering import (
    gmres_solve,
    incident_plane_wave,
    incident_point_source,
    plane_wave_function,
    point_source_function,
)
from .special import WaveParameters, bessel_j, bessel_y, greens_gradient, greens_value
from .spectral import (
    a_to_sigma,
    detect_clusters,
    eigenvalues_dense,
    fredholm_verdict,
    predict_clusters,
    sigma_to_a,
    spectral_operator_matrix,
)
from .volume import (
    apply_A,
    apply_A_fft,
    apply_A_smooth_form,
    assemble_A_dense,
    discrete_laplacian,
    identity_minus_A,
    newton_potential,
)

logger = logging.getLogger(__name__)

DESK_SCALE_CAP = 6000


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration (exit code 2)."""


class NumericalFailure(RuntimeError):
    """Divergence or singularity during a task (exit code 3).

    ``partial_results`` carries whatever the task completed before the
    failure so the report can record it (flagged incomplete).
    """

    def __init__(self, message: str, partial_results: Optional[dict] = None):
        super().__init__(message)
        self.partial_results = partial_results or {}


# ---------------------------------------------------------------------------
# Configuration parsing
# ---------------------------------------------------------------------------
def _as_complex(value, label: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{label} must be a number or [re, im] pair")


def _require(cfg: dict, key: str, label: str):
    if key not in cfg:
        raise ConfigError(f"missing {label} entry {key!r}")
    return cfg[key]


def build_geometry(cfg: dict) -> DomainGeometry:
    shape = _require(cfg, "shape", "geometry")
    margin = float(cfg.get("margin", 0.1))
    if shape == "disc":
        return DomainGeometry.disc(float(_require(cfg, "radius", "geometry")), margin)
    if shape == "ellipse":
        return DomainGeometry.ellipse(_require(cfg, "semi_axes", "geometry"), margin)
    if shape == "polygon":
        return DomainGeometry.polygon(_require(cfg, "vertices", "geometry"), margin)
    if shape == "ball":
        return DomainGeometry.ball(float(_require(cfg, "radius", "geometry")), margin)
    raise ConfigError(f"unknown shape {shape!r}")


def build_coefficients(cfg: dict, domain: DomainGeometry, k: complex) -> CoefficientField:
    name = _require(cfg, "name", "coefficients")
    if name in ("constant-a", "polygon-constant-a"):
        a_val = _as_complex(_require(cfg, "a", "coefficients"), "a")
        k2_in = cfg.get("k2_inside")
        return constant_a(domain, k, a_val,
                          None if k2_in is None else _as_complex(k2_in, "k2_inside"))
    if name == "smooth-bump-a":
        return smooth_bump_a(domain, k, _as_complex(_require(cfg, "amplitude", "coefficients"),
                                                    "amplitude"),
                             cfg.get("rho"))
    if name == "beta-only":
        return beta_only(domain, k, _as_complex(_require(cfg, "amplitude", "coefficients"),
                                                "amplitude"),
                         float(cfg.get("r_plateau", 0.7)), float(cfg.get("r_cut", 0.95)))
    if name == "linear-a":
        return linear_a(domain, k, _as_complex(cfg.get("a0", 1.0), "a0"),
                        np.asarray(_require(cfg, "gradient", "coefficients"), dtype=complex))
    raise ConfigError(f"unknown coefficient registry entry {name!r}")


class Scenario:
    """Validated scenario: geometry, wave, coefficients, discretization."""

    def __init__(self, config: dict, task: str, seed_override: Optional[int] = None):
        if not isinstance(config, dict):
            raise ConfigError("scenario configuration must be a JSON object")
        cfg_task = config.get("task", task)
        if cfg_task != task:
            raise ConfigError(f"config task {cfg_task!r} does not match command {task!r}")
        self.task = task
        self.config = config
        self.seed = int(config.get("seed", 0) if seed_override is None else seed_override)
        self.rng = np.random.default_rng(self.seed)

        wave = _require(config, "wave", "scenario")
        k = _as_complex(_require(wave, "k", "wave"), "k")
        dim = int(wave.get("dimension", 2))
        try:
            self.params = WaveParameters(k, dim)
            self.domain = build_geometry(_require(config, "geometry", "scenario"))
            self.coeffs = build_coefficients(_require(config, "coefficients", "scenario"),
                                             self.domain, k)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.domain.dimension != dim:
            raise ConfigError("geometry dimension does not match wave dimension")

        disc = config.get("discretization", {})
        self.n_per_axis = int(disc.get("n_per_axis", 32))
        self.boundary_nodes = int(disc.get("boundary_nodes", 4 * self.n_per_axis))
        self.grading = float(disc.get("grading", 3.0))
        if self.n_per_axis < 4:
            raise ConfigError("n_per_axis must be at least 4")
        if self.boundary_nodes < 8:
            raise ConfigError("boundary_nodes must be at least 8")
        for key in ("tol",):
            t = config.get("solve", {}).get(key)
            if t is not None and not 0 < float(t) < 1:
                raise ConfigError("solver tolerance must lie in (0, 1)")
        self._hash = config_hash(config)

    @property
    def hash(self) -> str:
        return self._hash

    def grid(self, n: Optional[int] = None):
        return build_volume_grid(self.domain, n or self.n_per_axis)

    def mesh(self, m: Optional[int] = None):
        return build_boundary_mesh(self.domain, m or self.boundary_nodes, self.grading)


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical configuration (output directory excluded)."""
    stripped = {k: v for k, v in config.items() if k != "output_dir"}
    payload = json.dumps(stripped, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


# ---------------------------------------------------------------------------
# Output writers
# ---------------------------------------------------------------------------
def _fmt(x: float) -> str:
    return "%.17g" % x


def _header(scenario: Scenario) -> str:
    return f"# vielab {__version__} config_hash={scenario.hash}\n"


def write_csv(path: Path, scenario: Scenario, columns, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(_header(scenario))
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(float(x)) for x in row) + "\n")


def write_report(path: Path, scenario: Scenario, status: str, results: dict,
                 incomplete: bool = False, error: Optional[str] = None) -> None:
    report = {
        "artifact_version": __version__,
        "config_hash": scenario.hash,
        "task": scenario.task,
        "seed": scenario.seed,
        "status": status,
        "incomplete": incomplete,
        "results": results,
        "error": error,
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _c2pair(z: complex):
    return [float(np.real(z)), float(np.imag(z))]


# ---------------------------------------------------------------------------
# Tasks
# ---------------------------------------------------------------------------
def task_solve(scenario: Scenario, out: Path) -> dict:
    cfg = scenario.config.get("solve", {})
    grid = scenario.grid()
    incident_kind = cfg.get("incident", "plane-wave")
    if incident_kind == "plane-wave":
        direction = np.asarray(cfg.get("direction", [1.0] + [0.0] * (grid.dimension - 1)),
                               dtype=float)
        u_inc = incident_plane_wave(grid, scenario.params, direction)
        incident_fn = plane_wave_function(scenario.params, direction)
    elif incident_kind == "point-source":
        source = np.asarray(_require(cfg, "source", "solve"), dtype=float)
        u_inc = incident_point_source(grid, scenario.params, source)
        incident_fn = point_source_function(scenario.params, source)
    else:
        raise ConfigError(f"unknown incident field {incident_kind!r}")

    applier = identity_minus_A(grid, scenario.params, scenario.coeffs, method="fft")
    u, info = gmres_solve(applier, u_inc, tol=float(cfg.get("tol", 1e-8)),
                          restart=int(cfg.get("restart", 30)),
                          maxiter=int(cfg.get("maxiter", 400)))
    rows = np.column_stack([grid.centers, u.real, u.imag])
    write_csv(out / "field.csv", scenario,
              list("xyz"[: grid.dimension]) + ["re", "im"], rows)
    results = {
        "gmres": {"iterations": info.iterations, "residual": info.residual,
                  "reason": info.reason, "converged": info.converged},
        "n_unknowns": grid.n,
        "field_file": "field.csv",
    }
    if not info.converged:
        raise NumericalFailure(f"GMRES did not converge ({info.reason}, "
                               f"residual {info.residual:.3e})",
                               partial_results=results)
    radii = cfg.get("exterior_radii")
    if radii:
        from .scattering import extend_solution
        th = 2 * np.pi * np.arange(16) / 16
        rows = []
        for rho in radii:
            targets = float(rho) * np.stack([np.cos(th), np.sin(th)], axis=1)
            vals = extend_solution(grid, scenario.params, scenario.coeffs, u,
                                   targets, incident_fn)
            rows.append(np.column_stack([targets, vals.real, vals.imag]))
        write_csv(out / "exterior.csv", scenario, ["x", "y", "re", "im"],
                  np.vstack(rows))
        results["exterior_file"] = "exterior.csv"
    return results


def _spectrum_matrix(scenario: Scenario, n_level: int) -> np.ndarray:
    op = scenario.config.get("spectrum", {}).get("operator", "coupled")
    if op == "coupled":
        return spectral_operator_matrix(scenario.domain, scenario.params, scenario.coeffs,
                                        n_level, 4 * n_level)
    if op == "volume":
        grid = scenario.grid(n_level)
        _check_desk_scale(grid.n)
        return assemble_A_dense(grid, scenario.params, scenario.coeffs).matrix
    if op == "contrast":
        grid = scenario.grid(n_level)
        _check_desk_scale(grid.n)
        dense = assemble_A_dense(grid, scenario.params, scenario.coeffs).matrix
        return np.eye(grid.n, dtype=np.complex128) - dense
    if op == "half-minus-K":
        mesh = scenario.mesh(n_level)
        return 0.5 * np.eye(mesh.m, dtype=np.complex128) - assemble_K(
            mesh, scenario.params).matrix
    raise ConfigError(f"unknown spectrum operator {op!r}")


def task_spectrum(scenario: Scenario, out: Path) -> dict:
    cfg = scenario.config.get("spectrum", {})
    levels = cfg.get("levels")
    if not levels or len(levels) != 2 or levels[0] >= levels[1]:
        raise ConfigError("spectrum.levels must be two increasing resolutions")
    delta = float(cfg.get("delta", 0.1))
    if delta <= 0:
        raise ConfigError("spectrum.delta must be positive")
    eigs = {}
    for lvl in levels:
        vals, res = eigenvalues_dense(_spectrum_matrix(scenario, int(lvl)))
        eigs[int(lvl)] = vals
        rows = np.column_stack([vals.real, vals.imag, res])
        write_csv(out / f"eigenvalues_{int(lvl)}.csv", scenario,
                  ["re", "im", "residual"], rows)
    report = detect_clusters(eigs[int(levels[0])], eigs[int(levels[1])], delta)
    results = {
        "levels": [int(l) for l in levels],
        "delta": delta,
        "clusters": [_c2pair(c) for c in report.centers],
        "counts_coarse": report.counts_coarse.tolist(),
        "counts_fine": report.counts_fine.tolist(),
        "outside_coarse": report.outside_coarse,
        "outside_fine": report.outside_fine,
        "accumulation_diameter": report.diameter,
    }
    coeff_name = scenario.config["coefficients"].get("name", "")
    if coeff_name in ("constant-a", "polygon-constant-a") and \
            cfg.get("operator", "coupled") in ("coupled", "volume"):
        a_val = _as_complex(scenario.config["coefficients"]["a"], "a")
        sigma = [0.5] if scenario.domain.kind in ("disc", "ellipse") else \
            [0.5]  # polygon interval estimated separately via half-minus-K runs
        pred = predict_clusters([a_val], a_val, sigma)
        results["predicted_clusters"] = [_c2pair(p) for p in pred]
        verdict = fredholm_verdict(scenario.coeffs, scenario.domain, sigma,
                                   rng=scenario.rng)
        results["fredholm"] = {
            "condition_i": verdict.condition_i,
            "condition_ii": verdict.condition_ii,
            "strength": verdict.strength,
            "inconclusive": verdict.inconclusive,
            "holds": verdict.fredholm,
        }
    return results


def task_sweep(scenario: Scenario, out: Path) -> dict:
    cfg = scenario.config.get("sweep", {})
    a_values = cfg.get("a_values")
    if not a_values:
        raise ConfigError("sweep.a_values must be a nonempty list")
    a_values = [_as_complex(a, "a_values entry") for a in a_values]
    from .spectral import condition_sweep
    records = condition_sweep(scenario.domain, scenario.params, a_values,
                              n_per_axis=int(cfg.get("n_per_axis", scenario.n_per_axis)),
                              boundary_nodes=scenario.boundary_nodes,
                              rng=scenario.rng)
    rows = [[a.real, a.imag, cond] for a, cond in records]
    write_csv(out / "sweep.csv", scenario, ["a_re", "a_im", "condition"], rows)
    results = {
        "a_values": [_c2pair(a) for a, _ in records],
        "conditions": [float(c) if np.isfinite(c) else "inf" for _, c in records],
        "sweep_file": "sweep.csv",
    }
    if any(not np.isfinite(c) for _, c in records):
        raise NumericalFailure("singular system encountered during the sweep",
                               partial_results=results)
    return results


# ---------------------------------------------------------------------------
# Verification suite
# ---------------------------------------------------------------------------
def _check_desk_scale(n: int) -> None:
    if n > DESK_SCALE_CAP:
        raise ConfigError(f"verification enforces desk scale (N <= {DESK_SCALE_CAP})")


def _smooth_probe(points: np.ndarray, rng: np.random.Generator,
                  modes: int = 2, scale: float = 1.5) -> np.ndarray:
    """Random band-limited field: smooth under refinement, random content."""
    out = np.zeros(len(points), dtype=np.complex128)
    d = points.shape[1]
    for _ in range((2 * modes + 1) ** 2):
        freq = rng.integers(-modes, modes + 1, size=d)
        coef = rng.standard_normal() + 1j * rng.standard_normal()
        out += coef * np.exp(1j * np.pi * (points @ freq) / scale)
    return out


def verify_suite(scenario: Scenario) -> dict:
    """Run the applicable identity checks and aggregate pass/fail.

    Boundary checks require a smooth 2D shape and coefficients with a
    boundary term; the pure-wavenumber (compact-operator) cluster check
    runs only in that regime. Any exception inside a check is caught
    and reported as that check's failure.
    """
    checks = []
    tag = scenario.coeffs.tag
    smooth_2d = scenario.domain.kind in ("disc", "ellipse")

    def run(name: str, applicable: bool, tolerance, fn):
        entry = {"name": name, "applicable": bool(applicable), "passed": None,
                 "measured": None, "tolerance": tolerance, "detail": ""}
        if applicable:
            try:
                measured, passed, detail = fn()
                entry.update(measured=measured, passed=bool(passed), detail=detail)
            except Exception as exc:  # noqa: BLE001 - report, do not abort the suite
                entry.update(passed=False, detail=f"error: {exc}")
        else:
            entry["detail"] = "not applicable"
        checks.append(entry)

    rng = scenario.rng
    params = scenario.params
    domain = scenario.domain
    coeffs = scenario.coeffs

    def wronskian():
        xs = np.logspace(-1, 2, 25)
        worst = 0.0
        for order in range(0, 9):
            jp = 0.5 * (bessel_j(max(order - 1, 0), xs) - bessel_j(order + 1, xs)) \
                if order > 0 else -bessel_j(1, xs)
            yp = 0.5 * (bessel_y(max(order - 1, 0), xs) - bessel_y(order + 1, xs)) \
                if order > 0 else -bessel_y(1, xs)
            w = bessel_j(order, xs) * yp - jp * bessel_y(order, xs)
            worst = max(worst, float(np.max(np.abs(w - 2 / (np.pi * xs)))))
        return worst, worst <= 1e-10, "max Wronskian defect, orders 0..8"

    run("wronskian-identity", True, 1e-10, wronskian)

    def gradient_fd():
        step, worst = 1e-5, 0.0
        pts = {2: [np.array([0.5, 0.5]), np.array([0.7, -0.3])],
               3: [np.array([0.7, 0.3, 0.1])]}
        for dim, plist in pts.items():
            p = WaveParameters(params.k if dim == scenario.params.dimension else 1.0, dim)
            for x in plist:
                grad = greens_gradient(p, x)
                for c in range(dim):
                    e = np.zeros(dim)
                    e[c] = step
                    fd = (greens_value(p, np.linalg.norm(x + e))
                          - greens_value(p, np.linalg.norm(x - e))) / (2 * step)
                    worst = max(worst, abs(grad[c] - fd) / max(abs(fd), 1e-30))
        return worst, worst <= 1e-7, "gradient vs central differences"

    run("greens-gradient-fd", True, 1e-7, gradient_fd)

    def potential_residual():
        vals = []
        for n in (24, 48):
            grid = build_volume_grid(domain, n)
            _check_desk_scale(grid.n)
            r2 = (grid.centers ** 2).sum(axis=1) / (0.8 * 0.5 * domain.diameter / np.sqrt(2)) ** 2
            v = np.where(r2 < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - r2, 1e-12)), 0.0) + 0j
            pot = newton_potential(grid, params, v)
            lap, interior = discrete_laplacian(grid, pot)
            res = lap + params.k ** 2 * pot + v
            vals.append(float(np.abs(res[interior]).max() / np.abs(v).max()))
        return vals, vals[1] < vals[0], "max-norm residual at n=24, 48"

    run("potential-residual-decay", True, "monotone decrease", potential_residual)

    def fft_direct():
        grid = build_volume_grid(domain, min(scenario.n_per_axis, 32))
        u = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        d1 = apply_A(grid, params, coeffs, u)
        d2 = apply_A_fft(grid, params, coeffs, u)
        scale = max(float(np.linalg.norm(d1)), 1e-30)
        rel = float(np.linalg.norm(d1 - d2)) / scale
        return rel, rel <= 1e-10, "matrix-free FFT vs direct summation"

    run("fft-direct-agreement", True, 1e-10, fft_direct)

    def dense_consistency():
        grid = build_volume_grid(domain, min(scenario.n_per_axis, 24))
        _check_desk_scale(grid.n)
        u = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        mv = assemble_A_dense(grid, params, coeffs).matrix @ u
        mf = u - apply_A(grid, params, coeffs, u)
        rel = float(np.linalg.norm(mv - mf) / np.linalg.norm(mv))
        return rel, rel <= 1e-12, "assembled matrix vs matrix-free action"

    run("dense-matfree-consistency", True, 1e-12, dense_consistency)

    def linearity():
        grid = build_volume_grid(domain, min(scenario.n_per_axis, 24))
        u1 = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        u2 = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        c1, c2 = 0.3 - 1.1j, -2.0 + 0.4j
        lhs = apply_A(grid, params, coeffs, c1 * u1 + c2 * u2)
        rhs = c1 * apply_A(grid, params, coeffs, u1) + c2 * apply_A(grid, params, coeffs, u2)
        rel = float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1e-30))
        return rel, rel <= 1e-12, "operator linearity on random fields"

    run("linearity", True, 1e-12, linearity)

    def smooth_form():
        vals = []
        for n in (24, 48):
            grid = build_volume_grid(domain, n)
            u = _smooth_probe(grid.centers, np.random.default_rng(scenario.seed + 1))
            d = apply_A_fft(grid, params, coeffs, u) - apply_A_smooth_form(
                grid, params, coeffs, u, method="fft")
            vals.append(float(np.linalg.norm(d) / np.linalg.norm(u)))
        # exact coincidence (alpha == 0 makes both routes the beta term)
        ok = vals[1] < vals[0] or max(vals) <= 1e-12
        return vals, ok, "stencil vs integrated-by-parts form"

    run("smooth-form-equivalence", tag in ("globally-smooth", "laplace-case"),
        "monotone decrease (or exact)", smooth_form)

    def jump():
        mesh = build_boundary_mesh(domain, 256)
        th = np.arctan2(mesh.nodes[:, 1], mesh.nodes[:, 0])
        worst = 0.0
        for k in (0.0, params.k):
            p = WaveParameters(k, 2)
            for phi in (np.ones(mesh.m, complex), np.exp(1j * th), np.exp(3j * th)):
                worst = max(worst, jump_relation_check(mesh, p, phi))
        return worst, worst <= 1e-3, "interior trace of D vs -phi/2 + K phi"

    # boundary checks are not applicable without a boundary term
    has_boundary_term = tag != "laplace-case"
    run("jump-relation", smooth_2d and has_boundary_term, 1e-3, jump)

    def gauss_anchor():
        mesh = build_boundary_mesh(domain, 256)
        grid = build_volume_grid(domain, min(scenario.n_per_axis, 32))
        p0 = WaveParameters(0.0, 2)
        from .boundary import double_layer_potential
        inner = grid.centers[domain.boundary_distance(grid.centers) > 4 * grid.h]
        vals = double_layer_potential(mesh, p0, np.ones(mesh.m, complex), inner)
        dev = float(np.max(np.abs(np.abs(vals) - 1.0)))
        sign = float(np.sign(np.real(vals).mean()))
        k0 = assemble_K(mesh, p0).matrix
        jump_side = float(np.real(-0.5 + (k0 @ np.ones(mesh.m))[0]))
        consistent = abs(jump_side - sign) <= 1e-8
        return dev, dev <= 1e-8 and consistent, \
            f"|D 1| deviation; interior sign {sign:+.0f} matches jump value {jump_side:+.3f}"

    run("gauss-anchor-sign", smooth_2d and has_boundary_term, 1e-8, gauss_anchor)

    def trace_equivalence():
        grid = build_volume_grid(domain, min(scenario.n_per_axis, 32))
        _check_desk_scale(grid.n)
        mesh = build_boundary_mesh(domain, scenario.boundary_nodes, scenario.grading)
        system = assemble_coupled(grid, mesh, params, coeffs)
        u_inc = incident_plane_wave(grid, params, np.eye(grid.dimension)[0])
        psi = trace(grid, mesh, u_inc)
        u, phi, info = solve_coupled(system, u_inc, psi)
        if info.near_singular:
            raise NumericalFailure("coupled solve near singular")
        rel = check_equivalence(u, phi, mesh, grid) / float(np.abs(phi).max())
        return rel, rel <= 1e-8, "relative trace defect of the coupled solve"

    boundary_tags = ("piecewise-constant", "piecewise-smooth")
    a_nodes_ok = True
    if tag in boundary_tags and smooth_2d:
        probe_mesh = build_boundary_mesh(domain, 64)
        a_nodes_ok = bool(np.min(np.abs(coeffs.a(probe_mesh.nodes))) > 1e-9)
    run("trace-equivalence", tag in boundary_tags and smooth_2d and a_nodes_ok,
        1e-8, trace_equivalence)

    def compact_cluster():
        counts = {}
        for n in (24, 40):
            grid = build_volume_grid(domain, n)
            _check_desk_scale(grid.n)
            dense = assemble_A_dense(grid, params, coeffs).matrix
            vals, _ = eigenvalues_dense(np.eye(grid.n) - dense)
            counts[n] = int(np.sum(np.abs(vals) > 0.05))
        change = abs(counts[40] - counts[24])
        return counts, change <= 2, "eigenvalues of A outside |lambda| > 0.05"

    run("compact-cluster-at-zero", tag == "laplace-case", "count change <= 2", compact_cluster)

    def sigma_map():
        for i in range(1, 21):
            sigma = Fraction(i, 21)
            a_val = sigma_to_a(sigma)
            if a_to_sigma(a_val) != sigma:
                return str(sigma), False, "round trip failed"
        ok = sigma_to_a(Fraction(1, 2)) == -1
        return 20, ok, "exact rational round trips; sigma=1/2 -> a=-1"

    run("sigma-map-involution", True, "exact", sigma_map)

    n_pass = sum(1 for c in checks if c["applicable"] and c["passed"])
    n_fail = sum(1 for c in checks if c["applicable"] and not c["passed"])
    return {"checks": checks, "passed": n_pass, "failed": n_fail,
            "not_applicable": sum(1 for c in checks if not c["applicable"])}


def task_verify(scenario: Scenario, out: Path) -> dict:
    results = verify_suite(scenario)
    if results["failed"]:
        failed = [c["name"] for c in results["checks"]
                  if c["applicable"] and not c["passed"]]
        raise NumericalFailure("verification checks failed: " + ", ".join(failed),
                               partial_results=results)
    return results


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------
TASKS = {"solve": task_solve, "spectrum": task_spectrum,
         "sweep": task_sweep, "verify": task_verify}


def run_scenario(config: dict, task: str, out_dir: str,
                 seed_override: Optional[int] = None) -> int:
    """Execute one scenario; returns the process exit code."""
    try:
        scenario = Scenario(config, task, seed_override)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        results = TASKS[task](scenario, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        write_report(out / "report.json", scenario, "numerical-failure",
                     exc.partial_results, incomplete=True, error=str(exc))
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    write_report(out / "report.json", scenario, "ok", results)
    return 0


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vie",
        description="Volume-integral-equation scattering laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (("solve", "iterative scattering solve"),
                       ("spectrum", "dense spectra and cluster detection"),
                       ("verify", "identity-check suite"),
                       ("sweep", "conditioning sweep over coefficient values")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", required=True, help="scenario JSON (or preset:<name>)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="random seed override")
    p = sub.add_parser("presets", help="list or export the preset registry")
    p.add_argument("--write", metavar="DIR", default=None,
                   help="write every preset as DIR/<name>.json")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "presets":
        if args.write:
            target = Path(args.write)
            target.mkdir(parents=True, exist_ok=True)
            for name in preset_names():
                with open(target / f"{name}.json", "w", newline="\n") as fh:
                    json.dump(get_preset(name), fh, sort_keys=True, indent=2)
                    fh.write("\n")
            print(f"wrote {len(preset_names())} presets to {target}")
        else:
            for name in preset_names():
                print(name)
        return 0

    try:
        if args.config.startswith("preset:"):
            config = get_preset(args.config.split(":", 1)[1])
        else:
            config = _load_config(args.config)
    except (ConfigError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or config.get("output_dir") or "vie-out"
    return run_scenario(config, args.command, out_dir, args.seed)


if __name__ == "__main__":
    sys.exit(main())
