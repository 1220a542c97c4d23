import numpy as np
import pytest

from conftest import smooth_probe
from vielab import (
    assemble_A1,
    assemble_A_dense,
    assemble_coupled,
    build_boundary_mesh,
    build_volume_grid,
    check_equivalence,
    constant_a,
    detect_clusters,
    eigenvalues_dense,
    incident_plane_wave,
    quadrature_weighted_matrix,
    reduced_coupled_matrix,
    solve_coupled,
)
from vielab.boundary import trace
from vielab.volume import identity_minus_A


@pytest.fixture(scope="module")
def setup32(unit_disc, params_k1):
    grid = build_volume_grid(unit_disc, 32)
    mesh = build_boundary_mesh(unit_disc, 128)
    cf = constant_a(unit_disc, params_k1.k, 2.0)
    return grid, mesh, cf


class TestAssembleA1:
    def test_zero_contrasts_give_zero_matrix(self, unit_disc, params_k1):
        grid = build_volume_grid(unit_disc, 16)
        cf = constant_a(unit_disc, params_k1.k, 1.0)
        assert np.all(assemble_A1(grid, params_k1, cf).matrix == 0)

    def test_split_reassembly_consistency_decays(self, unit_disc, params_k1):
        # I - A (stencil route) vs a*I + A1 + D gamma(alpha .) on smooth fields
        from vielab.boundary import double_layer_matrix, trace_matrix
        vals = []
        for n in (24, 48):
            grid = build_volume_grid(unit_disc, n)
            mesh = build_boundary_mesh(unit_disc, 4 * n)
            cf = constant_a(unit_disc, params_k1.k, 2.0)
            m1 = assemble_A_dense(grid, params_k1, cf).matrix
            t = trace_matrix(grid, mesh).toarray()
            dl = double_layer_matrix(mesh, params_k1, grid.centers,
                                     near_distance=0.5 * grid.h)
            alpha = cf.alpha(mesh.nodes)
            m2 = np.diag(1.0 + cf.alpha(grid.centers)) \
                + assemble_A1(grid, params_k1, cf).matrix \
                + (dl * alpha[None, :]) @ t
            u = smooth_probe(grid.centers)
            vals.append(np.linalg.norm((m1 - m2) @ u) / np.linalg.norm(u))
        assert vals[1] < vals[0]

    def test_compactness_signature(self, unit_disc, params_k1):
        grid = build_volume_grid(unit_disc, 32)
        cf = constant_a(unit_disc, params_k1.k, 2.0)
        s = np.linalg.svd(assemble_A1(grid, params_k1, cf).matrix, compute_uv=False)
        assert s[19] / s[0] <= 0.1


class TestAssembleCoupled:
    def test_no_contrast_gives_identity(self, unit_disc, params_k1):
        grid = build_volume_grid(unit_disc, 16)
        mesh = build_boundary_mesh(unit_disc, 64)
        cf = constant_a(unit_disc, params_k1.k, 1.0)
        system = assemble_coupled(grid, mesh, params_k1, cf)
        assert np.allclose(system.matrix, np.eye(grid.n + mesh.m), atol=1e-14)

    def test_boundary_block_form_for_constant_alpha(self, setup32, params_k1):
        grid, mesh, cf = setup32
        system = assemble_coupled(grid, mesh, params_k1, cf)
        alpha = 1.0  # a = 2
        expected = 0.5 * np.diag(np.full(mesh.m, 3.0)) + alpha * system.boundary_K
        assert np.array_equal(system.block(1, 1), expected)

    def test_solvability_smoke(self, setup32, params_k1):
        grid, mesh, cf = setup32
        system = assemble_coupled(grid, mesh, params_k1, cf)
        u_inc = incident_plane_wave(grid, params_k1, (1.0, 0.0))
        psi = trace(grid, mesh, u_inc)
        u, phi, info = solve_coupled(system, u_inc, psi)
        rhs = np.concatenate([u_inc, psi])
        res = np.linalg.norm(system.matrix @ np.concatenate([u, phi]) - rhs)
        assert res / np.linalg.norm(rhs) < 1e-10
        assert not info.near_singular

    def test_unknown_variant_rejected(self, setup32, params_k1):
        grid, mesh, cf = setup32
        with pytest.raises(ValueError, match="boundary operator"):
            assemble_coupled(grid, mesh, params_k1, cf, boundary_operator="magic")


class TestEquivalence:
    def test_zero_data_zero_solution(self, setup32, params_k1):
        grid, mesh, cf = setup32
        system = assemble_coupled(grid, mesh, params_k1, cf)
        u, phi, _ = solve_coupled(system, np.zeros(grid.n, complex),
                                  np.zeros(mesh.m, complex))
        assert np.abs(u).max() == 0 and np.abs(phi).max() == 0

    def test_trace_equivalence_to_solver_precision(self, setup32, params_k1):
        grid, mesh, cf = setup32
        system = assemble_coupled(grid, mesh, params_k1, cf)
        u_inc = incident_plane_wave(grid, params_k1, (1.0, 0.0))
        psi = trace(grid, mesh, u_inc)
        u, phi, _ = solve_coupled(system, u_inc, psi)
        assert check_equivalence(u, phi, mesh, grid) / np.abs(phi).max() <= 1e-8

    def test_perturbed_psi_breaks_equivalence(self, setup32, params_k1):
        grid, mesh, cf = setup32
        system = assemble_coupled(grid, mesh, params_k1, cf)
        u_inc = incident_plane_wave(grid, params_k1, (1.0, 0.0))
        psi = trace(grid, mesh, u_inc) + 1.0
        u, phi, _ = solve_coupled(system, u_inc, psi)
        assert check_equivalence(u, phi, mesh, grid) / np.abs(phi).max() > 1e-3

    def test_check_equivalence_vanishes_on_exact_trace(self, setup32, params_k1, rng):
        grid, mesh, cf = setup32
        u = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        phi = trace(grid, mesh, u)
        assert check_equivalence(u, phi, mesh, grid) == 0.0

    def test_coupled_solution_consistent_with_vie_solve(self, unit_disc, params_k1):
        # two discretizations of one continuum problem: difference decays
        from vielab import gmres_solve
        diffs = []
        for n in (16, 32):
            grid = build_volume_grid(unit_disc, n)
            mesh = build_boundary_mesh(unit_disc, 4 * n)
            cf = constant_a(unit_disc, params_k1.k, 2.0)
            system = assemble_coupled(grid, mesh, params_k1, cf)
            u_inc = incident_plane_wave(grid, params_k1, (1.0, 0.0))
            psi = trace(grid, mesh, u_inc)
            u_coupled, _, _ = solve_coupled(system, u_inc, psi)
            u_vie, info = gmres_solve(identity_minus_A(grid, params_k1, cf, "fft"),
                                      u_inc, tol=1e-10)
            assert info.converged
            diffs.append(np.linalg.norm(u_coupled - u_vie) / np.linalg.norm(u_vie))
        assert diffs[1] < diffs[0] < 0.10

    def test_rhs_size_validated(self, setup32, params_k1):
        grid, mesh, cf = setup32
        system = assemble_coupled(grid, mesh, params_k1, cf)
        with pytest.raises(ValueError):
            solve_coupled(system, np.zeros(3, complex), np.zeros(mesh.m, complex))


class TestStructure:
    def test_full_vs_reduced_cluster_centers(self, unit_disc, params_k1):
        # dropping A1, the trace coupling, and the commutator moves each
        # cluster center by less than 0.05
        eigs_full, eigs_reduced = {}, {}
        for n in (16, 24):
            grid = build_volume_grid(unit_disc, n)
            mesh = build_boundary_mesh(unit_disc, 4 * n)
            cf = constant_a(unit_disc, params_k1.k, 2.0)
            system = assemble_coupled(grid, mesh, params_k1, cf,
                                      boundary_operator="nystrom")
            eigs_full[n], _ = eigenvalues_dense(system.matrix)
            eigs_reduced[n], _ = eigenvalues_dense(reduced_coupled_matrix(system))
        rep_full = detect_clusters(eigs_full[16], eigs_full[24], 0.1)
        rep_red = detect_clusters(eigs_reduced[16], eigs_reduced[24], 0.1)
        for c in rep_full.centers:
            assert np.min(np.abs(rep_red.centers - c)) < 0.05

    def test_weighted_similarity_preserves_eigenvalues(self, setup32, params_k1):
        grid, mesh, cf = setup32
        system = assemble_coupled(grid, mesh, params_k1, cf,
                                  boundary_operator="nystrom")
        w = quadrature_weighted_matrix(system)
        e1 = np.sort_complex(np.linalg.eigvals(system.matrix))
        e2 = np.sort_complex(np.linalg.eigvals(w))
        assert np.abs(e1 - e2).max() < 1e-8 * np.abs(e1).max()
