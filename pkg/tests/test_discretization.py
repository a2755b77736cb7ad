import numpy as np
import pytest

import ferrobvp as fb
from ferrobvp.discretization import (
    FieldState,
    ORState,
    diagnostics,
    embed_or_state,
    energy,
    flip_state,
    jacobian,
    make_mesh,
    or_energy,
    residual,
)


def random_state(mesh, system="full", seed=0, amplitude=0.3):
    rng = np.random.default_rng(seed)
    y = mesh.nodes
    if system == "full":
        s = FieldState(mesh,
                       -y + amplitude * rng.standard_normal(y.size),
                       amplitude * rng.standard_normal(y.size),
                       -y + amplitude * rng.standard_normal(y.size),
                       amplitude * rng.standard_normal(y.size))
    else:
        s = ORState(mesh,
                    -y + amplitude * rng.standard_normal(y.size),
                    -y + amplitude * rng.standard_normal(y.size))
    s.pin()
    return s


class TestMesh:
    def test_two_cells(self):
        mesh = make_mesh(2)
        assert np.allclose(mesh.nodes, [-1.0, 0.0, 1.0])

    def test_paper_default(self):
        mesh = make_mesh(1000)
        assert mesh.h == 0.002
        assert mesh.nodes.size == 1001

    def test_five_cells(self):
        assert np.allclose(make_mesh(5).nodes, [-1.0, -0.6, -0.2, 0.2, 0.6, 1.0])

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            make_mesh(1)


class TestEnergy:
    def test_linear_state_against_symbolic_oracle(self):
        # int of (5/4)(y^2-1)^2 over [-1,1] = 4/3; gradients contribute 2l
        mesh = make_mesh(1000)
        y = mesh.nodes
        l = 0.37
        state = FieldState(mesh, -y, np.zeros_like(y), -y.copy(), np.zeros_like(y))
        e = energy(state, fb.ModelParams.isotropic(l, 0.0))
        assert abs(e - (2 * l + 4.0 / 3.0)) <= 1e-6

    def test_flip_invariance_exact(self):
        mesh = make_mesh(64)
        state = random_state(mesh, seed=3)
        params = fb.ModelParams(0.7, 1.3, 0.8, 0.9)
        assert energy(flip_state(state), params) == energy(state, params)

    def test_constant_zero_state_bulk(self):
        mesh = make_mesh(50)
        z = np.zeros(51)
        state = FieldState(mesh, z.copy(), z.copy(), z.copy(), z.copy())
        assert abs(energy(state, fb.ModelParams(1.0, 1.0, 0.3, 1.0)) - 2.5) <= 1e-13

    def test_embedding_identity(self):
        mesh = make_mesh(80)
        state = random_state(mesh, "or", seed=5)
        params = fb.ModelParams(0.7, 1.3, 0.8, 0.9)
        assert abs(or_energy(state, params) - energy(embed_or_state(state), params)) <= 1e-12

    def test_or_energy_rejects_full_state(self):
        mesh = make_mesh(16)
        with pytest.raises(TypeError):
            or_energy(random_state(mesh, "full"), fb.ModelParams.isotropic(1.0, 1.0))

    def test_constant_bulk_minimum_or_state(self):
        # constant (rho*, sigma*) state, pins ignored: energy = 2 beta(c)
        mesh = make_mesh(1000)
        info = fb.bulk_minimum_info(1.0)
        q = np.full(1001, info.rho_star)
        m = np.full(1001, np.sqrt(info.m_bound_sq))
        e = or_energy(ORState(mesh, q, m), fb.ModelParams.isotropic(0.5, 1.0))
        assert abs(e - 2 * info.beta) <= 1e-6

    def test_refinement_is_second_order(self):
        params = fb.ModelParams.isotropic(0.4, 0.7)

        def smooth_state(mesh):
            y = mesh.nodes
            return FieldState(mesh,
                              -y + 0.2 * np.sin(np.pi * (y + 1)),
                              0.1 * np.sin(2 * np.pi * (y + 1)),
                              -y + 0.15 * np.sin(np.pi * (y + 1) / 2) * (1 - y**2),
                              0.05 * (1 - y**2))

        reference = energy(smooth_state(make_mesh(16000)), params)
        errors = [abs(energy(smooth_state(make_mesh(n)), params) - reference)
                  for n in (250, 500, 1000)]
        slope = np.polyfit(np.log([2.0 / n for n in (250, 500, 1000)]), np.log(errors), 1)[0]
        assert abs(slope - 2.0) <= 0.2


class TestResidual:
    @pytest.mark.parametrize("system", ["full", "or"])
    def test_matches_central_difference_gradient(self, system):
        mesh = make_mesh(64)
        params = fb.ModelParams(0.7, 1.3, 0.8, 0.9)
        rng = np.random.default_rng(11)
        state = random_state(mesh, system, seed=7)
        r = residual(state, params)
        x = state.to_vector()
        nf = state.n_fields
        eps = 1e-6
        for i in rng.choice(np.arange(nf, x.size - nf), 50, replace=False):
            xp, xm = x.copy(), x.copy()
            xp[i] += eps
            xm[i] -= eps
            fd = (energy(state.with_vector(xp), params)
                  - energy(state.with_vector(xm), params)) / (2 * eps)
            assert abs(fd - r[i]) <= 1e-6

    def test_pinned_rows_vanish(self):
        mesh = make_mesh(32)
        r = residual(random_state(mesh, seed=1), fb.ModelParams.isotropic(1.0, 1.0))
        assert np.all(r[:4] == 0.0) and np.all(r[-4:] == 0.0)

    def test_constant_bulk_critical_state_is_stationary_inside(self):
        mesh = make_mesh(100)
        params = fb.ModelParams.isotropic(2.0, 0.0)
        state = FieldState(mesh, np.ones(101), np.zeros(101), np.ones(101), np.zeros(101))
        r = residual(state, params)
        assert np.max(np.abs(r)) <= 1e-12

    def test_bulk_term_independent_of_elastic_constant(self):
        # at the linear profile the stiffness part cancels exactly, so the
        # residual is pure bulk and the scaled system approaches Laplace
        mesh = make_mesh(200)
        y = mesh.nodes
        state = FieldState(mesh, -y, np.zeros_like(y), -y.copy(), np.zeros_like(y))
        r10 = residual(state, fb.ModelParams.isotropic(10.0, 1.0))
        r1000 = residual(state, fb.ModelParams.isotropic(1000.0, 1.0))
        assert np.allclose(r10, r1000, atol=1e-14)
        assert np.linalg.norm(r1000) / 1000.0 <= 1e-3


class TestJacobian:
    def test_symmetry_exact(self):
        mesh = make_mesh(48)
        J = jacobian(random_state(mesh, seed=2), fb.ModelParams(0.7, 1.3, 0.8, 0.9))
        assert J.symmetry_defect() == 0.0

    @pytest.mark.parametrize("system", ["full", "or"])
    def test_matches_central_difference_of_residual(self, system):
        mesh = make_mesh(40)
        params = fb.ModelParams(0.7, 1.3, 0.8, 0.9)
        state = random_state(mesh, system, seed=9)
        dense = jacobian(state, params).to_dense()
        x = state.to_vector()
        nf = state.n_fields
        rng = np.random.default_rng(21)
        eps = 1e-6
        for i in rng.choice(np.arange(nf, x.size - nf), 12, replace=False):
            xp, xm = x.copy(), x.copy()
            xp[i] += eps
            xm[i] -= eps
            fd = (residual(state.with_vector(xp), params)
                  - residual(state.with_vector(xm), params)) / (2 * eps)
            assert np.max(np.abs(fd[nf:-nf] - dense[nf:-nf, i])) <= 1e-5

    def test_cross_blocks_vanish_uncoupled(self):
        mesh = make_mesh(30)
        dense = jacobian(random_state(mesh, seed=4), fb.ModelParams.isotropic(1.0, 0.0)).to_dense()
        n = mesh.n_cells + 1
        q_idx = np.concatenate([np.arange(0, 4 * n, 4), np.arange(1, 4 * n, 4)])
        m_idx = np.concatenate([np.arange(2, 4 * n, 4), np.arange(3, 4 * n, 4)])
        assert np.max(np.abs(dense[np.ix_(q_idx, m_idx)])) == 0.0

    def test_flipped_critical_point_is_critical(self):
        mesh = make_mesh(200)
        params = fb.ModelParams.isotropic(0.5, 1.0)
        guess = random_state(mesh, seed=8, amplitude=0.2)
        report = fb.newton_solve(guess, params, fb.SolveOptions(rel_tol=1e-300))
        assert report.converged
        flipped = flip_state(report.final_state)
        assert np.linalg.norm(residual(flipped, params)) <= 1e-8


class TestDiagnostics:
    def test_linear_state_phases(self):
        mesh = make_mesh(100)
        y = mesh.nodes
        state = FieldState(mesh, -y, np.zeros_like(y), -y.copy(), np.zeros_like(y))
        d = diagnostics(state)
        assert np.allclose(d.q_norm, np.abs(y))
        defined = ~np.isnan(d.theta)
        vals = d.theta[defined]
        assert np.all((np.abs(vals) <= 1e-12) | (np.abs(vals - np.pi) <= 1e-12))
        assert np.isnan(d.theta[y == 0.0]).all()

    def test_rotation_state_recovers_angle(self):
        mesh = make_mesh(256)
        y = mesh.nodes
        psi = 0.4 * (y + 1.0)
        state = FieldState(mesh, np.cos(2 * psi), np.sin(2 * psi),
                           np.cos(psi), np.sin(psi))
        d = diagnostics(state)
        assert np.max(np.abs(d.theta - 2 * psi)) <= 1e-10
        assert np.max(np.abs(d.phi - psi)) <= 1e-10

    def test_limit_map_alignment_identically_zero(self):
        mesh = make_mesh(500)
        d = diagnostics(fb.limit_map_l0(mesh, 5.0, "+"))
        assert np.max(np.abs(d.twophi_minus_theta)) <= 1e-10

    def test_m_unit_normalised(self):
        mesh = make_mesh(64)
        state = random_state(mesh, seed=12)
        d = diagnostics(state)
        norms = np.hypot(d.m_unit[0], d.m_unit[1])
        defined = ~np.isnan(norms)
        assert np.allclose(norms[defined], 1.0)
