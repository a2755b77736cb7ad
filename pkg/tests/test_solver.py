import numpy as np
import pytest

import ferrobvp as fb
from ferrobvp.discretization import FieldState, make_mesh, residual
from ferrobvp.linalg import BandedMatrix, SingularMatrixError, banded_solve
from ferrobvp.solver import SolveOptions, newton_solve


def banded_from_dense(dense, bw):
    n = dense.shape[0]
    ab = np.zeros((2 * bw + 1, n))
    for i in range(n):
        for j in range(max(0, i - bw), min(n, i + bw + 1)):
            ab[bw + i - j, j] = dense[i, j]
    return BandedMatrix(ab=ab, bw=bw)


class TestBandedSolve:
    def test_identity(self):
        b = np.arange(5.0)
        m = banded_from_dense(np.eye(5), 1)
        assert np.array_equal(banded_solve(m, b), b)

    def test_laplacian_consistency(self):
        n = 100
        dense = 2 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
        m = banded_from_dense(dense, 1)
        rhs = dense @ np.ones(n)
        assert np.max(np.abs(banded_solve(m, rhs) - 1.0)) <= 1e-12

    def test_random_banded_spd_against_dense_oracle(self):
        rng = np.random.default_rng(0)
        n, bw = 50, 3
        dense = np.zeros((n, n))
        for k in range(-bw, bw + 1):
            dense += np.diag(rng.standard_normal(n - abs(k)), k)
        dense = dense @ dense.T + n * np.eye(n)
        dense[np.abs(np.subtract.outer(np.arange(n), np.arange(n))) > 2 * bw] = 0.0
        m = banded_from_dense(dense, 2 * bw)
        rhs = rng.standard_normal(n)
        x = banded_solve(m, rhs)
        assert np.max(np.abs(x - np.linalg.solve(dense, rhs))) <= 1e-10

    def test_residual_bound(self):
        rng = np.random.default_rng(7)
        n, bw = 200, 4
        ab = rng.standard_normal((2 * bw + 1, n))
        ab[bw] += 6.0
        m = BandedMatrix(ab=ab, bw=bw)
        rhs = rng.standard_normal(n)
        x = banded_solve(m, rhs)
        res = np.linalg.norm(m.matvec(x) - rhs)
        bound = 1e-10 * (np.abs(ab).sum() * np.linalg.norm(x) + np.linalg.norm(rhs))
        assert res <= bound

    def test_exact_singularity_raises(self):
        m = banded_from_dense(np.zeros((4, 4)), 1)
        with pytest.raises(SingularMatrixError):
            banded_solve(m, np.ones(4))

    def test_shape_mismatch(self):
        m = banded_from_dense(np.eye(4), 1)
        with pytest.raises(ValueError):
            banded_solve(m, np.ones(5))

    def test_matvec_matches_dense(self):
        rng = np.random.default_rng(3)
        dense = rng.standard_normal((12, 12))
        dense[np.abs(np.subtract.outer(np.arange(12), np.arange(12))) > 2] = 0.0
        m = banded_from_dense(dense, 2)
        x = rng.standard_normal(12)
        assert np.allclose(m.matvec(x), dense @ x, atol=1e-14)


def linear_guess(mesh):
    y = mesh.nodes
    return FieldState(mesh, -y, np.zeros_like(y), -y.copy(), np.zeros_like(y))


class TestNewtonSolve:
    def test_options_validated(self):
        with pytest.raises(ValueError):
            SolveOptions(abs_tol=0.0)
        with pytest.raises(ValueError):
            SolveOptions(linesearch="wolfe")

    def test_narrow_channel_solution_tracks_linear_profile(self):
        # deviation from the linear profile decays like alpha / l with fitted
        # alpha ~ 0.244 (two independent discretizations agree); check the
        # fitted law rather than a guessed constant
        mesh = make_mesh(1000)
        y = mesh.nodes
        devs = {}
        for l in (10.0, 20.0, 40.0):
            report = newton_solve(linear_guess(mesh), fb.ModelParams.isotropic(l, 1.0),
                                  SolveOptions(rel_tol=1e-300))
            assert report.converged
            s = report.final_state
            devs[l] = max(np.max(np.abs(s.q11 + y)), np.max(np.abs(s.m1 + y)))
        alpha = np.mean([l * d for l, d in devs.items()])
        for l, d in devs.items():
            assert abs(d - alpha / l) <= 0.2 * alpha / l

    def test_restart_from_solution_is_immediate(self):
        mesh = make_mesh(300)
        params = fb.ModelParams.isotropic(10.0, 1.0)
        report = newton_solve(linear_guess(mesh), params, SolveOptions(rel_tol=1e-300))
        again = newton_solve(report.final_state, params)
        assert again.converged and again.iterations <= 1
        assert again.residual_norms[0] <= 1e-8

    def test_quadratic_tail_convergence(self):
        mesh = make_mesh(1000)
        report = newton_solve(linear_guess(mesh), fb.ModelParams.isotropic(10.0, 1.0),
                              SolveOptions(rel_tol=1e-300))
        norms = report.residual_norms
        assert len(norms) >= 3
        for a, b in zip(norms[-3:], norms[-2:]):
            assert b <= 1.0 * a * a

    def test_norm_history_monotone_with_linesearch(self):
        mesh = make_mesh(64)
        rng = np.random.default_rng(5)
        for seed in range(4):
            y = mesh.nodes
            state = FieldState(mesh,
                               -y + 0.8 * rng.standard_normal(y.size),
                               0.8 * rng.standard_normal(y.size),
                               -y + 0.8 * rng.standard_normal(y.size),
                               0.8 * rng.standard_normal(y.size))
            report = newton_solve(state, fb.ModelParams.isotropic(0.05, 2.0),
                                  SolveOptions(max_iters=30))
            diffs = np.diff(report.residual_norms)
            assert np.all(diffs <= 0.0)

    def test_converged_states_meet_absolute_tolerance(self):
        mesh = make_mesh(200)
        params = fb.ModelParams.isotropic(1.0, 1.0)
        report = newton_solve(linear_guess(mesh), params, SolveOptions(rel_tol=1e-300))
        assert report.converged
        assert np.linalg.norm(residual(report.final_state, params)) <= 1e-8

    def test_relative_stop_honoured(self):
        mesh = make_mesh(200)
        params = fb.ModelParams.isotropic(10.0, 1.0)
        report = newton_solve(linear_guess(mesh), params,
                              SolveOptions(rel_tol=0.5, abs_tol=1e-300, max_iters=5))
        assert report.converged
        assert report.residual_norms[-1] <= 0.5 * report.residual_norms[0]

    def test_deterministic(self):
        mesh = make_mesh(300)
        params = fb.ModelParams.isotropic(2.0, 1.0)
        r1 = newton_solve(linear_guess(mesh), params)
        r2 = newton_solve(linear_guess(mesh), params)
        assert r1.iterations == r2.iterations
        assert np.array_equal(r1.final_state.to_vector(), r2.final_state.to_vector())

    def test_max_iters_reports_nonconvergence(self):
        mesh = make_mesh(100)
        report = newton_solve(linear_guess(mesh), fb.ModelParams.isotropic(0.01, 5.0),
                              SolveOptions(max_iters=1))
        assert not report.converged
        assert report.diagnostic
