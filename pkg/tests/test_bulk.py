import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ferrobvp as fb
from ferrobvp.bulk import ModelParams


def bisect_root(f, lo, hi, tol=1e-15):
    """Bisection oracle for a bracketed root."""
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or hi - lo < tol:
            return mid
        if (flo < 0) == (fmid < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def params(c, xi=1.0):
    return ModelParams(l1=1.0, l2=1.0, c=c, xi=xi)


class TestModelParams:
    def test_rejects_bad_constants(self):
        with pytest.raises(ValueError):
            ModelParams(l1=0.0, l2=1.0, c=1.0)
        with pytest.raises(ValueError):
            ModelParams(l1=1.0, l2=-2.0, c=1.0)
        with pytest.raises(ValueError):
            ModelParams(l1=1.0, l2=1.0, c=-0.1)
        with pytest.raises(ValueError):
            ModelParams(l1=1.0, l2=1.0, c=1.0, xi=0.0)

    def test_isotropic(self):
        p = ModelParams.isotropic(2.5, 0.3)
        assert p.l1 == p.l2 == 2.5 and p.xi == 1.0


class TestBulkEnergy:
    def test_reference_values_exact(self):
        p = params(1.0)
        assert fb.bulk_energy(0.0, 0.0, 0.3, 0.7, p) == 1.25
        assert fb.bulk_energy(1.0, 0.0, 0.3, 0.7, p) == 0.25

    def test_uncoupled_global_minimum(self):
        assert fb.bulk_energy(1.0, 1.0, 0.0, 0.0, params(0.0)) == 0.0

    def test_broadcasts(self):
        rho = np.array([0.0, 1.0])
        vals = fb.bulk_energy(rho, 0.0, 0.0, 0.0, params(1.0))
        assert np.allclose(vals, [1.25, 0.25])


class TestBranchCubic:
    def test_uncoupled_roots(self):
        roots = sorted(fb.solve_branch_cubic(params(0.0), "even").roots)
        assert np.allclose(roots, [-1.0, 0.0, 1.0], atol=1e-14)

    def test_largest_even_root_matches_bisection_oracle(self):
        oracle = bisect_root(lambda r: r**3 - 1.5 * r - 0.25, 1.0, 2.0)
        assert abs(max(fb.solve_branch_cubic(params(1.0), "even").roots) - oracle) <= 1e-12
        assert abs(oracle - 1.3008) <= 5e-4

    def test_single_real_root_when_radicand_positive(self):
        p = params(2.0, xi=1000.0)
        for parity in ("even", "odd"):
            cubic = fb.solve_branch_cubic(p, parity)
            assert cubic.radicand > 0
            assert len(cubic.roots) == 1

    @settings(max_examples=60, deadline=None)
    @given(c=st.floats(0.0, 10.0), xi=st.floats(0.05, 20.0),
           parity=st.sampled_from(["even", "odd"]))
    def test_roots_satisfy_cubic(self, c, xi, parity):
        p = params(c, xi)
        cubic = fb.solve_branch_cubic(p, parity)
        a = 1.0 + c * c / (2.0 * xi)
        q = -c / 4.0 if parity == "even" else c / 4.0
        scale = max(1.0, a ** 1.5)  # residuals scale with the root magnitude cubed
        for r in cubic.roots:
            assert abs(r**3 - a * r + q) <= 1e-12 * scale

    def test_rejects_unknown_parity(self):
        with pytest.raises(ValueError):
            fb.solve_branch_cubic(params(1.0), "sideways")


class TestCriticalPoints:
    def test_uncoupled_recovers_nine_pair_magnitudes(self):
        pts = fb.bulk_critical_points(params(0.0))
        magnitudes = {(round(p.rho, 12), round(p.sigma, 12)) for p in pts}
        assert magnitudes == {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)}

    def test_global_minimiser_is_even_branch_at_c1(self):
        mini = fb.global_minimiser(params(1.0))
        assert mini.parity == "even"
        assert mini.label == "coupled-branch-1"
        assert abs(mini.rho - fb.rho_star(1.0)) <= 1e-12

    def test_polar_system_residuals(self):
        # stationarity of the polar bulk density, theta = 0 and phi per parity
        for c in (0.3, 1.0, 2.5):
            p = params(c)
            for pt in fb.bulk_critical_points(p):
                if pt.label.startswith("trivial"):
                    continue
                phi = 0.0 if pt.parity == "even" else math.pi / 2.0
                rho, sig = pt.rho, pt.sigma
                eqs = [
                    4 * rho * math.cos(0.0) * (rho**2 - 1) - c * sig**2 * math.cos(2 * phi),
                    4 * rho * math.sin(0.0) * (rho**2 - 1) - c * sig**2 * math.sin(2 * phi),
                    sig * math.cos(phi) * (sig**2 - 1) - 2 * sig * rho * c * math.cos(-phi),
                    sig * math.sin(phi) * (sig**2 - 1) - 2 * sig * rho * c * math.sin(-phi),
                ]
                assert max(abs(e) for e in eqs) <= 1e-10

    def test_small_coupling_matches_linear_perturbation(self):
        # fitted constants from the exact Cardano roots over c in [0.01, 0.1]
        for c in np.arange(0.01, 0.105, 0.01):
            mini = fb.global_minimiser(params(c))
            assert abs(mini.rho - (1 + c / 8)) <= 0.25 * c**2
            assert abs(mini.sigma**2 - (1 + 2 * c + c * c / 4)) <= 0.5 * c**3

    def test_minimiser_beats_nematic_branch_for_positive_coupling(self):
        for c in (0.1, 0.5, 1.0, 2.0, 5.0):
            assert fb.global_minimiser(params(c)).energy < 0.25

    def test_excluded_odd_pair_realness(self):
        # the largest odd root keeps a real sigma only up to c = 1/2
        pts = fb.bulk_critical_points(params(0.4))
        assert any(p.parity == "odd" and p.label == "coupled-branch-1" for p in pts)
        pts = fb.bulk_critical_points(params(0.6))
        assert not any(p.parity == "odd" and p.label == "coupled-branch-1" for p in pts)


class TestRhoStar:
    def test_uncoupled_value_exact(self):
        assert fb.rho_star(0.0) == 1.0

    def test_matches_bisection_oracle(self):
        oracle = bisect_root(lambda r: r**3 - 1.5 * r - 0.25, 1.0, 2.0)
        assert abs(fb.rho_star(1.0) - oracle) <= 1e-12

    def test_defining_cubic_residual(self):
        for c in (0.5, 1.0, 5.0):
            r = fb.rho_star(c)
            assert abs(r**3 - r * (1 + c * c / 2) - c / 4) <= 1e-12 * max(1.0, r**3)

    def test_monotone_on_grid(self):
        values = [fb.rho_star(c) for c in np.arange(0.0, 10.05, 0.1)]
        assert all(b >= a for a, b in zip(values, values[1:]))


class TestAsymptoticMinimiser:
    def test_uncoupled_limit(self):
        assert fb.asymptotic_minimiser(0.0, "small") == (1.0, 1.0)

    def test_small_regime_error_bound(self):
        for c in np.arange(0.01, 0.105, 0.01):
            rho_a, _ = fb.asymptotic_minimiser(c, "small")
            assert abs(rho_a - fb.rho_star(c)) <= 0.25 * c**2

    def test_large_regime_within_one_percent(self):
        rho_a, sig2_a = fb.asymptotic_minimiser(50.0, "large")
        mini = fb.global_minimiser(params(50.0))
        assert abs(rho_a - mini.rho) / mini.rho <= 0.01
        assert abs(sig2_a - mini.sigma**2) / mini.sigma**2 <= 0.01

    def test_rejects_unknown_regime(self):
        with pytest.raises(ValueError):
            fb.asymptotic_minimiser(1.0, "tiny")


class TestBulkMinimumInfo:
    def test_uncoupled_constants_vanish(self):
        info = fb.bulk_minimum_info(0.0)
        assert abs(info.alpha) <= 1e-14 and abs(info.beta) <= 1e-14

    def test_beta_matches_direct_evaluation(self):
        rs = bisect_root(lambda r: r**3 - 1.5 * r - 0.25, 1.0, 2.0)
        m2 = 1 + 2 * rs
        beta_oracle = (rs**2 - 1) ** 2 + (m2 - 1) ** 2 / 4 - rs * m2
        info = fb.bulk_minimum_info(1.0)
        assert abs(info.beta - beta_oracle) <= 1e-10
        assert abs(info.beta - (-2.514)) <= 1e-3

    def test_shifted_potentials_nonnegative(self):
        for c in (0.5, 1.0, 5.0):
            info = fb.bulk_minimum_info(c)
            lim = info.rho_star + 1.0
            q = np.linspace(-lim, lim, 200)
            m = np.linspace(-lim, lim, 200)
            Q, M = np.meshgrid(q, m)
            f_or = (Q**2 - 1) ** 2 + (M**2 - 1) ** 2 / 4 - c * Q * M**2
            assert np.min(f_or - info.beta) >= -1e-12
            # four-field density on the slice Q12 = M2 = 0 against alpha
            assert np.min(f_or - info.alpha) >= -1e-12

    def test_full_shift_nonnegative_in_polar_form(self):
        for c in (0.5, 1.0, 5.0):
            info = fb.bulk_minimum_info(c)
            rho = np.linspace(0, info.rho_star + 1, 120)
            sig = np.linspace(0, math.sqrt(info.m_bound_sq) + 1, 120)
            R, S = np.meshgrid(rho, sig)
            f = (R**2 - 1) ** 2 + (S**2 - 1) ** 2 / 4 - c * R * S**2  # best case cos = 1
            assert np.min(f - info.alpha) >= -1e-12
