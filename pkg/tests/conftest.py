"""Shared fixtures.

The expensive computations (deflation sweeps, continuation runs, metric
costs) are session-scoped so the acceptance criteria can share them.  Every
converged state produced by a fixture is recorded in SOLUTION_LOG together
with its parameters; the maximum-principle criterion sweeps that log.
"""

from __future__ import annotations

import numpy as np
import pytest

import ferrobvp as fb
from ferrobvp.deflation import default_guess_suite, discover_solutions, rotation_minimisers
from ferrobvp.discretization import FieldState, embed_or_state

# (state, params) for every converged solution produced while testing
SOLUTION_LOG: list = []


def log_solution(state, params):
    SOLUTION_LOG.append((state, params))
    return state


def log_all(states, params):
    for s in states:
        log_solution(s, params)
    return states


@pytest.fixture(scope="session")
def mesh1000():
    return fb.make_mesh(1000)


@pytest.fixture(scope="session")
def strict_opts():
    # relative stop disabled: every converged state must meet the 1e-8 norm
    return fb.SolveOptions(rel_tol=1e-300)


@pytest.fixture(scope="session")
def laplace_family(mesh1000, strict_opts):
    """Solutions from the linear guess at c=1, l in {10, 20, 40, 80}."""
    out = {}
    y = mesh1000.nodes
    for l in (10.0, 20.0, 40.0, 80.0):
        params = fb.ModelParams.isotropic(l, 1.0)
        guess = FieldState(mesh1000, -y, np.zeros_like(y), -y.copy(), np.zeros_like(y))
        report = fb.newton_solve(guess, params, strict_opts)
        assert report.converged, report.diagnostic
        out[l] = log_solution(report.final_state, params)
    return out


@pytest.fixture(scope="session")
def uniqueness_run(mesh1000, strict_opts):
    """Deflation sweep with a 20-guess suite at l=10, c=1."""
    params = fb.ModelParams.isotropic(10.0, 1.0)
    suite = default_guess_suite(mesh1000, params, "full", n_random=11)[:20]
    assert len(suite) == 20
    sols = discover_solutions(params, "full", suite, budget=60, opts=strict_opts)
    return params, log_all(sols, params)


@pytest.fixture(scope="session")
def or_solutions_c1(mesh1000, strict_opts):
    params = fb.ModelParams.isotropic(0.01, 1.0)
    suite = default_guess_suite(mesh1000, params, "or", n_random=6)
    return params, log_all(discover_solutions(params, "or", suite, budget=60, opts=strict_opts), params)


@pytest.fixture(scope="session")
def or_solutions_c5(mesh1000, strict_opts):
    params = fb.ModelParams.isotropic(0.01, 5.0)
    suite = default_guess_suite(mesh1000, params, "or", n_random=6)
    return params, log_all(discover_solutions(params, "or", suite, budget=60, opts=strict_opts), params)


@pytest.fixture(scope="session")
def full_solutions_l02(mesh1000, strict_opts):
    params = fb.ModelParams.isotropic(0.2, 1.0)
    suite = default_guess_suite(mesh1000, params, "full", n_random=10)
    return params, log_all(discover_solutions(params, "full", suite, budget=200, opts=strict_opts), params)


@pytest.fixture(scope="session")
def minimisers_l001(mesh1000, strict_opts):
    """Lowest-energy four-field states at l=0.01 for c in {1, 5}."""
    out = {}
    for c in (1.0, 5.0):
        params = fb.ModelParams.isotropic(0.01, c)
        candidates = rotation_minimisers(params, mesh1000, strict_opts)
        assert candidates, f"no rotation minimiser tracked at c={c}"
        suite = default_guess_suite(mesh1000, params, "or", n_random=2)
        for s in discover_solutions(params, "or", suite, budget=20, opts=strict_opts):
            candidates.append(embed_or_state(s))
        log_all(candidates, params)
        out[c] = (params, min(candidates, key=lambda s: fb.energy(s, params)))
    return out


@pytest.fixture(scope="session")
def continuation_c1():
    branches, events = fb.continue_in_l(1.0, 3.0, 0.2, 0.01, system="full",
                                        deflate_every=5, deflation_budget=10)
    for b in branches:
        for p in b.points:
            SOLUTION_LOG.append((p.state, fb.ModelParams.isotropic(p.l, 1.0)))
    return branches, events


@pytest.fixture(scope="session")
def continuation_c5():
    branches, events = fb.continue_in_l(5.0, 5.0, 3.0, 0.015, system="full",
                                        deflate_every=5, deflation_budget=10)
    for b in branches:
        for p in b.points:
            SOLUTION_LOG.append((p.state, fb.ModelParams.isotropic(p.l, 5.0)))
    return branches, events


@pytest.fixture(scope="session")
def metric_costs():
    from ferrobvp.gamma_metric import reference_costs, resolve_reference_coupling

    coupling = resolve_reference_coupling()
    return coupling, reference_costs(coupling, grid_n=400)
