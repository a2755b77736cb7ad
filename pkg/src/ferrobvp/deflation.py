"""Deflated Newton for discovering multiple solutions at fixed parameters.

Known solutions x_k are suppressed by multiplying the residual with the scalar

    M(x) = prod_k ( ||x - x_k||^(-p) + shift ),        p = 2, shift = 1,

where the norm is the mesh-weighted discrete L2 norm over interior nodal
coefficients.  M diverges at every known solution, so Newton on M(x) r(x) can
only converge elsewhere; far from the known set M tends to shift^count and the
iteration reduces to plain Newton.  The Newton direction of the deflated
problem is a scalar multiple of the undeflated one (Sherman-Morrison), so each
step costs one banded factorization exactly as before.  With shift >= 1 the
deflated residual norm dominates the true one, hence driving it below abs_tol
certifies the undeflated residual as well; every accepted solution is
nevertheless re-verified against the original residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import limit_map_l0
from .bulk import ModelParams, rho_star
from .discretization import FieldState, Mesh, ORState, flip_state, jacobian, residual
from .linalg import SingularMatrixError, banded_solve
from .solver import LAMBDA_GRID, SolveOptions, SolveReport

__all__ = [
    "DeflationOperator",
    "deflated_solve",
    "discover_solutions",
    "default_guess_suite",
    "named_guess",
    "plateau_state",
    "DISTINCTNESS_TOL",
]

DISTINCTNESS_TOL = 1e-4  # minimum deflation-norm separation between solutions


def _interior(vec: np.ndarray, nf: int) -> np.ndarray:
    return vec[nf:-nf]


@dataclass
class DeflationOperator:
    """Shifted deflation factor over a set of known solutions."""

    known_solutions: list
    power: int = 2
    shift: float = 1.0

    def _vectors(self):
        return [s.to_vector() for s in self.known_solutions]

    def distance(self, a, b) -> float:
        """Mesh-weighted discrete L2 distance on interior nodal coefficients."""
        va = a.to_vector() if hasattr(a, "to_vector") else a
        vb = b.to_vector() if hasattr(b, "to_vector") else b
        nf = a.n_fields if hasattr(a, "n_fields") else None
        if nf is None:
            raise TypeError("distance needs at least one state argument")
        h = a.mesh.h
        diff = _interior(va - vb, nf)
        return math.sqrt(h * float(diff @ diff))

    def factor(self, state) -> float:
        """M(x); infinite at any known solution."""
        m = 1.0
        for known in self.known_solutions:
            d = self.distance(state, known)
            if d == 0.0:
                return math.inf
            m *= d ** (-self.power) + self.shift
        return m

    def direction_scale(self, state, direction: np.ndarray) -> float:
        """Sherman-Morrison factor tau with deflated step = tau * undeflated step.

        tau = 1 / (1 - (grad M . d) / M); the quotient is accumulated per
        known solution so the (possibly huge) factor M never materialises.
        """
        x = state.to_vector()
        nf = state.n_fields
        h = state.mesh.h
        eta = 0.0
        for known in self.known_solutions:
            diff = _interior(x - known.to_vector(), nf)
            d = math.sqrt(h * float(diff @ diff))
            if d == 0.0:
                return math.inf
            m_k = d ** (-self.power) + self.shift
            ddot = h * float(diff @ _interior(direction, nf)) / d
            eta += (-self.power * d ** (-self.power - 1) * ddot) / m_k
        denom = 1.0 - eta
        if denom == 0.0:
            return math.inf
        return 1.0 / denom


def deflated_solve(
    initial,
    params: ModelParams,
    operator: DeflationOperator,
    opts: SolveOptions | None = None,
) -> SolveReport:
    """Newton on the deflated residual M(x) r(x).

    The recorded norm history is that of the deflated residual.  The report is
    marked converged only if the final state additionally satisfies the
    original residual tolerance and is at least DISTINCTNESS_TOL away from
    every known solution.
    """
    opts = opts or SolveOptions()
    state = initial.copy()
    state.pin()

    def deflated_norm(s, r):
        return operator.factor(s) * float(np.linalg.norm(r))

    r = residual(state, params)
    gn = deflated_norm(state, r)
    g0 = gn
    norms = [gn]
    iterations = 0
    diagnostic = None
    converged = False

    while True:
        if gn <= opts.abs_tol or gn <= opts.rel_tol * g0:
            converged = True
            break
        if iterations >= opts.max_iters:
            diagnostic = f"no convergence within {opts.max_iters} iterations"
            break
        try:
            direction = banded_solve(jacobian(state, params), -r)
        except SingularMatrixError as exc:
            diagnostic = f"singular Jacobian factorization: {exc}"
            break
        tau = operator.direction_scale(state, direction)
        if not np.isfinite(tau):
            diagnostic = "deflation step degenerate (started on a known solution?)"
            break
        direction = tau * direction

        x = state.to_vector()
        if opts.linesearch == "none":
            cand = state.with_vector(x + direction)
            rc = residual(cand, params)
            state, r, gn = cand, rc, deflated_norm(cand, rc)
        else:
            best = None
            for lam in LAMBDA_GRID:
                cand = state.with_vector(x + lam * direction)
                rc = residual(cand, params)
                gcn = deflated_norm(cand, rc)
                if not np.isfinite(gcn):
                    continue
                if best is None or gcn < best[2]:
                    best = (cand, rc, gcn)
            if best is None or best[2] >= gn:
                diagnostic = "linesearch failed to reduce the deflated residual"
                break
            state, r, gn = best
        iterations += 1
        norms.append(gn)

    if converged:
        true_norm = float(np.linalg.norm(residual(state, params)))
        if true_norm > opts.abs_tol:
            converged = False
            diagnostic = f"deflated residual converged but true residual is {true_norm:.3e}"
        else:
            for known in operator.known_solutions:
                if operator.distance(state, known) < DISTINCTNESS_TOL:
                    converged = False
                    diagnostic = "converged onto an already-known solution"
                    break
    return SolveReport(converged, iterations, norms, state, diagnostic)


def _polish(state, params: ModelParams, opts: SolveOptions) -> SolveReport:
    # Relative-tolerance stops can leave the residual above abs_tol; a short
    # plain Newton run from the converged state removes the slack.
    strict = SolveOptions(abs_tol=opts.abs_tol, rel_tol=1e-300, max_iters=10,
                          linesearch=opts.linesearch)
    from .solver import newton_solve

    return newton_solve(state, params, strict)


def discover_solutions(
    params: ModelParams,
    system: str,
    guess_suite: list,
    budget: int,
    opts: SolveOptions | None = None,
    power: int = 2,
    shift: float = 1.0,
) -> list:
    """Deflation sweep over a guess suite; returns distinct verified solutions.

    Each guess is retried (against an operator deflating everything found so
    far) until it stops producing new solutions, then the next guess runs;
    passes over the suite repeat while they keep finding solutions and the
    attempt budget lasts.  Every returned state satisfies the undeflated
    residual tolerance and is pairwise separated by at least DISTINCTNESS_TOL
    in the deflation norm.  An empty result is valid.
    """
    if system not in ("full", "or"):
        raise ValueError(f"system must be 'full' or 'or', got {system!r}")
    if not guess_suite:
        raise ValueError("guess suite must be nonempty")
    opts = opts or SolveOptions()
    solutions: list = []
    attempts = 0

    def try_guess(guess) -> bool:
        nonlocal attempts
        operator = DeflationOperator(list(solutions), power=power, shift=shift)
        attempts += 1
        report = deflated_solve(guess, params, operator, opts)
        if not report.converged:
            return False
        polished = _polish(report.final_state, params, opts)
        cand = polished.final_state
        if float(np.linalg.norm(residual(cand, params))) > opts.abs_tol:
            return False
        if any(operator.distance(cand, s) < DISTINCTNESS_TOL for s in solutions):
            return False
        solutions.append(cand)
        return True

    progress = True
    while progress and attempts < budget:
        progress = False
        for guess in guess_suite:
            while attempts < budget and try_guess(guess):
                progress = True
        # the mirror (Q12, M2) -> (-Q12, -M2) of a solution is a solution:
        # seed its basin explicitly so flip partners are reported together
        if system == "full":
            for s in list(solutions):
                flipped = flip_state(s)
                if attempts >= budget:
                    break
                operator = DeflationOperator(list(solutions), power=power, shift=shift)
                if all(operator.distance(flipped, k) >= DISTINCTNESS_TOL for k in solutions):
                    if try_guess(flipped):
                        progress = True
    return solutions


# ---------------------------------------------------------------------------
# Initial-guess construction


def _linear_state(mesh: Mesh, system: str):
    y = mesh.nodes
    if system == "full":
        return FieldState(mesh, -y, np.zeros_like(y), -y.copy(), np.zeros_like(y))
    return ORState(mesh, -y, -y.copy())


def plateau_state(mesh: Mesh, params: ModelParams, system: str, sign: float = 1.0):
    """Plateau test map: boundary ramps of width sqrt(l) onto the bulk minimum.

    Q11 interpolates 1 -> rho_star -> -1 with linear ramps; M1 interpolates
    1 -> sign * sqrt(1 + 2 c rho_star) -> -1.  Ramp width is clipped to stay
    inside the domain.
    """
    y = mesh.nodes
    rs = rho_star(params.c)
    sig = math.sqrt(1.0 + 2.0 * params.c * rs)
    w = min(math.sqrt(params.l1), 0.5)
    w = max(w, 2.0 * mesh.h)
    xp = [-1.0, -1.0 + w, 1.0 - w, 1.0]
    q11 = np.interp(y, xp, [1.0, rs, rs, -1.0])
    m1 = np.interp(y, xp, [1.0, sign * sig, sign * sig, -1.0])
    if system == "full":
        return FieldState(mesh, q11, np.zeros_like(y), m1, np.zeros_like(y))
    return ORState(mesh, q11, m1)


def _layered_state(mesh: Mesh, params: ModelParams, n_layers: int, first_sign: float = 1.0):
    """Two-field guess whose M1 changes sign across n_layers interior walls."""
    y = mesh.nodes
    rs = rho_star(params.c)
    sig = math.sqrt(1.0 + 2.0 * params.c * rs)
    w = min(math.sqrt(params.l1), 0.25 / (n_layers + 1))
    w = max(w, 2.0 * mesh.h)
    q11 = np.interp(y, [-1.0, -1.0 + w, 1.0 - w, 1.0], [1.0, rs, rs, -1.0])

    xp = [-1.0, -1.0 + w]
    fp = [1.0, first_sign * sig]
    walls = np.linspace(-1.0, 1.0, n_layers + 2)[1:-1]
    s = first_sign
    for wall in walls:
        xp += [wall - w / 2.0, wall + w / 2.0]
        fp += [s * sig, -s * sig]
        s = -s
    xp += [1.0 - w, 1.0]
    fp += [s * sig, -1.0]
    m1 = np.interp(y, xp, fp)
    return ORState(mesh, q11, m1)


def _sinusoidal_state(mesh: Mesh, mode: int, amplitude: float):
    y = mesh.nodes
    base = _linear_state(mesh, "full")
    bump = amplitude * np.sin(mode * math.pi * (y + 1.0) / 2.0)
    base.q12 += bump
    base.m2 += bump
    return base


def half_turn_states(mesh: Mesh, c: float) -> list:
    """Rotation seeds with a half-turn nematic phase, theta = +/- pi (y+1)/2.

    Unlike the full-turn limit maps these satisfy the Dirichlet phases at both
    ends, and the mixed-sense members seed the counter-rotating basins.
    """
    y = mesh.nodes
    rs = rho_star(c)
    sig = math.sqrt(1.0 + 2.0 * c * rs)
    out = []
    for s_theta in (1.0, -1.0):
        for s_phi in (1.0, -1.0):
            theta = s_theta * math.pi * (y + 1.0) / 2.0
            phi = s_phi * math.pi * (y + 1.0) / 2.0
            out.append(FieldState(mesh, rs * np.cos(theta), rs * np.sin(theta),
                                  sig * np.cos(phi), sig * np.sin(phi)))
    return out


def _wall_states(mesh: Mesh, params: ModelParams, positions=(-0.3, 0.0, 0.3)):
    """Rotation states carrying an extra sign wall in M or in Q.

    These seed the mixed rotation/domain-wall basins that hold the unstable
    four-field solutions at small l.
    """
    y = mesh.nodes
    out = []
    for sense in ("+", "-"):
        base = limit_map_l0(mesh, params.c, sense)
        for y0 in positions:
            mask = y > y0
            g = base.copy()
            g.m1[mask] *= -1.0
            g.m2[mask] *= -1.0
            out.append(g)
            g = base.copy()
            g.q11[mask] *= -1.0
            g.q12[mask] *= -1.0
            out.append(g)
    return out


def _random_state(mesh: Mesh, system: str, seed: int, amplitude: float = 0.5):
    rng = np.random.default_rng(seed)
    y = mesh.nodes
    state = _linear_state(mesh, system)
    for arr in state.arrays():
        coeffs = rng.normal(0.0, amplitude, size=4)
        for j, a in enumerate(coeffs, start=1):
            arr += a * np.sin(j * math.pi * (y + 1.0) / 2.0) / j
    state.pin()
    return state


def rotation_minimisers(params: ModelParams, mesh: Mesh, opts: SolveOptions | None = None) -> list:
    """The two smooth-rotation states at small l, one per rotation sense.

    Newton from the raw limit-map seed stalls at strong coupling (the seed is
    too far from the Dirichlet data), so the states are tracked by stepping l
    down at c = 1 and then c up to the target, warm-starting each solve.
    Returns the converged states at `params` (possibly fewer than two).
    """
    from .solver import newton_solve

    opts = opts or SolveOptions(rel_tol=1e-300)
    out = []
    for sense in ("+", "-"):
        state = limit_map_l0(mesh, min(params.c, 1.0), sense)
        ok = True
        for l in (0.1, 0.05, 0.02, 0.01):
            if l < params.l1:
                break
            report = newton_solve(state, ModelParams(l, l, min(params.c, 1.0), params.xi), opts)
            if not report.converged:
                ok = False
                break
            state = report.final_state
        if not ok:
            continue
        c_path = [c for c in (1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, params.c) if c <= params.c]
        for c in sorted(set(c_path)):
            report = newton_solve(state, ModelParams(params.l1, params.l2, c, params.xi), opts)
            if not report.converged:
                ok = False
                break
            state = report.final_state
        if not ok:
            continue
        report = newton_solve(state, params, opts)
        if report.converged:
            out.append(report.final_state)
    return out


def named_guess(mesh: Mesh, params: ModelParams, system: str, name: str):
    """Guesses addressable from the command line.

    Supported names: linear, plateau-plus, plateau-minus, random:<seed>.
    """
    if name == "linear":
        return _linear_state(mesh, system)
    if name == "plateau-plus":
        return plateau_state(mesh, params, system, +1.0)
    if name == "plateau-minus":
        return plateau_state(mesh, params, system, -1.0)
    if name.startswith("random:"):
        return _random_state(mesh, system, int(name.split(":", 1)[1]))
    raise ValueError(f"unknown guess name {name!r}")


def default_guess_suite(
    mesh: Mesh,
    params: ModelParams,
    system: str,
    n_random: int = 6,
    seed: int = 0,
) -> list:
    """Deterministic suite mixing linear, plateau, limit-map, oscillatory and
    seeded random guesses."""
    suite = [
        _linear_state(mesh, system),
        plateau_state(mesh, params, system, +1.0),
        plateau_state(mesh, params, system, -1.0),
    ]
    if system == "or":
        for layers in (1, 2, 3):
            suite.append(_layered_state(mesh, params, layers, +1.0))
            suite.append(_layered_state(mesh, params, layers, -1.0))
    else:
        suite.append(limit_map_l0(mesh, params.c, "+"))
        suite.append(limit_map_l0(mesh, params.c, "-"))
        suite.extend(half_turn_states(mesh, params.c))
        for mode in (1, 2):
            suite.append(_sinusoidal_state(mesh, mode, 0.4))
            suite.append(_sinusoidal_state(mesh, mode, -0.4))
        suite.extend(_wall_states(mesh, params))
    for k in range(n_random):
        suite.append(_random_state(mesh, system, seed + k))
    for s in suite:
        s.pin()
    return suite
