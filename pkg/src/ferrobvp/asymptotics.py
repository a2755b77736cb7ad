"""Closed-form limiting profiles and verification of the expansion orders.

Large elastic constant: solutions approach the linear profile
(-y, 0, -y, 0) at rate 1/l.  Along the slice l = 1/c the two-field solution
admits the expansion

    Q11(y) = -y + c f2(y) + c^2 p(y) + O(c^3),
    M1(y)  = -y + c g2(y) + c^2 q(y) + O(c^3),

whose corrector polynomials are hard-coded below with exact rational
coefficients (all four vanish at y = +/- 1).  Truncating after the c^0, c^1 or
c^2 term and comparing with the computed solution in the sup norm gives
first-, second- and third-order convergence in c respectively.

Small elastic constant: minimisers approach, away from boundary layers, the
constrained harmonic maps

    Q = rho_star (cos 2 phi0, sin 2 phi0),  M = sqrt(1 + 2 c rho_star) (cos phi0, sin phi0),

with phi0(y) = +/- pi (y + 1) / 2.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .bulk import ModelParams, rho_star
from .discretization import FieldState, Mesh, ORState, make_mesh

__all__ = [
    "laplace_limit_state",
    "or_expansion",
    "corrector_polynomials",
    "eval_rational",
    "convergence_study",
    "expansion_gaps",
    "limit_map_l0",
]

# Corrector polynomials as {exponent: coefficient} with exact rationals.
Q_CORRECTOR_1 = {5: Fraction(-1, 5), 3: Fraction(2, 3), 1: Fraction(-7, 15)}
M_CORRECTOR_1 = {5: Fraction(-1, 20), 3: Fraction(1, 6), 1: Fraction(-7, 60)}
Q_CORRECTOR_2 = {
    9: Fraction(-1, 30),
    7: Fraction(22, 105),
    5: Fraction(-31, 75),
    4: Fraction(-1, 12),
    3: Fraction(14, 45),
    1: Fraction(-233, 3150),
    0: Fraction(1, 12),
}
M_CORRECTOR_2 = {
    9: Fraction(-1, 480),
    7: Fraction(11, 840),
    5: Fraction(-31, 1200),
    4: Fraction(-1, 6),
    3: Fraction(7, 360),
    1: Fraction(-233, 50400),
    0: Fraction(1, 6),
}


def corrector_polynomials() -> dict[str, dict[int, Fraction]]:
    """The four corrector polynomials keyed by field and order."""
    return {
        "q11_order1": dict(Q_CORRECTOR_1),
        "m1_order1": dict(M_CORRECTOR_1),
        "q11_order2": dict(Q_CORRECTOR_2),
        "m1_order2": dict(M_CORRECTOR_2),
    }


def eval_rational(poly: dict[int, Fraction], y: Fraction) -> Fraction:
    """Evaluate a rational-coefficient polynomial exactly."""
    return sum((coeff * y**exp for exp, coeff in poly.items()), Fraction(0))


def _eval_poly(poly: dict[int, Fraction], y: np.ndarray) -> np.ndarray:
    # Horner on the dense float coefficient list.
    deg = max(poly)
    coeffs = [float(poly.get(k, Fraction(0))) for k in range(deg, -1, -1)]
    out = np.full_like(np.asarray(y, dtype=float), coeffs[0])
    for c in coeffs[1:]:
        out = out * y + c
    return out


def laplace_limit_state(mesh: Mesh) -> FieldState:
    """Nodal interpolant of the large-l limit (-y, 0, -y, 0)."""
    y = mesh.nodes
    zero = np.zeros_like(y)
    return FieldState(mesh, -y, zero.copy(), -y.copy(), zero.copy())


def or_expansion(y, c: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Truncated expansion of the two-field branch along l = 1/c.

    order 0 keeps -y; order 1 adds the c-correctors; order 2 adds the
    c^2-correctors.  Valid for |y| <= 1 and c > 0.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"truncation order must be 0, 1 or 2, got {order}")
    y = np.asarray(y, dtype=float)
    q11 = -y.astype(float)
    m1 = -y.astype(float)
    if order >= 1:
        q11 = q11 + c * _eval_poly(Q_CORRECTOR_1, y)
        m1 = m1 + c * _eval_poly(M_CORRECTOR_1, y)
    if order >= 2:
        q11 = q11 + c * c * _eval_poly(Q_CORRECTOR_2, y)
        m1 = m1 + c * c * _eval_poly(M_CORRECTOR_2, y)
    return q11, m1


def expansion_gaps(c_grid, n_cells: int = 1000, opts=None) -> dict[int, np.ndarray]:
    """Sup-norm gaps between the computed two-field solution and the truncated
    expansions, for every truncation order, over a grid of couplings.

    Each coupling c is solved at l = 1/c from the linear guess; any
    non-converged solve aborts the study.
    """
    from .solver import SolveOptions, newton_solve

    c_grid = np.asarray(c_grid, dtype=float)
    if np.any(c_grid <= 0) or np.any(c_grid > 0.5):
        raise ValueError("couplings must lie in (0, 0.5]")
    opts = opts or SolveOptions(rel_tol=1e-300)
    mesh = make_mesh(n_cells)
    y = mesh.nodes
    guess = ORState(mesh, -y, -y.copy())
    gaps = {0: [], 1: [], 2: []}
    for c in c_grid:
        params = ModelParams.isotropic(1.0 / c, c)
        report = newton_solve(guess, params, opts)
        if not report.converged:
            raise RuntimeError(f"solve failed at c={c} (l={1.0 / c}): {report.diagnostic}")
        sol = report.final_state
        for order in (0, 1, 2):
            q_ref, m_ref = or_expansion(y, c, order)
            gaps[order].append(max(
                float(np.max(np.abs(sol.q11 - q_ref))),
                float(np.max(np.abs(sol.m1 - m_ref))),
            ))
    return {order: np.asarray(v) for order, v in gaps.items()}


def convergence_study(c_grid, order: int, n_cells: int = 1000, opts=None) -> float:
    """Least-squares log-log slope of the sup-norm gap against the coupling."""
    gaps = expansion_gaps(c_grid, n_cells=n_cells, opts=opts)[order]
    c_grid = np.asarray(c_grid, dtype=float)
    slope = np.polyfit(np.log(c_grid), np.log(gaps), 1)[0]
    return float(slope)


def limit_map_l0(mesh: Mesh, c: float, sense: str) -> FieldState:
    """Small-l limit map with rotation sense '+' or '-'.

    phi0(y) = +/- pi (y + 1)/2 is harmonic with phi0(-1) = 0, phi0(1) = +/- pi;
    the returned state has |Q| = rho_star and |M| = sqrt(1 + 2 c rho_star) at
    every node and does not satisfy the Dirichlet data (boundary layers are
    the solver's business).
    """
    if sense not in ("+", "-"):
        raise ValueError(f"sense must be '+' or '-', got {sense!r}")
    sgn = 1.0 if sense == "+" else -1.0
    rs = rho_star(c)
    sig = math.sqrt(1.0 + 2.0 * c * rs)
    phi0 = sgn * math.pi * (mesh.nodes + 1.0) / 2.0
    return FieldState(
        mesh,
        rs * np.cos(2.0 * phi0),
        rs * np.sin(2.0 * phi0),
        sig * np.cos(phi0),
        sig * np.sin(phi0),
    )
