"""Damped Newton iteration with an L2 linesearch and banded direct solves.

Each step factorizes the banded Hessian of the discrete energy and minimises
the Euclidean residual norm along the Newton direction over the dyadic grid
{1, 1/2, ..., 2^-10}.  The iteration stops as converged when the residual norm
falls below abs_tol, or below rel_tol times its initial value, whichever comes
first; a step that cannot reduce the residual terminates the solve as
non-converged (which keeps the recorded norm history nonincreasing).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bulk import ModelParams
from .discretization import FieldState, ORState, jacobian, residual
from .linalg import BandedMatrix, SingularMatrixError, banded_solve

__all__ = [
    "SolveOptions",
    "SolveReport",
    "newton_solve",
    "banded_solve",
    "BandedMatrix",
    "SingularMatrixError",
]

LAMBDA_GRID = 0.5 ** np.arange(11)  # {1, 1/2, ..., 2^-10}


@dataclass(frozen=True)
class SolveOptions:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    max_iters: int = 100
    linesearch: str = "l2"  # "l2" | "none"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.linesearch not in ("l2", "none"):
            raise ValueError(f"unknown linesearch {self.linesearch!r}")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_norms: list[float]
    final_state: FieldState | ORState
    diagnostic: str | None = field(default=None)


def _norm(vec: np.ndarray) -> float:
    return float(np.linalg.norm(vec))


def newton_solve(
    initial: FieldState | ORState,
    params: ModelParams,
    opts: SolveOptions | None = None,
) -> SolveReport:
    """Solve the discrete critical-point equations from a pinned initial state."""
    opts = opts or SolveOptions()
    state = initial.copy()
    state.pin()

    r = residual(state, params)
    rn = _norm(r)
    r0 = rn
    norms = [rn]
    iterations = 0
    diagnostic = None

    while True:
        if rn <= opts.abs_tol or rn <= opts.rel_tol * r0:
            return SolveReport(True, iterations, norms, state)
        if iterations >= opts.max_iters:
            diagnostic = f"no convergence within {opts.max_iters} iterations"
            break
        try:
            direction = banded_solve(jacobian(state, params), -r)
        except SingularMatrixError as exc:
            diagnostic = f"singular Jacobian factorization: {exc}"
            break

        x = state.to_vector()
        if opts.linesearch == "none":
            cand = state.with_vector(x + direction)
            rc = residual(cand, params)
            state, r, rn = cand, rc, _norm(rc)
        else:
            best = None
            for lam in LAMBDA_GRID:
                cand = state.with_vector(x + lam * direction)
                rc = residual(cand, params)
                rcn = _norm(rc)
                if not np.isfinite(rcn):
                    continue
                if best is None or rcn < best[2]:
                    best = (cand, rc, rcn)
            if best is None or best[2] >= rn:
                diagnostic = "linesearch failed to reduce the residual"
                break
            state, r, rn = best
        iterations += 1
        norms.append(rn)

    return SolveReport(False, iterations, norms, state, diagnostic)
