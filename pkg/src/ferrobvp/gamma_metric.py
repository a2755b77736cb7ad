"""Degenerate-metric transition costs in the (Q11, M1) plane.

The small-l limit of the two-field problem prices interfaces by the metric

    d(p0, p1) = inf  int  (ftilde(p(t)) / 2)^(1/2) |dp/dt|  dt

over paths joining p0 and p1, where ftilde is the two-field bulk density
shifted by its minimum beta(c) so that it vanishes exactly at the two bulk
minima p* = (rho_star, +sqrt(1 + 2 c rho_star)) and p** (its mirror in M1).
The metric is degenerate at those points but the infimum is attained.  The
factor 1/2 inside the square root is the interface normalization under which
the reference transition-cost table below is reproduced; dropping it scales
every cost by sqrt(2) and changes nothing structural.

Costs are computed in two stages: a globally robust shortest path on a dense
rectangular grid with 8-neighbour edges and trapezoidal edge weights, followed
by local descent on the polyline node positions (endpoints fixed) until the
cost decrease per sweep drops below 1e-8.  The descent can only lower the
grid-stage cost and removes its metrication bias.

The limit partition functional

    J = N d(p*, p**) + d(phase at -1, boundary state at -1)
                     + d(phase at +1, boundary state at +1)

is minimised by enumerating jump counts N <= 2 with both phase choices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .bulk import bulk_minimum_info

__all__ = [
    "PlanePoint",
    "PlanePath",
    "TransitionCost",
    "LimitStructure",
    "f_tilde",
    "bulk_plane_minima",
    "boundary_plane_states",
    "transition_cost",
    "reference_costs",
    "resolve_reference_coupling",
    "minimise_limit_functional",
]

FTILDE_NEGATIVE_TOL = 1e-9   # beyond this the shift constant must be wrong
FTILDE_CLAMP = 1e-12         # tolerated quadrature-level undershoot


@dataclass(frozen=True)
class PlanePoint:
    q11: float
    m1: float

    def as_array(self) -> np.ndarray:
        return np.array([self.q11, self.m1], dtype=float)


@dataclass(frozen=True)
class PlanePath:
    nodes: np.ndarray  # shape (n, 2)
    cost: float


@dataclass(frozen=True)
class TransitionCost:
    cost: float
    grid_cost: float
    path: PlanePath


@dataclass(frozen=True)
class LimitStructure:
    """Minimising interval structure of the limit partition functional."""

    intervals: tuple[tuple[float, float], ...]
    phases: tuple[str, ...]   # "p*" / "p**" per interval
    jumps: int
    total: float


@lru_cache(maxsize=None)
def _beta(c: float) -> float:
    return bulk_minimum_info(c).beta


def _f_tilde_raw(q11, m1, c: float):
    return (q11**2 - 1.0) ** 2 + (m1**2 - 1.0) ** 2 / 4.0 - c * q11 * m1**2 - _beta(c)


def f_tilde(point, c: float):
    """Shifted two-field bulk density; nonnegative, zero at the bulk minima.

    Values within -1e-12 of zero are clamped to zero; anything below -1e-9
    signals an inconsistent shift constant and raises.
    """
    if isinstance(point, PlanePoint):
        q11, m1 = point.q11, point.m1
    else:
        arr = np.asarray(point, dtype=float)
        q11, m1 = arr[..., 0], arr[..., 1]
    val = _f_tilde_raw(np.asarray(q11, dtype=float), np.asarray(m1, dtype=float), c)
    if np.any(val < -FTILDE_NEGATIVE_TOL):
        raise RuntimeError(
            f"shifted bulk density reached {float(np.min(val)):.3e} < -1e-9; shift constant inconsistent"
        )
    val = np.where(val < 0.0, 0.0, val)
    return float(val) if val.ndim == 0 else val


def bulk_plane_minima(c: float) -> tuple[PlanePoint, PlanePoint]:
    """The two zeros p* (positive M1) and p** (negative M1) of ftilde."""
    info = bulk_minimum_info(c)
    sig = math.sqrt(info.m_bound_sq)
    return PlanePoint(info.rho_star, sig), PlanePoint(info.rho_star, -sig)


def boundary_plane_states() -> dict[int, PlanePoint]:
    """Dirichlet data as plane points: at y = -1 the state (1, 1); at y = +1, (-1, -1)."""
    return {-1: PlanePoint(1.0, 1.0), 1: PlanePoint(-1.0, -1.0)}


def _metric_weight(points, c: float):
    """Path-cost density (ftilde / 2)^(1/2)."""
    return np.sqrt(0.5 * f_tilde(points, c))


def _grid_shortest_path(p0: np.ndarray, p1: np.ndarray, c: float,
                        grid_n: int, pad: float) -> tuple[np.ndarray, float]:
    """Stage one: Dijkstra on a grid_n x grid_n rectangle with 8-neighbour edges."""
    pstar, pstar2 = bulk_plane_minima(c)
    anchors = np.vstack([p0, p1, pstar.as_array(), pstar2.as_array()])
    lo = anchors.min(axis=0) - pad
    hi = anchors.max(axis=0) + pad
    xs = np.linspace(lo[0], hi[0], grid_n)
    ys = np.linspace(lo[1], hi[1], grid_n)
    dx = xs[1] - xs[0]
    dy = ys[1] - ys[0]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    g = _metric_weight(np.stack([X, Y], axis=-1), c)

    idx = np.arange(grid_n * grid_n).reshape(grid_n, grid_n)
    rows, cols, weights = [], [], []

    def connect(sa, sb, length):
        a = idx[sa].ravel()
        b = idx[sb].ravel()
        w = 0.5 * (g[sa].ravel() + g[sb].ravel()) * length
        rows.append(a)
        cols.append(b)
        weights.append(w)

    connect((slice(None, -1), slice(None)), (slice(1, None), slice(None)), dx)
    connect((slice(None), slice(None, -1)), (slice(None), slice(1, None)), dy)
    diag = math.hypot(dx, dy)
    connect((slice(None, -1), slice(None, -1)), (slice(1, None), slice(1, None)), diag)
    connect((slice(None, -1), slice(1, None)), (slice(1, None), slice(None, -1)), diag)

    graph = coo_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid_n * grid_n, grid_n * grid_n),
    ).tocsr()

    def nearest(p):
        return idx[int(round((p[0] - lo[0]) / dx)), int(round((p[1] - lo[1]) / dy))]

    src, dst = nearest(p0), nearest(p1)
    dist, pred = dijkstra(graph, directed=False, indices=src, return_predecessors=True)
    order = [dst]
    while order[-1] != src:
        order.append(pred[order[-1]])
    order.reverse()
    path = np.column_stack([X.ravel()[order], Y.ravel()[order]]).astype(float)
    # Pin the exact endpoints (the grid nodes only approximate them).
    path[0] = p0
    path[-1] = p1
    return path, float(dist[dst])


def _path_cost(path: np.ndarray, c: float) -> float:
    g = _metric_weight(path, c)
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    return float(np.sum(0.5 * (g[:-1] + g[1:]) * seg))


def _path_cost_gradient(path: np.ndarray, c: float) -> np.ndarray:
    q11, m1 = path[:, 0], path[:, 1]
    f = np.maximum(_f_tilde_raw(q11, m1, c), 0.0)
    g = np.sqrt(0.5 * f)
    df = 0.5 * np.stack(
        [4.0 * q11 * (q11**2 - 1.0) - c * m1**2,
         m1 * (m1**2 - 1.0) - 2.0 * c * q11 * m1],
        axis=1,
    )
    safe = np.where(g > 1e-12, g, 1.0)
    dg = np.where(g[:, None] > 1e-12, df / (2.0 * safe[:, None]), 0.0)

    d = np.diff(path, axis=0)
    seg = np.linalg.norm(d, axis=1)
    seg_safe = np.where(seg > 1e-300, seg, 1.0)
    unit = d / seg_safe[:, None]

    # d/dP_j of sum_i 0.5 (g_i + g_{i+1}) L_i; endpoints are held fixed.
    weight = np.zeros(len(path))
    weight[1:-1] = seg[:-1] + seg[1:]
    grad = 0.5 * dg * weight[:, None]
    avg = 0.5 * (g[:-1] + g[1:])
    grad[:-1] -= avg[:, None] * unit
    grad[1:] += avg[:, None] * unit
    grad[0] = 0.0
    grad[-1] = 0.0
    return grad


def _resample_path(path: np.ndarray, n_nodes: int) -> np.ndarray:
    """Redistribute nodes uniformly in arclength (staircase grid paths refine
    poorly without this)."""
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0.0:
        return path[[0, -1]].copy()
    t = np.linspace(0.0, s[-1], n_nodes)
    return np.column_stack([np.interp(t, s, path[:, 0]), np.interp(t, s, path[:, 1])])


def _descend(path: np.ndarray, c: float, tol: float, max_iters: int) -> tuple[np.ndarray, float]:
    """Quasi-Newton descent on the interior node positions (endpoints fixed)."""
    from scipy.optimize import minimize

    if len(path) <= 2:
        return path, _path_cost(path, c)
    p0, p1 = path[0].copy(), path[-1].copy()

    def assemble(x):
        return np.vstack([p0, x.reshape(-1, 2), p1])

    def objective(x):
        full = assemble(x)
        return _path_cost(full, c), _path_cost_gradient(full, c)[1:-1].ravel()

    result = minimize(objective, path[1:-1].ravel(), jac=True, method="L-BFGS-B",
                      options={"maxiter": max_iters, "ftol": tol, "gtol": 1e-12})
    refined = assemble(result.x)
    return refined, _path_cost(refined, c)


def _refine_path(path: np.ndarray, c: float, tol: float = 1e-8,
                 max_iters: int = 3000) -> tuple[np.ndarray, float]:
    """Stage two: monotone local descent on node positions.

    The raw shortest-grid path is resampled uniformly in arclength (staircase
    node spacing refines poorly) at two resolutions; each restart descends by
    L-BFGS and the cheapest result wins.  The returned cost never exceeds the
    grid-stage cost.
    """
    best = path.copy()
    best_cost = _path_cost(best, c)
    for n_nodes in (301, 601):
        current = _resample_path(path, n_nodes)
        for _ in range(3):
            current, cost = _descend(current, c, tol * 1e-2, max_iters)
            if cost < best_cost:
                best, best_cost = current.copy(), cost
            resampled = _resample_path(current, n_nodes)
            if _path_cost(resampled, c) > cost + tol:
                break
            current = resampled
    return best, best_cost


def transition_cost(p0: PlanePoint, p1: PlanePoint, c: float,
                    grid_n: int = 400, pad: float = 0.5) -> TransitionCost:
    """Two-stage transition cost between two plane points.

    The search box is the bounding box of {p0, p1, p*, p**} padded by `pad`
    (optimal paths may bow outside the endpoint box).  Degeneracy of the
    weight at p* and p** is harmless: the trapezoidal rule gives zero-weight
    endpoints zero cost density, so the integral stays finite.
    """
    a, b = p0.as_array(), p1.as_array()
    if np.allclose(a, b, rtol=0.0, atol=0.0):
        return TransitionCost(0.0, 0.0, PlanePath(nodes=a[None, :].copy(), cost=0.0))
    path, _ = _grid_shortest_path(a, b, c, grid_n, pad)
    grid_cost = _path_cost(path, c)
    refined, cost = _refine_path(path, c)
    return TransitionCost(cost=cost, grid_cost=grid_cost, path=PlanePath(nodes=refined, cost=cost))


_COST_KEYS = ("p*:p**", "p*:pb(1)", "p**:pb(-1)", "p*:pb(-1)", "p**:pb(1)")


def reference_costs(c: float, grid_n: int = 400) -> dict[str, float]:
    """The five costs between bulk minima and boundary states."""
    pstar, pstar2 = bulk_plane_minima(c)
    pb = boundary_plane_states()
    pairs = {
        "p*:p**": (pstar, pstar2),
        "p*:pb(1)": (pstar, pb[1]),
        "p**:pb(-1)": (pstar2, pb[-1]),
        "p*:pb(-1)": (pstar, pb[-1]),
        "p**:pb(1)": (pstar2, pb[1]),
    }
    return {key: transition_cost(a, b, c, grid_n=grid_n).cost for key, (a, b) in pairs.items()}


# Reported reference values of the five transition costs.
REFERENCE_COST_TARGETS = {
    "p*:p**": 3.008,
    "p*:pb(1)": 3.967,
    "p**:pb(-1)": 2.577,
    "p*:pb(-1)": 0.455,
    "p**:pb(1)": 2.591,
}


def resolve_reference_coupling(candidates=(0.5, 1.0, 2.0, 5.0), rtol: float = 0.05,
                               grid_n: int = 200) -> float:
    """Coupling at which all five computed costs match the reference set.

    Sweeps the candidate couplings and returns the one whose five costs agree
    with REFERENCE_COST_TARGETS within the relative tolerance; raises if none
    (or more than one) qualifies.
    """
    matches = []
    for c in candidates:
        costs = reference_costs(c, grid_n=grid_n)
        if all(abs(costs[k] - v) <= rtol * v for k, v in REFERENCE_COST_TARGETS.items()):
            matches.append(c)
    if len(matches) != 1:
        raise RuntimeError(f"reference coupling not uniquely resolved: matches={matches}")
    return matches[0]


def minimise_limit_functional(c: float, grid_n: int = 400,
                              costs: dict[str, float] | None = None) -> LimitStructure:
    """Minimise the limit partition functional over structures with <= 2 jumps.

    Costs are strictly positive away from coincident points, so every
    additional jump adds d(p*, p**) > 0 and larger jump counts are dominated;
    enumeration over N in {0, 1, 2} with both phase choices is exhaustive.
    """
    costs = costs or reference_costs(c, grid_n=grid_n)
    d_wall = costs["p*:p**"]
    d_left = {"p*": costs["p*:pb(-1)"], "p**": costs["p**:pb(-1)"]}
    d_right = {"p*": costs["p*:pb(1)"], "p**": costs["p**:pb(1)"]}

    best = None
    for jumps in (0, 1, 2):
        for first in ("p*", "p**"):
            phases = [first]
            for _ in range(jumps):
                phases.append("p**" if phases[-1] == "p*" else "p*")
            total = jumps * d_wall + d_left[phases[0]] + d_right[phases[-1]]
            if best is None or total < best[0]:
                best = (total, jumps, tuple(phases))
    total, jumps, phases = best
    cuts = np.linspace(-1.0, 1.0, jumps + 2)
    intervals = tuple((float(cuts[i]), float(cuts[i + 1])) for i in range(jumps + 1))
    return LimitStructure(intervals=intervals, phases=phases, jumps=jumps, total=total)
