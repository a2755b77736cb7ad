"""Uniform 1D mesh and piecewise-linear Galerkin assembly of the channel energies.

The four-field energy on [-1, 1] is

    F = int  l1/2 (Q11'^2 + Q12'^2) + (Q11^2 + Q12^2 - 1)^2
           + xi l2/2 (M1'^2 + M2'^2) + xi/4 (M1^2 + M2^2 - 1)^2
           - c Q11 (M1^2 - M2^2) - 2 c Q12 M1 M2  dy,

with Dirichlet data Q11(-1) = M1(-1) = 1, Q11(1) = M1(1) = -1 and
Q12 = M2 = 0 at both ends.  The two-field (order reconstruction) energy is the
restriction Q12 = M2 = 0 of the same functional.

Fields are stored nodally and interleaved per node, so the Hessian is banded
with bandwidth 2 * nfields - 1.  Gradient terms are integrated exactly for
piecewise-linear fields; bulk terms use 2-point Gauss quadrature per cell.
The residual is defined as the exact gradient of the discrete energy (not a
collocation of the strong equations), so energies, residuals and stability
spectra all refer to the same discrete functional.  Dirichlet handling is by
row/column identity substitution, which preserves symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bulk import ModelParams
from .linalg import BandedMatrix

__all__ = [
    "Mesh",
    "FieldState",
    "ORState",
    "Diagnostics",
    "make_mesh",
    "energy",
    "or_energy",
    "residual",
    "jacobian",
    "diagnostics",
    "embed_or_state",
    "flip_state",
]

# 2-point Gauss nodes on the unit cell, expressed as the weight of the right
# node in the linear interpolant; weights are h/2 each.
_G2 = (0.5 * (1.0 - 1.0 / math.sqrt(3.0)), 0.5 * (1.0 + 1.0 / math.sqrt(3.0)))

PHASE_NORM_FLOOR = 1e-10  # below this |Q| or |M| the phase is undefined


@dataclass(frozen=True)
class Mesh:
    n_cells: int
    nodes: np.ndarray
    h: float


def make_mesh(n_cells: int) -> Mesh:
    """Uniform mesh of [-1, 1] with n_cells >= 2 cells."""
    if n_cells < 2:
        raise ValueError(f"need at least 2 cells, got {n_cells}")
    nodes = np.linspace(-1.0, 1.0, n_cells + 1)
    return Mesh(n_cells=n_cells, nodes=nodes, h=2.0 / n_cells)


class _NodalState:
    """Shared machinery for nodal field containers."""

    FIELDS: tuple[str, ...] = ()
    # Dirichlet data per field: (value at y = -1, value at y = +1)
    PINS: tuple[tuple[float, float], ...] = ()

    def __init__(self, mesh: Mesh, *arrays: np.ndarray):
        n = mesh.n_cells + 1
        for name, arr in zip(self.FIELDS, arrays):
            arr = np.asarray(arr, dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
            setattr(self, name, arr)
        self.mesh = mesh

    @property
    def n_fields(self) -> int:
        return len(self.FIELDS)

    def arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, name) for name in self.FIELDS)

    def copy(self):
        return type(self)(self.mesh, *(a.copy() for a in self.arrays()))

    def pin(self) -> None:
        """Overwrite the boundary nodes with the Dirichlet data."""
        for name, (lo, hi) in zip(self.FIELDS, self.PINS):
            arr = getattr(self, name)
            arr[0] = lo
            arr[-1] = hi

    def is_pinned(self, tol: float = 0.0) -> bool:
        for name, (lo, hi) in zip(self.FIELDS, self.PINS):
            arr = getattr(self, name)
            if abs(arr[0] - lo) > tol or abs(arr[-1] - hi) > tol:
                return False
        return True

    def to_vector(self) -> np.ndarray:
        nf = self.n_fields
        vec = np.empty(nf * (self.mesh.n_cells + 1))
        for f, arr in enumerate(self.arrays()):
            vec[f::nf] = arr
        return vec

    @classmethod
    def from_vector(cls, mesh: Mesh, vec: np.ndarray):
        nf = len(cls.FIELDS)
        return cls(mesh, *(vec[f::nf].copy() for f in range(nf)))

    def with_vector(self, vec: np.ndarray):
        return type(self).from_vector(self.mesh, vec)


class FieldState(_NodalState):
    """Nodal values of (Q11, Q12, M1, M2); the four-field discrete unknown."""

    FIELDS = ("q11", "q12", "m1", "m2")
    PINS = ((1.0, -1.0), (0.0, 0.0), (1.0, -1.0), (0.0, 0.0))


class ORState(_NodalState):
    """Nodal values of (Q11, M1); the two-field discrete unknown."""

    FIELDS = ("q11", "m1")
    PINS = ((1.0, -1.0), (1.0, -1.0))


@dataclass(frozen=True)
class Diagnostics:
    """Pointwise norms, continuously unwrapped phases and alignment angle."""

    q_norm: np.ndarray
    m_norm: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    twophi_minus_theta: np.ndarray
    m_unit: np.ndarray  # shape (2, n_nodes); NaN where |M| is below the floor


def _grad_coeffs(state: _NodalState, params: ModelParams) -> tuple[float, ...]:
    if isinstance(state, FieldState):
        return (params.l1, params.l1, params.xi * params.l2, params.xi * params.l2)
    return (params.l1, params.xi * params.l2)


def _gauss_values(arrays: tuple[np.ndarray, ...]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-field values at the two Gauss points of every cell."""
    out = []
    for arr in arrays:
        left, right = arr[:-1], arr[1:]
        out.append(tuple(left + t * (right - left) for t in _G2))
    return out


def _bulk_density(state, params, vals, g):
    c, xi = params.c, params.xi
    if isinstance(state, FieldState):
        q11, q12, m1, m2 = (v[g] for v in vals)
        return (
            (q11**2 + q12**2 - 1.0) ** 2
            + (xi / 4.0) * (m1**2 + m2**2 - 1.0) ** 2
            - c * q11 * (m1**2 - m2**2)
            - 2.0 * c * q12 * m1 * m2
        )
    q11, m1 = (v[g] for v in vals)
    return (q11**2 - 1.0) ** 2 + (xi / 4.0) * (m1**2 - 1.0) ** 2 - c * q11 * m1**2


def _bulk_gradient(state, params, vals, g):
    c, xi = params.c, params.xi
    if isinstance(state, FieldState):
        q11, q12, m1, m2 = (v[g] for v in vals)
        qsq = q11**2 + q12**2 - 1.0
        msq = m1**2 + m2**2 - 1.0
        return (
            4.0 * q11 * qsq - c * (m1**2 - m2**2),
            4.0 * q12 * qsq - 2.0 * c * m1 * m2,
            xi * m1 * msq - 2.0 * c * q11 * m1 - 2.0 * c * q12 * m2,
            xi * m2 * msq + 2.0 * c * q11 * m2 - 2.0 * c * q12 * m1,
        )
    q11, m1 = (v[g] for v in vals)
    return (
        4.0 * q11 * (q11**2 - 1.0) - c * m1**2,
        xi * m1 * (m1**2 - 1.0) - 2.0 * c * q11 * m1,
    )


def _bulk_hessian(state, params, vals, g):
    """Symmetric (nf, nf) block of second derivatives at Gauss point g."""
    c, xi = params.c, params.xi
    if isinstance(state, FieldState):
        q11, q12, m1, m2 = (v[g] for v in vals)
        qsq = q11**2 + q12**2 - 1.0
        msq = m1**2 + m2**2 - 1.0
        h = {}
        h[0, 0] = 4.0 * qsq + 8.0 * q11**2
        h[0, 1] = 8.0 * q11 * q12
        h[0, 2] = -2.0 * c * m1
        h[0, 3] = 2.0 * c * m2
        h[1, 1] = 4.0 * qsq + 8.0 * q12**2
        h[1, 2] = -2.0 * c * m2
        h[1, 3] = -2.0 * c * m1
        h[2, 2] = xi * msq + 2.0 * xi * m1**2 - 2.0 * c * q11
        h[2, 3] = 2.0 * xi * m1 * m2 - 2.0 * c * q12
        h[3, 3] = xi * msq + 2.0 * xi * m2**2 + 2.0 * c * q11
        return h
    q11, m1 = (v[g] for v in vals)
    return {
        (0, 0): 12.0 * q11**2 - 4.0,
        (0, 1): -2.0 * c * m1,
        (1, 1): xi * (3.0 * m1**2 - 1.0) - 2.0 * c * q11,
    }


def energy(state: FieldState | ORState, params: ModelParams) -> float:
    """Discrete energy: exact gradient terms, 2-point Gauss bulk terms."""
    h = state.mesh.h
    arrays = state.arrays()
    total = 0.0
    for coeff, arr in zip(_grad_coeffs(state, params), arrays):
        d = np.diff(arr)
        total += 0.5 * coeff * float(d @ d) / h
    vals = _gauss_values(arrays)
    for g in range(2):
        total += 0.5 * h * float(np.sum(_bulk_density(state, params, vals, g)))
    return total


def or_energy(state: ORState, params: ModelParams) -> float:
    """Two-field energy; the restriction Q12 = M2 = 0 of the full functional."""
    if not isinstance(state, ORState):
        raise TypeError("or_energy expects an ORState")
    return energy(state, params)


def residual(state: FieldState | ORState, params: ModelParams) -> np.ndarray:
    """Gradient of the discrete energy; identically zero on pinned rows."""
    mesh = state.mesh
    h = mesh.h
    arrays = state.arrays()
    nf = state.n_fields
    n = mesh.n_cells + 1
    res = np.zeros(nf * n)
    vals = _gauss_values(arrays)
    grads = [_bulk_gradient(state, params, vals, g) for g in range(2)]
    for f, (coeff, arr) in enumerate(zip(_grad_coeffs(state, params), arrays)):
        r = np.zeros(n)
        d = np.diff(arr)
        r[:-1] -= coeff * d / h
        r[1:] += coeff * d / h
        for g, t in enumerate(_G2):
            df = grads[g][f]
            r[:-1] += 0.5 * h * (1.0 - t) * df
            r[1:] += 0.5 * h * t * df
        r[0] = 0.0
        r[-1] = 0.0
        res[f::nf] = r
    return res


def jacobian(state: FieldState | ORState, params: ModelParams) -> BandedMatrix:
    """Hessian of the discrete energy as a symmetric banded matrix.

    Nodal interleaving keeps the bandwidth at 2 * nfields - 1; Dirichlet rows
    and columns are replaced by identity.
    """
    mesh = state.mesh
    h = mesh.h
    nf = state.n_fields
    nc = mesh.n_cells
    ndof = nf * (nc + 1)
    bw = 2 * nf - 1
    ab = np.zeros((2 * bw + 1, ndof))

    vals = _gauss_values(state.arrays())
    hess = [_bulk_hessian(state, params, vals, g) for g in range(2)]
    coeffs = _grad_coeffs(state, params)

    shape = {0: tuple(1.0 - t for t in _G2), 1: _G2}  # nodal shape values at the Gauss points
    for a in range(nf):
        for b in range(nf):
            blk = hess[0].get((min(a, b), max(a, b)))
            blk2 = hess[1].get((min(a, b), max(a, b)))
            if blk is None:
                continue
            for di in (0, 1):
                for dj in (0, 1):
                    cellvals = 0.5 * h * (
                        shape[di][0] * shape[dj][0] * blk
                        + shape[di][1] * shape[dj][1] * blk2
                    )
                    if a == b:
                        cellvals = cellvals + (coeffs[a] / h) * (1.0 if di == dj else -1.0)
                    row = bw + (nf * di + a) - (nf * dj + b)
                    start = nf * dj + b
                    ab[row, start::nf][:nc] += cellvals

    # Dirichlet rows/columns -> identity, preserving symmetry.
    pinned = list(range(nf)) + list(range(ndof - nf, ndof))
    for p in pinned:
        for qcol in range(max(0, p - bw), min(ndof, p + bw + 1)):
            ab[bw + p - qcol, qcol] = 0.0
        ab[:, p] = 0.0
        ab[bw, p] = 1.0
    return BandedMatrix(ab=ab, bw=bw)


def _unwrap_where_defined(raw: np.ndarray, defined: np.ndarray) -> np.ndarray:
    out = np.full(raw.shape, np.nan)
    idx = np.flatnonzero(defined)
    if idx.size:
        out[idx] = np.unwrap(raw[idx])
    return out


def diagnostics(state: FieldState) -> Diagnostics:
    """Norms, unwrapped phases (from y = -1) and the alignment angle 2 phi - theta.

    Phases are undefined (NaN) wherever the corresponding norm is below 1e-10;
    the unwrap corrects jumps larger than pi by multiples of 2 pi across the
    remaining nodes.
    """
    if isinstance(state, ORState):
        state = embed_or_state(state)
    q_norm = np.hypot(state.q11, state.q12)
    m_norm = np.hypot(state.m1, state.m2)
    q_def = q_norm >= PHASE_NORM_FLOOR
    m_def = m_norm >= PHASE_NORM_FLOOR
    theta = _unwrap_where_defined(np.arctan2(state.q12, state.q11), q_def)
    phi = _unwrap_where_defined(np.arctan2(state.m2, state.m1), m_def)
    m_unit = np.full((2, m_norm.size), np.nan)
    m_unit[0, m_def] = state.m1[m_def] / m_norm[m_def]
    m_unit[1, m_def] = state.m2[m_def] / m_norm[m_def]
    return Diagnostics(
        q_norm=q_norm,
        m_norm=m_norm,
        theta=theta,
        phi=phi,
        twophi_minus_theta=2.0 * phi - theta,
        m_unit=m_unit,
    )


def embed_or_state(state: ORState) -> FieldState:
    """Lift a two-field state into the four-field space with Q12 = M2 = 0."""
    zero = np.zeros_like(state.q11)
    return FieldState(state.mesh, state.q11.copy(), zero.copy(), state.m1.copy(), zero.copy())


def flip_state(state: FieldState) -> FieldState:
    """The symmetry partner (Q11, -Q12, M1, -M2); maps solutions to solutions."""
    return FieldState(state.mesh, state.q11.copy(), -state.q12, state.m1.copy(), -state.m2)
