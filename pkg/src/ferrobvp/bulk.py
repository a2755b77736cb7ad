"""Homogeneous (bulk) critical points of the coupled nematic-magnetic potential.

Writing the two order parameters in polar form, Q = rho (cos theta, sin theta)
and M = sigma (cos phi, sin phi), the bulk energy density is

    f(rho, sigma, theta, phi) = (rho^2 - 1)^2 + (xi/4) (sigma^2 - 1)^2
                                - c rho sigma^2 cos(2 phi - theta).

Stationarity forces 2 phi - theta onto integer multiples of pi and reduces the
critical-point equations to a pair of depressed cubics,

    rho^3 - rho (1 + c^2 / (2 xi)) - c/4 = 0    (2 phi - theta even multiple),
    rho^3 - rho (1 + c^2 / (2 xi)) + c/4 = 0    (2 phi - theta odd multiple),

solved in closed form by the Cardano construction with complex cube roots
taken in the principal branch (De Moivre).  The magnitude of M then follows
from sigma^2 = 1 + 2 c rho / xi (even) or sigma^2 = 1 - 2 c rho / xi (odd).

The largest root of the even cubic, rho_star(c), bounds every solution of the
boundary-value problem: |Q|^2 <= rho_star^2 and |M|^2 <= 1 + 2 c rho_star
pointwise.  The same pair (rho_star, sqrt(1 + 2 c rho_star)) minimises both
the full bulk density and its two-field restriction, which supplies the shift
constants alpha(c) and beta(c) used to build the nonnegative potentials that
drive the small-l analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

__all__ = [
    "ModelParams",
    "CubicRoots",
    "BulkCriticalPoint",
    "BulkMinimumInfo",
    "bulk_energy",
    "solve_branch_cubic",
    "bulk_critical_points",
    "global_minimiser",
    "rho_star",
    "asymptotic_minimiser",
    "bulk_minimum_info",
]

Parity = Literal["even", "odd"]

# Cube roots of unity, indexed 1..3 as omega_1 = 1, omega_2/3 = (-1 +/- sqrt(3) i)/2.
_OMEGA = (
    1.0 + 0.0j,
    (-1.0 + 1j * math.sqrt(3.0)) / 2.0,
    (-1.0 - 1j * math.sqrt(3.0)) / 2.0,
)

_REALNESS_TOL = 1e-10  # max tolerated imaginary residue of a "real" root
_SIGMA_CLAMP = 1e-12   # radicand of sigma^2 may undershoot zero by this much


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model constants.

    l1, l2 are the scaled elastic constants (inversely proportional to the
    squared channel width), c the nemato-magnetic coupling and xi the relative
    strength of the magnetic energy.  All experiments in this package fix
    xi = 1; the code keeps it general.
    """

    l1: float
    l2: float
    c: float
    xi: float = 1.0

    def __post_init__(self):
        if not (self.l1 > 0 and self.l2 > 0):
            raise ValueError(f"elastic constants must be positive, got l1={self.l1}, l2={self.l2}")
        if not self.xi > 0:
            raise ValueError(f"relative-strength constant must be positive, got xi={self.xi}")
        if not self.c >= 0:
            raise ValueError(f"coupling constant must be nonnegative, got c={self.c}")

    @classmethod
    def isotropic(cls, l: float, c: float, xi: float = 1.0) -> "ModelParams":
        """Common l1 = l2 = l case used throughout the experiments."""
        return cls(l1=l, l2=l, c=c, xi=xi)


@dataclass(frozen=True)
class CubicRoots:
    """Real roots of one parity branch of the reduced cubic.

    ``roots[i]`` is the real root built on the cube-root-of-unity index
    ``branch_index[i]`` (1-based, omega_1 = 1).  ``theta_terms`` holds the two
    principal complex cube roots whose omega-weighted sums generate all roots;
    ``radicand`` is c^2/64 - (1/27)(1 + c^2/(2 xi))^3, negative exactly when
    all three branches are real.
    """

    parity: Parity
    roots: tuple[float, ...]
    radicand: float
    theta_terms: tuple[complex, complex]
    branch_index: tuple[int, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class BulkCriticalPoint:
    rho: float
    sigma: float
    parity: str  # "even" | "odd" | "undetermined"
    energy: float
    label: str   # "trivial-zero" | "trivial-nematic" | "coupled-branch-<k>"


@dataclass(frozen=True)
class BulkMinimumInfo:
    """Shift constants and pointwise-bound data at xi = 1.

    alpha is the minimum of the full bulk density, beta the minimum of its
    two-field restriction, rho_star the largest root of the even cubic and
    m_bound_sq = 1 + 2 c rho_star the squared magnetisation bound.
    """

    alpha: float
    beta: float
    rho_star: float
    m_bound_sq: float


def bulk_energy(rho, sigma, theta, phi, params: ModelParams):
    """Bulk energy density in polar variables.  Total function; broadcasts."""
    rho = np.asarray(rho, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    val = (
        (rho**2 - 1.0) ** 2
        + (params.xi / 4.0) * (sigma**2 - 1.0) ** 2
        - params.c * rho * sigma**2 * np.cos(2.0 * np.asarray(phi) - np.asarray(theta))
    )
    return float(val) if val.ndim == 0 else val


def _principal_cbrt(z: complex) -> complex:
    """Cube root via De Moivre's formula.

    Real arguments take the real cube root (negative reals included): the two
    cube-root terms must multiply to the real constant (1 + c^2/(2 xi))/3, and
    the principal branch of a negative real would break that pairing.
    """
    r = abs(z)
    if r == 0.0:
        return 0.0j
    if z.imag == 0.0:
        return complex(math.copysign(abs(z.real) ** (1.0 / 3.0), z.real), 0.0)
    return r ** (1.0 / 3.0) * complex(math.cos(math.atan2(z.imag, z.real) / 3.0),
                                      math.sin(math.atan2(z.imag, z.real) / 3.0))


def _cubic_value(rho: float, a: float, q: float) -> float:
    return rho**3 - a * rho + q


def _polish_root(rho: float, a: float, q: float, steps: int = 2) -> float:
    # One or two Newton corrections absorb the rounding of the Cardano
    # evaluation (the radicand loses digits near zero).
    for _ in range(steps):
        deriv = 3.0 * rho * rho - a
        if deriv == 0.0:
            break
        rho = rho - _cubic_value(rho, a, q) / deriv
    return rho


def solve_branch_cubic(params: ModelParams, parity: Parity) -> CubicRoots:
    """All real roots of rho^3 - rho (1 + c^2/(2 xi)) -/+ c/4 = 0.

    The even parity carries the constant -c/4, the odd parity +c/4.  Roots are
    produced as omega_k T1 + omega_k^2 T2 over the cube roots of unity; the
    pairing is fixed by omega_j omega_k = 1.  A root is accepted as real when
    its imaginary residue is below 1e-10, then polished on the real cubic.
    """
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    c, xi = params.c, params.xi
    a = 1.0 + c * c / (2.0 * xi)
    radicand = c * c / 64.0 - (a / 3.0) ** 3
    root_term = np.sqrt(complex(radicand))
    s = c / 8.0 if parity == "even" else -c / 8.0
    q = -c / 4.0 if parity == "even" else c / 4.0
    t1 = _principal_cbrt(s + root_term)
    t2 = _principal_cbrt(s - root_term)

    roots: list[float] = []
    branch: list[int] = []
    for k, w in enumerate(_OMEGA, start=1):
        z = w * t1 + w * w * t2
        if abs(z.imag) <= _REALNESS_TOL:
            roots.append(_polish_root(z.real, a, q))
            branch.append(k)
    return CubicRoots(
        parity=parity,
        roots=tuple(roots),
        radicand=radicand,
        theta_terms=(t1, t2),
        branch_index=tuple(branch),
    )


def bulk_critical_points(params: ModelParams) -> list[BulkCriticalPoint]:
    """Enumerate the nonnegative critical pairs (rho, sigma) of the bulk density.

    Returns the two trivial branches (0, 0) and (1, 0), which exist for every
    coupling, plus every coupled branch whose rho is real and nonnegative and
    whose sigma^2 radicand is nonnegative (within a 1e-12 clamp).  Coupled
    branches carry theta = 0 and phi = 0 (even) or phi = pi/2 (odd), so the
    energy is evaluated with cos(2 phi - theta) = +/- 1.
    """
    c, xi = params.c, params.xi
    points = [
        BulkCriticalPoint(0.0, 0.0, "undetermined", bulk_energy(0.0, 0.0, 0.0, 0.0, params), "trivial-zero"),
        BulkCriticalPoint(1.0, 0.0, "undetermined", bulk_energy(1.0, 0.0, 0.0, 0.0, params), "trivial-nematic"),
    ]
    for parity, sign in (("even", 1.0), ("odd", -1.0)):
        cubic = solve_branch_cubic(params, parity)
        for k, rho in zip(cubic.branch_index, cubic.roots):
            if rho < 0.0:
                continue
            sigma_sq = 1.0 + sign * 2.0 * c * rho / xi
            if sigma_sq < -_SIGMA_CLAMP:
                continue
            sigma = math.sqrt(max(sigma_sq, 0.0))
            energy = (rho**2 - 1.0) ** 2 + (xi / 4.0) * (sigma_sq - 1.0) ** 2 - sign * c * rho * sigma_sq
            points.append(BulkCriticalPoint(rho, sigma, parity, energy, f"coupled-branch-{k}"))
    return points


def global_minimiser(params: ModelParams) -> BulkCriticalPoint:
    """Lowest-energy bulk critical point; ties broken toward larger rho."""
    return min(bulk_critical_points(params), key=lambda p: (p.energy, -p.rho))


def rho_star(c: float) -> float:
    """Largest real root of rho^3 - rho (1 + c^2/2) - c/4 (the xi = 1 cubic).

    This is the pointwise bound on |Q| for every solution of the
    boundary-value problem; rho_star(0) = 1 and rho_star is nondecreasing.
    """
    if c < 0:
        raise ValueError(f"coupling must be nonnegative, got c={c}")
    params = ModelParams(l1=1.0, l2=1.0, c=c, xi=1.0)
    roots = solve_branch_cubic(params, "even").roots
    return max(roots)


def asymptotic_minimiser(c: float, regime: Literal["small", "large"]) -> tuple[float, float]:
    """Leading-order (rho, sigma^2) of the minimising branch.

    Small coupling: rho = 1 + c/8, sigma^2 = 1 + 2c + c^2/4.
    Large coupling: rho = (sqrt(2)/4)^(1/3) c, sigma^2 = 1 + sqrt(2) c^2.
    """
    if regime == "small":
        return 1.0 + c / 8.0, 1.0 + 2.0 * c + c * c / 4.0
    if regime == "large":
        return (math.sqrt(2.0) / 4.0) ** (1.0 / 3.0) * c, 1.0 + math.sqrt(2.0) * c * c
    raise ValueError(f"regime must be 'small' or 'large', got {regime!r}")


def bulk_minimum_info(c: float) -> BulkMinimumInfo:
    """Shift constants for the nonnegative potentials at xi = 1.

    alpha(c) is computed by direct minimisation over the enumerated critical
    points; beta(c) evaluates the two-field bulk density at
    (rho_star, sqrt(1 + 2 c rho_star)).
    """
    params = ModelParams(l1=1.0, l2=1.0, c=c, xi=1.0)
    alpha = min(p.energy for p in bulk_critical_points(params))
    rs = rho_star(c)
    m_sq = 1.0 + 2.0 * c * rs
    beta = (rs**2 - 1.0) ** 2 + (m_sq - 1.0) ** 2 / 4.0 - c * rs * m_sq
    return BulkMinimumInfo(alpha=alpha, beta=beta, rho_star=rs, m_bound_sq=m_sq)
