"""Banded symmetric matrices in LAPACK general-band storage, with direct solves.

The assembled Hessians of the discrete energies couple only neighbouring mesh
nodes, so with nodal interleaving of the fields they are banded with a fixed
bandwidth (7 for the four-field system, 3 for the two-field one).  Storage is
the LAPACK general-band layout ab[bw + i - j, j] = A[i, j].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SingularMatrixError(RuntimeError):
    """Raised when a banded factorization encounters exact singularity."""


@dataclass
class BandedMatrix:
    ab: np.ndarray  # shape (2*bw + 1, n)
    bw: int

    @property
    def n(self) -> int:
        return self.ab.shape[1]

    def diagonal(self) -> np.ndarray:
        return self.ab[self.bw]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = np.zeros_like(x, dtype=float)
        n = self.n
        for k in range(-self.bw, self.bw + 1):
            row = self.ab[self.bw + k]
            if k >= 0:
                # entries A[j + k, j] for j = 0 .. n - 1 - k
                y[k:] += row[: n - k] * x[: n - k]
            else:
                y[: n + k] += row[-k:] * x[-k:]
        return y

    def quadratic_form(self, x: np.ndarray) -> float:
        return float(x @ self.matvec(x))

    def to_dense(self) -> np.ndarray:
        n = self.n
        dense = np.zeros((n, n))
        for k in range(-self.bw, self.bw + 1):
            row = self.ab[self.bw + k]
            if k >= 0:
                dense[np.arange(k, n), np.arange(0, n - k)] = row[: n - k]
            else:
                dense[np.arange(0, n + k), np.arange(-k, n)] = row[-k:]
        return dense

    def symmetry_defect(self) -> float:
        """max |A - A^T| over the band."""
        worst = 0.0
        n = self.n
        for k in range(1, self.bw + 1):
            lower = self.ab[self.bw + k][: n - k]   # A[j+k, j]
            upper = self.ab[self.bw - k][k:]        # A[j, j+k] stored at column j+k
            if lower.size:
                worst = max(worst, float(np.max(np.abs(lower - upper))))
        return worst

    def restrict(self, lo: int, hi: int) -> "BandedMatrix":
        """Submatrix on the contiguous index range [lo, n - hi).

        Valid only when the discarded rows/columns carry no couplings into the
        kept range (the Dirichlet rows are reduced to identity before use).
        """
        return BandedMatrix(ab=self.ab[:, lo: self.n - hi].copy(), bw=self.bw)

    def lower_band(self) -> np.ndarray:
        """Symmetric lower-band view a1[k, j] = A[j + k, j] for eig_banded."""
        return self.ab[self.bw:, :]


def banded_solve(matrix: BandedMatrix, rhs: np.ndarray) -> np.ndarray:
    """Direct banded LU solve of A x = rhs.

    Raises SingularMatrixError on exact singularity or a non-finite solve.
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != matrix.n:
        raise ValueError(f"rhs length {rhs.shape[0]} does not match matrix size {matrix.n}")
    try:
        x = scipy.linalg.solve_banded((matrix.bw, matrix.bw), matrix.ab, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("banded factorization produced non-finite values")
    return x
