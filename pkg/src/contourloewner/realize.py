"""Rank-revealing SVD and small dense eigen-decomposition shared by all realizations."""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np
import scipy.linalg

# eigenvector matrices of the reduced pencil above this condition number are flagged
DEFECTIVE_COND = 1e8


@dataclasses.dataclass(frozen=True)
class RankPolicy:
    """Numerical rank: keep s_i > max(rel_tol * s_1, abs_floor), unless ``rank`` is forced."""

    rel_tol: float = 1e-10
    abs_floor: float = 1e-13
    rank: Optional[int] = None

    def __post_init__(self):
        if self.rel_tol < 0 or self.abs_floor < 0:
            raise ValueError("rank tolerances must be nonnegative")
        if self.rank is not None and self.rank < 0:
            raise ValueError("forced rank must be nonnegative")

    def select(self, s: np.ndarray) -> int:
        s = np.asarray(s, dtype=float)
        if self.rank is not None:
            return min(self.rank, len(s))
        if len(s) == 0 or s[0] == 0:
            return 0
        cut = max(self.rel_tol * s[0], self.abs_floor)
        return int(np.sum(s > cut))


@dataclasses.dataclass(frozen=True, eq=False)
class TruncatedSVD:
    X: np.ndarray  # left singular vectors, (rows, m)
    s: np.ndarray  # retained singular values, (m,)
    Y: np.ndarray  # right singular vectors, (cols, m)
    all_singular_values: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.s)


def truncated_svd(M: np.ndarray, policy: RankPolicy) -> TruncatedSVD:
    U, s, Vh = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
    m = policy.select(s)
    return TruncatedSVD(X=U[:, :m], s=s[:m], Y=Vh[:m].conj().T, all_singular_values=s)


@dataclasses.dataclass(frozen=True)
class SingularValueReport:
    """Singular values, the chosen rank and consecutive ratios s_{i+1}/s_i."""

    singular_values: np.ndarray
    rank: int
    gap_ratios: np.ndarray

    @property
    def largest_gap(self) -> int:
        """Index i (1-based count) after which the largest relative drop occurs."""
        if len(self.gap_ratios) == 0:
            return len(self.singular_values)
        return int(np.argmin(self.gap_ratios)) + 1


def singular_value_report_for(M: np.ndarray, policy: RankPolicy) -> SingularValueReport:
    s = scipy.linalg.svdvals(M)
    with np.errstate(divide="ignore", invalid="ignore"):
        gaps = np.where(s[:-1] > 0, s[1:] / np.where(s[:-1] > 0, s[:-1], 1), 0.0)
    return SingularValueReport(singular_values=s, rank=policy.select(s), gap_ratios=gaps)


def sort_order(values: np.ndarray) -> np.ndarray:
    """Stable ordering by ascending real part, then imaginary part."""
    values = np.asarray(values)
    return np.lexsort((values.imag, values.real))


def diagonalize(B: np.ndarray):
    """Eigen-decompose a small dense matrix.

    Returns ``(lam, S, flags)`` with ``B S = S diag(lam)``; ``flags`` notes an
    ill-conditioned (near-defective) eigenvector basis.
    """
    flags = []
    if B.shape[0] == 0:
        return np.zeros(0, complex), np.zeros((0, 0), complex), flags
    lam, S = scipy.linalg.eig(B)
    cond = np.linalg.cond(S)
    if not cond < DEFECTIVE_COND:
        flags.append(f"ill-conditioned-eigenvectors (cond={cond:.3g})")
    return lam.astype(complex), S.astype(complex), flags


def collinearity(u: np.ndarray, v: np.ndarray) -> float:
    """|u^* v| / (||u|| ||v||), equal to one when the vectors are parallel."""
    return float(abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))


def match_eigenvalues(computed, reference):
    """Optimal one-to-one matching (Hungarian) of computed to reference values.

    Returns ``(rows, cols, errors)`` with ``computed[rows[i]]`` paired to
    ``reference[cols[i]]``.
    """
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(computed, dtype=complex).ravel()
    b = np.asarray(reference, dtype=complex).ravel()
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return rows, cols, cost[rows, cols]
