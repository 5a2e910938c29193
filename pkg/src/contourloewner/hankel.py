"""Block Hankel (Markov-moment) realization of the rational part H(z)."""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from .core import (ContourQuadrature, EigenSolution, NlevpProblem, QuadratureDataTensors,
                   attach_residuals)
from .moments import MomentSet, markov_moments
from .realize import (RankPolicy, SingularValueReport, diagonalize, singular_value_report_for,
                      sort_order, truncated_svd)


@dataclasses.dataclass(frozen=True, eq=False)
class BlockHankelPair:
    """``H = [A_{i+j}]`` and ``Hs = [A_{i+j+1}]`` for block indices 0..K-1."""

    H: np.ndarray
    Hs: np.ndarray
    K: int
    shift: complex = 0j
    scale: float = 1.0


@dataclasses.dataclass(frozen=True, eq=False)
class OneSidedData:
    """``Bdata = [L^* A_0; ...; L^* A_{K-1}]`` (K ell x n) and ``Cdata = [A_0 R, ..., A_{K-1} R]`` (n x K r)."""

    Bdata: np.ndarray
    Cdata: np.ndarray


def _block_matrix(blocks: np.ndarray, K: int, offset: int) -> np.ndarray:
    return np.block([[blocks[i + j + offset] for j in range(K)] for i in range(K)])


def build_hankel(moments: MomentSet, K: int):
    """Assemble the block Hankel pair and the one-sided data from moments 0..2K-1."""
    if moments.kind != "markov":
        raise ValueError("block Hankel realization needs Markov moments")
    if K < 1:
        raise ValueError("K must be at least 1")
    if moments.K_max < 2 * K - 1:
        raise ValueError(f"need moments up to order {2 * K - 1}, have {moments.K_max}")
    pair = BlockHankelPair(
        H=_block_matrix(moments.two_sided, K, 0),
        Hs=_block_matrix(moments.two_sided, K, 1),
        K=K, shift=moments.shift, scale=moments.scale,
    )
    one = OneSidedData(
        Bdata=np.vstack([moments.left_blocks[k] for k in range(K)]),
        Cdata=np.hstack([moments.right_blocks[k] for k in range(K)]),
    )
    return pair, one


def singular_value_report(pair: BlockHankelPair,
                          rank_policy: RankPolicy = RankPolicy()) -> SingularValueReport:
    return singular_value_report_for(pair.H, rank_policy)


def solve_hankel(pair: BlockHankelPair, one_sided: OneSidedData,
                 rank_policy: RankPolicy = RankPolicy(),
                 problem: Optional[NlevpProblem] = None) -> EigenSolution:
    """Eigenpairs from ``B = X^* Hs Y Sigma^{-1}`` after a truncated SVD of H.

    Right eigenvectors are the columns of ``Cdata Y Sigma^{-1} S`` and left
    eigenvectors the (conjugated) rows of ``S^{-1} X^* Bdata``.
    """
    svd = truncated_svd(pair.H, rank_policy)
    m = svd.rank
    if m == 0:
        return _empty(svd.all_singular_values, one_sided.Cdata.shape[0], "hankel")
    B = (svd.X.conj().T @ pair.Hs @ svd.Y) / svd.s[None, :]
    mu, S, flags = diagonalize(B)
    order = sort_order(pair.shift + pair.scale * mu)
    mu, S = mu[order], S[:, order]
    lam = pair.shift + pair.scale * mu
    right = one_sided.Cdata @ (svd.Y / svd.s[None, :]) @ S
    left_rows = np.linalg.solve(S, svd.X.conj().T @ one_sided.Bdata)
    sol = EigenSolution(
        eigenvalues=lam, right_eigenvectors=right,
        residuals=np.full(m, np.nan), relative_residuals=None,
        singular_values=svd.all_singular_values, rank_used=m, method="hankel",
        left_eigenvectors=left_rows.conj().T, flags=flags,
    )
    return attach_residuals(sol, problem) if problem is not None else sol


def _empty(s, n, method) -> EigenSolution:
    return EigenSolution(
        eigenvalues=np.zeros(0, complex), right_eigenvectors=np.zeros((n, 0), complex),
        residuals=np.zeros(0), relative_residuals=None, singular_values=s, rank_used=0,
        method=method, left_eigenvectors=np.zeros((n, 0), complex), flags=["empty-spectrum"],
    )


def hankel_eigensolver(data: QuadratureDataTensors, K: int,
                       rank_policy: RankPolicy = RankPolicy(),
                       problem: Optional[NlevpProblem] = None,
                       normalize: bool = True) -> EigenSolution:
    """Moments, Hankel assembly and realization in one call.

    With ``normalize`` the moments use the variable ``(z - center) / size`` of
    the contour, which keeps high-order blocks well scaled.
    """
    contour: ContourQuadrature = data.contour
    shift, scale = (contour.center, contour.scale) if normalize else (0.0, 1.0)
    moments = markov_moments(data, 2 * K - 1, shift=shift, scale=scale)
    pair, one = build_hankel(moments, K)
    return solve_hankel(pair, one, rank_policy, problem)
