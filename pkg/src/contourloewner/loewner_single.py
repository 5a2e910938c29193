"""Single-point Loewner realization from sigma-moments at one exterior point."""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from .core import ContourQuadrature, EigenSolution, NlevpProblem, QuadratureDataTensors, \
    attach_residuals
from .hankel import OneSidedData, _empty
from .moments import MomentSet, sigma_moments
from .realize import RankPolicy, diagonalize, sort_order, truncated_svd

# default expansion point distance from the center, in units of the contour size
DEFAULT_SIGMA_RATIO = 4.0 / 3.0


@dataclasses.dataclass(frozen=True, eq=False)
class SinglePointPencil:
    """``Lmat = [M_{i+j+1}]``, ``L0 = [M_{i+j}]`` and ``Ls = sigma Lmat + L0``.

    When the moments were scaled by s, ``Ls = (sigma/s) Lmat + L0`` and the
    pencil eigenvalues are multiplied by s on extraction.
    """

    Lmat: np.ndarray
    L0: np.ndarray
    Ls: np.ndarray
    one_sided: OneSidedData
    sigma: complex
    K: int
    scale: float = 1.0


def default_sigma(contour: ContourQuadrature) -> complex:
    """Exterior point on the positive real side, 4/3 of the contour size from the center."""
    return complex(contour.center + DEFAULT_SIGMA_RATIO * contour.scale)


def _block_matrix(blocks, K, offset):
    return np.block([[blocks[i + j + offset] for j in range(K)] for i in range(K)])


def build_single_point_pencil(moments: MomentSet, K: int) -> SinglePointPencil:
    if moments.kind != "sigma":
        raise ValueError("single-point Loewner pencil needs sigma-moments")
    if K < 1:
        raise ValueError("K must be at least 1")
    if moments.K_max < 2 * K - 1:
        raise ValueError(f"need moments up to order {2 * K - 1}, have {moments.K_max}")
    sigma, s = moments.point, moments.scale
    Lmat = _block_matrix(moments.two_sided, K, 1)
    L0 = _block_matrix(moments.two_sided, K, 0)
    one = OneSidedData(
        Bdata=np.vstack([moments.left_blocks[k] for k in range(K)]),
        Cdata=np.hstack([moments.right_blocks[k] for k in range(K)]),
    )
    return SinglePointPencil(Lmat=Lmat, L0=L0, Ls=(sigma / s) * Lmat + L0, one_sided=one,
                             sigma=sigma, K=K, scale=s)


def solve_single_point(pencil: SinglePointPencil, rank_policy: RankPolicy = RankPolicy(),
                       problem: Optional[NlevpProblem] = None) -> EigenSolution:
    """Eigenpairs of ``B = Sigma^{-1} X^* Ls Y`` with ``Lmat = X Sigma Y^*`` truncated.

    Right eigenvectors are ``Cdata Y s_j``; left eigenvectors are the rows of
    ``S^{-1} Sigma^{-1} X^* Bdata``.
    """
    svd = truncated_svd(pencil.Lmat, rank_policy)
    m = svd.rank
    n = pencil.one_sided.Cdata.shape[0]
    if m == 0:
        return _empty(svd.all_singular_values, n, "loewner1")
    B = (svd.X.conj().T @ pencil.Ls @ svd.Y) / svd.s[:, None]
    mu, S, flags = diagonalize(B)
    lam = pencil.scale * mu
    order = sort_order(lam)
    lam, S = lam[order], S[:, order]
    right = pencil.one_sided.Cdata @ svd.Y @ S
    left_rows = np.linalg.solve(S, (svd.X.conj().T @ pencil.one_sided.Bdata) / svd.s[:, None])
    sol = EigenSolution(
        eigenvalues=lam, right_eigenvectors=right, residuals=np.full(m, np.nan),
        relative_residuals=None, singular_values=svd.all_singular_values, rank_used=m,
        method="loewner1", left_eigenvectors=left_rows.conj().T, flags=flags,
    )
    return attach_residuals(sol, problem) if problem is not None else sol


def single_point_eigensolver(data: QuadratureDataTensors, K: int, sigma: Optional[complex] = None,
                             rank_policy: RankPolicy = RankPolicy(),
                             problem: Optional[NlevpProblem] = None,
                             normalize: bool = True) -> EigenSolution:
    """Sigma-moments, pencil assembly and realization in one call.

    With ``normalize`` the moments are scaled by the distance from sigma to
    the contour center, which keeps the pencil blocks of comparable size.
    """
    sigma = default_sigma(data.contour) if sigma is None else complex(sigma)
    scale = abs(sigma - data.contour.center) if normalize else 1.0
    moments = sigma_moments(data, sigma, 2 * K - 1, scale=scale)
    return solve_single_point(build_single_point_pencil(moments, K), rank_policy, problem)
