"""Multi-point (tangential) Loewner realization, interpolant and direct resolvent pencil."""

from __future__ import annotations

import dataclasses
import warnings
from typing import Optional

import numpy as np
import scipy.linalg

from .core import (EPS, ContourQuadrature, EigenSolution, NlevpProblem, ProbingConfig,
                   QuadratureDataTensors, SingularEvaluationError, attach_residuals)
from .hankel import _empty
from .moments import _check_exterior
from .realize import RankPolicy, diagonalize, sort_order, truncated_svd

DEFAULT_POINT_RATIO = 4.0 / 3.0


@dataclasses.dataclass(frozen=True, eq=False)
class InterpolationScheme:
    """Left points theta_i with directions l_i, right points sigma_j with directions r_j.

    Directions are stored as coefficient matrices relative to the probes:
    ``l_i = L @ left_coeffs[:, i]`` and ``r_j = R @ right_coeffs[:, j]``.
    A pair with ``theta_i == sigma_j`` yields a Hermite (derivative) entry.
    """

    theta: np.ndarray
    sigma: np.ndarray
    left_coeffs: np.ndarray
    right_coeffs: np.ndarray

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.theta, dtype=complex))
        sg = np.atleast_1d(np.asarray(self.sigma, dtype=complex))
        lc = np.atleast_2d(np.asarray(self.left_coeffs, dtype=complex))
        rc = np.atleast_2d(np.asarray(self.right_coeffs, dtype=complex))
        if lc.shape[1] != len(th) or rc.shape[1] != len(sg):
            raise ValueError("need one direction per interpolation point")
        if len(th) != len(sg):
            raise ValueError("left and right point counts must match (square Loewner matrices)")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "sigma", sg)
        object.__setattr__(self, "left_coeffs", lc)
        object.__setattr__(self, "right_coeffs", rc)

    @property
    def r(self) -> int:
        return len(self.theta)

    @property
    def hermite_mask(self) -> np.ndarray:
        """Boolean (r x r) mask of entries with theta_i == sigma_j."""
        return self.theta[:, None] == self.sigma[None, :]

    def left_directions(self, probes: ProbingConfig) -> np.ndarray:
        return probes.L @ self.left_coeffs

    def right_directions(self, probes: ProbingConfig) -> np.ndarray:
        return probes.R @ self.right_coeffs

    def check_exterior(self, contour: ContourQuadrature) -> None:
        for p in np.unique(np.concatenate([self.theta, self.sigma])):
            _check_exterior(contour, p)

    @classmethod
    def from_directions(cls, probes: ProbingConfig, theta, sigma, left_dirs, right_dirs,
                        tol: float = 1e-10) -> "InterpolationScheme":
        """Express explicit direction vectors in the probe basis (they must lie in its span)."""
        lc = _fit(probes.L, np.asarray(left_dirs, dtype=complex), tol, "left")
        rc = _fit(probes.R, np.asarray(right_dirs, dtype=complex), tol, "right")
        return cls(theta, sigma, lc, rc)


def _fit(P, D, tol, side):
    coeffs, *_ = np.linalg.lstsq(P, D, rcond=None)
    err = np.linalg.norm(P @ coeffs - D) / max(np.linalg.norm(D), np.finfo(float).tiny)
    if err > tol:
        raise ValueError(f"{side} directions are not in the span of the probes (rel. error {err:.2e})")
    return coeffs


def default_scheme(contour: ContourQuadrature, probes: ProbingConfig, n_points: int,
                   directions: Optional[int] = None, ratio: float = DEFAULT_POINT_RATIO,
                   hermite: bool = True) -> InterpolationScheme:
    """``n_points`` equispaced points on the circle of radius ``ratio * size`` about the center.

    Every point is paired with the first ``directions`` probe columns on both
    sides, so ``r = n_points * directions``.  With ``hermite=False`` the left
    points are rotated by half a step so that theta and sigma are disjoint.
    """
    if n_points < 1:
        raise ValueError("need at least one interpolation point")
    d = min(probes.ell, probes.r) if directions is None else int(directions)
    if not 1 <= d <= min(probes.ell, probes.r):
        raise ValueError("directions per point must be between 1 and the probe count")
    rho = ratio * contour.scale
    ang = 2 * np.pi * np.arange(n_points) / n_points
    sig = contour.center + rho * np.exp(1j * ang)
    th = sig if hermite else contour.center + rho * np.exp(1j * (ang + np.pi / n_points))
    sigma = np.repeat(sig, d)
    theta = np.repeat(th, d)
    lc = np.tile(np.eye(probes.ell, d, dtype=complex), n_points)
    rc = np.tile(np.eye(probes.r, d, dtype=complex), n_points)
    return InterpolationScheme(theta, sigma, lc, rc)


@dataclasses.dataclass(frozen=True, eq=False)
class MultiPointLoewner:
    """Loewner matrix ``Lmat``, shifted Loewner matrix ``Ls`` and the one-sided samples.

    ``Ldm`` stacks the left samples ``l_i^* H(theta_i)`` (r x n_in) and
    ``Rdm`` collects the right samples ``H(sigma_j) r_j`` (n_out x r).
    """

    Lmat: np.ndarray
    Ls: np.ndarray
    Ldm: np.ndarray
    Rdm: np.ndarray
    theta: np.ndarray
    sigma: np.ndarray
    left_dirs: np.ndarray
    right_dirs: np.ndarray

    @property
    def r(self) -> int:
        return len(self.theta)


def build_multipoint_from_samples(theta, sigma, Ldm, Rdm, left_dirs, right_dirs,
                                  derivative: Optional[np.ndarray] = None) -> MultiPointLoewner:
    """Assemble the Loewner pair from tangential samples.

    ``derivative[i, j]`` must hold ``l_i^* H'(sigma_j) r_j`` wherever
    ``theta_i == sigma_j``; other entries are ignored.  The value of
    ``l_i^* H(sigma_j) r_j`` on Hermite entries is taken from ``Ldm``.
    """
    theta = np.asarray(theta, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    Ldm = np.asarray(Ldm, dtype=complex)
    Rdm = np.asarray(Rdm, dtype=complex)
    left_dirs = np.asarray(left_dirs, dtype=complex)
    right_dirs = np.asarray(right_dirs, dtype=complex)
    A = Ldm @ right_dirs            # l_i^* H(theta_i) r_j
    B = left_dirs.conj().T @ Rdm    # l_i^* H(sigma_j) r_j
    herm = theta[:, None] == sigma[None, :]
    diff = theta[:, None] - sigma[None, :]
    safe = np.where(herm, 1.0, diff)
    Lmat = (A - B) / safe
    Ls = (theta[:, None] * A - sigma[None, :] * B) / safe
    if np.any(herm):
        if derivative is None:
            raise ValueError("Hermite entries (theta_i == sigma_j) need derivative samples")
        dH = np.asarray(derivative, dtype=complex)
        Lmat[herm] = dH[herm]
        Ls[herm] = (sigma[None, :] * dH + A)[herm]
    return MultiPointLoewner(Lmat=Lmat, Ls=Ls, Ldm=Ldm, Rdm=Rdm, theta=theta, sigma=sigma,
                             left_dirs=left_dirs, right_dirs=right_dirs)


def build_multipoint(data: QuadratureDataTensors, scheme: InterpolationScheme) -> MultiPointLoewner:
    """Quadrature samples at the scheme points, then Loewner assembly."""
    c = data.contour
    scheme.check_exterior(c)
    probes = data.probes
    lc, rc = scheme.left_coeffs, scheme.right_coeffs
    if lc.shape[0] != data.ell or rc.shape[0] != data.r:
        raise ValueError("scheme coefficient matrices do not match the probe counts")
    pts, inv = np.unique(np.concatenate([scheme.theta, scheme.sigma]), return_inverse=True)
    f = c.weights[None, :] / (pts[:, None] - c.nodes[None, :])
    FL = np.einsum("pk,ank->pan", f, data.QL)     # L^* H(p)
    FR = np.einsum("pk,nbk->pnb", f, data.QR)     # H(p) R
    it, js = inv[: scheme.r], inv[scheme.r:]
    Ldm = np.einsum("ai,ian->in", lc.conj(), FL[it])
    Rdm = np.einsum("jnb,bj->nj", FR[js], rc)
    derivative = None
    herm = scheme.hermite_mask
    if np.any(herm):
        g = -c.weights[None, :] / (pts[:, None] - c.nodes[None, :]) ** 2
        D = np.einsum("pk,abk->pab", g, data.two_sided())   # L^* H'(p) R
        derivative = np.zeros((scheme.r, scheme.r), dtype=complex)
        for i, j in zip(*np.nonzero(herm)):
            derivative[i, j] = lc[:, i].conj() @ D[js[j]] @ rc[:, j]
    return build_multipoint_from_samples(scheme.theta, scheme.sigma, Ldm, Rdm,
                                         scheme.left_directions(probes),
                                         scheme.right_directions(probes), derivative)


def sylvester_residuals(lw: MultiPointLoewner):
    """Relative residuals of ``Ls - Lmat diag(sigma) = Ldm R`` and ``Ls - diag(theta) Lmat = L^* Rdm``."""
    scale = max(np.linalg.norm(lw.Ls), np.finfo(float).tiny)
    r1 = lw.Ls - lw.Lmat * lw.sigma[None, :] - lw.Ldm @ lw.right_dirs
    r2 = lw.Ls - lw.theta[:, None] * lw.Lmat - lw.left_dirs.conj().T @ lw.Rdm
    return float(np.linalg.norm(r1) / scale), float(np.linalg.norm(r2) / scale)


@dataclasses.dataclass(frozen=True, eq=False)
class _Realization:
    poles: np.ndarray
    right: np.ndarray       # Rdm Y S      (n_out x m)
    left_rows: np.ndarray   # -S^{-1} Sigma^{-1} X^* Ldm   (m x n_in)
    singular_values: np.ndarray
    flags: list


def _realize(lw: MultiPointLoewner, rank_policy: RankPolicy) -> _Realization:
    svd = truncated_svd(lw.Lmat, rank_policy)
    m = svd.rank
    if m == 0:
        return _Realization(np.zeros(0, complex), np.zeros((lw.Rdm.shape[0], 0), complex),
                            np.zeros((0, lw.Ldm.shape[1]), complex), svd.all_singular_values,
                            ["empty-spectrum"])
    B = (svd.X.conj().T @ lw.Ls @ svd.Y) / svd.s[:, None]
    lam, S, flags = diagonalize(B)
    order = sort_order(lam)
    lam, S = lam[order], S[:, order]
    right = lw.Rdm @ svd.Y @ S
    left_rows = -np.linalg.solve(S, (svd.X.conj().T @ lw.Ldm) / svd.s[:, None])
    return _Realization(lam, right, left_rows, svd.all_singular_values, flags)


def solve_multipoint(lw: MultiPointLoewner, rank_policy: RankPolicy = RankPolicy(),
                     problem: Optional[NlevpProblem] = None) -> EigenSolution:
    """Eigenpairs of ``B = Sigma^{-1} X^* Ls Y``; right eigenvectors ``Rdm Y s_j``."""
    real = _realize(lw, rank_policy)
    m = len(real.poles)
    if m == 0:
        return _empty(real.singular_values, lw.Rdm.shape[0], "loewnerN")
    sol = EigenSolution(
        eigenvalues=real.poles, right_eigenvectors=real.right, residuals=np.full(m, np.nan),
        relative_residuals=None, singular_values=real.singular_values, rank_used=m,
        method="loewnerN", left_eigenvectors=real.left_rows.conj().T, flags=real.flags,
    )
    return attach_residuals(sol, problem) if problem is not None else sol


def multipoint_eigensolver(data: QuadratureDataTensors, scheme: Optional[InterpolationScheme] = None,
                           n_points: Optional[int] = None, rank_policy: RankPolicy = RankPolicy(),
                           problem: Optional[NlevpProblem] = None) -> EigenSolution:
    if scheme is None:
        scheme = default_scheme(data.contour, data.probes, n_points or 1)
    return solve_multipoint(build_multipoint(data, scheme), rank_policy, problem)


class RationalInterpolant:
    """``G(z) = Rdm (Ls - z Lmat)^{-1} Ldm`` (possibly in projected form)."""

    def __init__(self, Ls, Lmat, Ldm, Rdm):
        self.Ls, self.Lmat, self.Ldm, self.Rdm = Ls, Lmat, Ldm, Rdm

    @property
    def order(self) -> int:
        return self.Ls.shape[0]

    def _solve(self, z, rhs):
        M = self.Ls - complex(z) * self.Lmat
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
        if np.min(np.abs(np.diag(lu))) <= EPS * max(np.max(np.abs(np.diag(lu))), 1e-300):
            raise SingularEvaluationError(z, "Ls - z Lmat is singular (z is a pole)")
        return lu, piv

    def __call__(self, z: complex) -> np.ndarray:
        lu, piv = self._solve(z, None)
        return self.Rdm @ scipy.linalg.lu_solve((lu, piv), self.Ldm)

    def derivative(self, z: complex) -> np.ndarray:
        lu, piv = self._solve(z, None)
        inner = scipy.linalg.lu_solve((lu, piv), self.Ldm)
        return self.Rdm @ scipy.linalg.lu_solve((lu, piv), self.Lmat @ inner)

    def poles(self) -> np.ndarray:
        lam = scipy.linalg.eigvals(self.Ls, self.Lmat)
        lam = lam[np.isfinite(lam)]
        return lam[sort_order(lam)]


def build_interpolant_rom(lw: MultiPointLoewner,
                          rank_policy: Optional[RankPolicy] = None) -> RationalInterpolant:
    """Full interpolant when ``rank_policy`` is None, otherwise the SVD-truncated form
    ``(Rdm Y)(X^* Ls Y - z Sigma)^{-1}(X^* Ldm)``."""
    if rank_policy is None:
        return RationalInterpolant(lw.Ls, lw.Lmat, lw.Ldm, lw.Rdm)
    svd = truncated_svd(lw.Lmat, rank_policy)
    Xh = svd.X.conj().T
    return RationalInterpolant(Xh @ lw.Ls @ svd.Y, np.diag(svd.s).astype(complex),
                               Xh @ lw.Ldm, lw.Rdm @ svd.Y)


def pole_residue_form(lw: MultiPointLoewner, rank_policy: RankPolicy = RankPolicy()):
    """Return ``(poles, C, Bt)`` with ``G(z) = C (zI - diag(poles))^{-1} Bt``."""
    real = _realize(lw, rank_policy)
    return real.poles, real.right, real.left_rows


@dataclasses.dataclass(frozen=True, eq=False)
class DirectPencil:
    """Pencil (A_hat, E_hat) with ``E_hat = -Lmat``, ``A_hat = -Ls``, ``C_hat = Rdm``."""

    A_hat: np.ndarray
    E_hat: np.ndarray
    B_hat: np.ndarray
    C_hat: np.ndarray
    solution: EigenSolution


def direct_resolvent_pencil(problem: NlevpProblem, scheme: InterpolationScheme,
                            probes: ProbingConfig, keep_infinite: bool = False) -> DirectPencil:
    """Loewner pencil built from exact resolvent samples ``T(p)^{-1}`` (no contour).

    The eigenvalues approximate those of T near the sample points; infinite
    eigenvalues of the pencil are discarded and counted in ``dropped``.
    """
    if np.any(scheme.hermite_mask):
        raise ValueError("direct resolvent pencil needs disjoint left and right points")
    ldirs = scheme.left_directions(probes)
    rdirs = scheme.right_directions(probes)
    r = scheme.r
    Ldm = np.empty((r, problem.dim), dtype=complex)
    Rdm = np.empty((problem.dim, r), dtype=complex)
    for p in np.unique(np.concatenate([scheme.theta, scheme.sigma])):
        fac = problem.factor(p)
        li = np.flatnonzero(scheme.theta == p)
        rj = np.flatnonzero(scheme.sigma == p)
        if len(li):
            Ldm[li] = fac.solve_adjoint(ldirs[:, li]).conj().T
        if len(rj):
            Rdm[:, rj] = fac.solve(rdirs[:, rj])
    lw = build_multipoint_from_samples(scheme.theta, scheme.sigma, Ldm, Rdm, ldirs, rdirs)
    A_hat, E_hat = -lw.Ls, -lw.Lmat
    w, V = scipy.linalg.eig(A_hat, E_hat, homogeneous_eigvals=True)
    alpha, beta = w
    na, ne = np.linalg.norm(A_hat), np.linalg.norm(E_hat)
    finite = np.abs(beta) * na > 1e3 * EPS * np.abs(alpha) * ne
    if keep_infinite:
        finite = np.ones_like(finite)
    lam = alpha[finite] / beta[finite]
    vecs = lw.Rdm @ V[:, finite]
    order = sort_order(lam)
    lam, vecs = lam[order], vecs[:, order]
    dropped = int(np.sum(~finite))
    flags = [f"infinite-eigenvalues={dropped}"] if dropped else []
    sol = EigenSolution(
        eigenvalues=lam, right_eigenvectors=vecs, residuals=np.full(len(lam), np.nan),
        relative_residuals=None, singular_values=scipy.linalg.svdvals(lw.Lmat),
        rank_used=len(lam), method="direct", flags=flags, dropped=dropped, approximate=True,
    )
    if len(lam):
        sol = attach_residuals(sol, problem)
    return DirectPencil(A_hat=A_hat, E_hat=E_hat, B_hat=lw.Ldm, C_hat=lw.Rdm, solution=sol)
