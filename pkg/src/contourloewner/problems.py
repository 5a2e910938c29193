"""Benchmark problems and ground-truth oracles.

* :class:`DelayProblem` -- the diagonal delay eigenproblem
  ``T(z) = z I + c exp(-tau z) I - E0``.
* :class:`PlantedProblem` -- a synthetic problem defined through its resolvent
  ``T(z)^{-1} = V (zI - Lam)^{-1} W^* + N(z)``, so every contour quantity has a
  closed form.
* scalar and matrix-polynomial toys, and a Matrix Market based combiner for
  problems of the form ``sum_t f_t(z) A_t``.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import warnings
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.io
import scipy.linalg

from .core import (EPS, ContourQuadrature, DenseProblem, Factorization, NlevpProblem,
                   ProbingConfig, SingularEvaluationError)
from .moments import MomentSet

# ---------------------------------------------------------------------------
# delay problem


class _DiagonalFactor(Factorization):
    def __init__(self, d: np.ndarray):
        self.d = d

    def solve(self, B):
        B = np.asarray(B)
        return B / (self.d[:, None] if B.ndim == 2 else self.d)

    def solve_adjoint(self, B):
        B = np.asarray(B)
        dc = self.d.conj()
        return B / (dc[:, None] if B.ndim == 2 else dc)


class DelayProblem(NlevpProblem):
    """``T(z) = z I + c exp(-tau z) I - diag(e_values)``; every component decouples."""

    def __init__(self, c: float, tau: float, e_values: Sequence[float]):
        self.c = float(c)
        self.tau = float(tau)
        self.e_values = np.asarray(e_values, dtype=complex)
        self.dim = len(self.e_values)

    def diagonal(self, z: complex) -> np.ndarray:
        z = complex(z)
        return z + self.c * np.exp(-self.tau * z) - self.e_values

    def matrix(self, z):
        return np.diag(self.diagonal(z))

    def apply(self, z, V):
        V = np.asarray(V, dtype=complex)
        d = self.diagonal(z)
        return d[:, None] * V if V.ndim == 2 else d * V

    def apply_derivative(self, z, V):
        V = np.asarray(V, dtype=complex)
        d = np.full(self.dim, 1.0 - self.c * self.tau * np.exp(-self.tau * complex(z)))
        return d[:, None] * V if V.ndim == 2 else d * V

    def factor(self, z):
        z = complex(z)
        d = self.diagonal(z)
        size = abs(z) + abs(self.c * np.exp(-self.tau * z)) + np.abs(self.e_values)
        bad = np.abs(d) <= 64 * EPS * size
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise SingularEvaluationError(z, f"component {i} vanishes")
        return _DiagonalFactor(d)


def make_delay_problem(c: float = 0.015, tau: float = 8.0, n: int = 50,
                       e_min_mag: float = 1e-4, e_max_mag: float = 1e10) -> DelayProblem:
    """E0 has eigenvalues ``-logspace(log10 e_min_mag, log10 e_max_mag, n)``."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < e_min_mag <= e_max_mag:
        raise ValueError("need 0 < e_min_mag <= e_max_mag")
    e = -np.logspace(np.log10(e_min_mag), np.log10(e_max_mag), n)
    return DelayProblem(c, tau, e)


@dataclasses.dataclass(frozen=True)
class DelayOracle:
    """Roots of the delay problem in a disk, with the component each belongs to."""

    eigenvalues: np.ndarray
    components: np.ndarray
    counts: np.ndarray
    mismatched: tuple

    def eigenvectors(self, n: int) -> np.ndarray:
        V = np.zeros((n, len(self.components)), dtype=complex)
        V[self.components, np.arange(len(self.components))] = 1.0
        return V


def _winding_count(f: Callable, center: complex, radius: float, samples: int = 4096) -> int:
    t = 2 * np.pi * np.arange(samples + 1) / samples
    vals = f(center + radius * np.exp(1j * t))
    phase = np.unwrap(np.angle(vals))
    return int(round((phase[-1] - phase[0]) / (2 * np.pi)))


def _newton(f, df, z0, maxit=200, tol=1e-15):
    # far-left trial steps overflow exp(-tau z); those are rejected by the line search
    with np.errstate(over="ignore", invalid="ignore"):
        return _damped_newton(f, df, z0, maxit, tol)


def _damped_newton(f, df, z0, maxit, tol):
    z = complex(z0)
    fz = f(z)
    for _ in range(maxit):
        d = df(z)
        if d == 0 or not np.isfinite(fz):
            return z, np.inf
        step = fz / d
        lam = 1.0
        while lam > 1e-6:
            zn = z - lam * step
            fn = f(zn)
            if np.isfinite(fn) and abs(fn) < abs(fz) or abs(fn) == abs(fz) == 0:
                break
            lam /= 2
        else:
            return z, abs(fz)
        if abs(zn - z) <= tol * max(1.0, abs(zn)):
            return zn, abs(fn)
        z, fz = zn, fn
    return z, abs(fz)


def delay_eigen_oracle(problem: DelayProblem, center: complex, radius: float,
                       residual_tol: float = 1e-12, dedupe_tol: float = 1e-12,
                       seed: int = 0) -> DelayOracle:
    """All roots of ``z + c exp(-tau z) - e_i`` inside the closed disk, for every i.

    Roots are found by damped Newton from a polar grid of starting points; the
    expected count per component comes from the argument principle on the
    circle, and components whose count is not matched are reported.
    """
    c, tau = problem.c, problem.tau
    center = complex(center)
    rng = np.random.default_rng(seed)
    starts = [center]
    for rr in (0.2, 0.4, 0.6, 0.8, 0.95):
        starts.extend(center + rr * radius * np.exp(2j * np.pi * (np.arange(16) + 0.5 * rr) / 16))
    lams, comps, counts, bad = [], [], [], []
    for i, e in enumerate(problem.e_values):
        f = lambda z, e=e: z + c * np.exp(-tau * z) - e
        df = lambda z: 1.0 - c * tau * np.exp(-tau * z)
        expected = _winding_count(f, center, radius)
        roots: list[complex] = []
        cand = list(starts) + ([e] if abs(e - center) <= radius else [])
        extra = 0
        while True:
            for z0 in cand:
                z, res = _newton(f, df, z0)
                if res > residual_tol or abs(z - center) > radius * (1 + 1e-12):
                    continue
                if all(abs(z - q) > dedupe_tol for q in roots):
                    roots.append(z)
            if len(roots) >= expected or extra >= 4:
                break
            extra += 1
            u = rng.random(64)
            cand = center + radius * np.sqrt(u) * np.exp(2j * np.pi * rng.random(64))
        counts.append(expected)
        if len(roots) != expected:
            bad.append(i)
        lams.extend(roots)
        comps.extend([i] * len(roots))
    lams = np.asarray(lams, dtype=complex)
    comps = np.asarray(comps, dtype=int)
    order = np.lexsort((lams.imag, -lams.real)) if len(lams) else np.zeros(0, int)
    return DelayOracle(lams[order], comps[order], np.asarray(counts), tuple(bad))


def delay_reference_disk(problem: DelayProblem, m: int = 11, search_center: complex = -0.5,
                         search_radius: float = 1.0, ratio: Optional[float] = None):
    """Disk enclosing the ``m`` rightmost roots.

    The center is the midpoint of their real parts.  By default the radius is
    the geometric mean of the farthest enclosed and the nearest excluded root
    distances, so interior and exterior poles converge at the same rate.  With
    ``ratio`` the radius is instead set to ``nearest_excluded * ratio``, fixing
    the exterior convergence ratio.
    """
    orc = delay_eigen_oracle(problem, search_center, search_radius)
    lam = orc.eigenvalues[np.lexsort((orc.eigenvalues.imag, -orc.eigenvalues.real))]
    if len(lam) <= m:
        raise ValueError("search disk does not contain enough roots")
    inner, outer = lam[:m], lam[m:]
    center = 0.5 * (inner.real.max() + inner.real.min())
    d_in = np.max(np.abs(inner - center))
    d_out = np.min(np.abs(outer - center))
    if d_in >= d_out:
        raise ValueError("cannot separate the rightmost roots with a disk about their midpoint")
    radius = math.sqrt(d_in * d_out) if ratio is None else d_out * ratio
    if not d_in < radius < d_out:
        raise ValueError("requested ratio does not separate the roots")
    return complex(center), float(radius)


# ---------------------------------------------------------------------------
# planted problems


class Remainder:
    """Analytic remainder N(z) of the resolvent."""

    dim: int

    def value(self, z: complex) -> np.ndarray:
        raise NotImplementedError

    def taylor(self, z: complex, k: int) -> np.ndarray:
        """N^{(k)}(z) / k!."""
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False

    def singularities(self) -> np.ndarray:
        return np.zeros(0, complex)


class ZeroRemainder(Remainder):
    def __init__(self, dim: int):
        self.dim = dim

    def value(self, z):
        return np.zeros((self.dim, self.dim), dtype=complex)

    def taylor(self, z, k):
        return self.value(z)

    @property
    def is_zero(self):
        return True


class PolynomialRemainder(Remainder):
    """``N(z) = sum_k C_k ((z - center)/scale)^k``."""

    def __init__(self, coeffs: Sequence[np.ndarray], center: complex = 0.0, scale: float = 1.0):
        self.coeffs = [np.asarray(C, dtype=complex) for C in coeffs]
        self.dim = self.coeffs[0].shape[0]
        self.center, self.scale = complex(center), float(scale)

    def value(self, z):
        return self.taylor(z, 0)

    def taylor(self, z, k):
        u = (complex(z) - self.center) / self.scale
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for j in range(k, len(self.coeffs)):
            out += math.comb(j, k) * u ** (j - k) * self.coeffs[j]
        return out / self.scale ** k


class RationalRemainder(Remainder):
    """``N(z) = D + sum_p P_p / (z - mu_p)`` with poles mu_p away from the region."""

    def __init__(self, D: np.ndarray, poles: Sequence[complex], residues: Sequence[np.ndarray]):
        self.D = np.asarray(D, dtype=complex)
        self.poles = np.asarray(poles, dtype=complex)
        self.residues = [np.asarray(P, dtype=complex) for P in residues]
        self.dim = self.D.shape[0]

    def value(self, z):
        return self.taylor(z, 0)

    def taylor(self, z, k):
        out = self.D.copy() if k == 0 else np.zeros_like(self.D)
        for mu, P in zip(self.poles, self.residues):
            out += P * (-1) ** k / (complex(z) - mu) ** (k + 1)
        return out

    def singularities(self):
        return self.poles


class _ResolventFactor(Factorization):
    def __init__(self, M):
        self.M = M

    def solve(self, B):
        return self.M @ B

    def solve_adjoint(self, B):
        return self.M.conj().T @ B


class PlantedProblem(NlevpProblem):
    """Problem given by its resolvent ``T(z)^{-1} = V (zI - Lam)^{-1} W^* + N(z)``.

    ``solve`` applies the planted resolvent directly.  ``apply`` and ``matrix``
    use the Woodbury identity
    ``T = N^{-1} - N^{-1} V (diag(z - lam) + W^* N^{-1} V)^{-1} W^* N^{-1}``,
    which stays well defined at the planted eigenvalues.
    """

    def __init__(self, eigenvalues, V, W, remainder: Remainder,
                 region: Optional[ContourQuadrature] = None):
        self.eigenvalues = np.asarray(eigenvalues, dtype=complex).ravel()
        self.V = np.asarray(V, dtype=complex)
        self.W = np.asarray(W, dtype=complex)
        self.remainder = remainder
        self.region = region
        self.dim = self.V.shape[0]
        m = len(self.eigenvalues)
        if self.V.shape != (self.dim, m) or self.W.shape != (self.dim, m):
            raise ValueError("V and W must be n x m with m planted eigenvalues")
        if len(np.unique(self.eigenvalues)) != m:
            raise ValueError("planted eigenvalues must be distinct")

    @property
    def m(self) -> int:
        return len(self.eigenvalues)

    # -- closed forms ------------------------------------------------------
    def rational_part(self, z: complex) -> np.ndarray:
        return (self.V / (complex(z) - self.eigenvalues)) @ self.W.conj().T

    def rational_taylor(self, z: complex, k: int) -> np.ndarray:
        """H^{(k)}(z) / k!."""
        d = (-1.0) ** k / (complex(z) - self.eigenvalues) ** (k + 1)
        return (self.V * d) @ self.W.conj().T

    def resolvent(self, z: complex) -> np.ndarray:
        z = complex(z)
        gap = np.min(np.abs(z - self.eigenvalues))
        if gap <= 4 * EPS * max(1.0, abs(z)):
            raise SingularEvaluationError(z, "planted eigenvalue")
        return self.rational_part(z) + self.remainder.value(z)

    # -- problem interface -------------------------------------------------
    def factor(self, z):
        return _ResolventFactor(self.resolvent(z))

    def matrix(self, z):
        z = complex(z)
        if self.remainder.is_zero:
            if self.m != self.dim:
                raise NotImplementedError("T(z) does not exist: zero remainder and m < n")
            Wh_inv = np.linalg.inv(self.W.conj().T)
            return Wh_inv @ np.diag(z - self.eigenvalues) @ np.linalg.inv(self.V)
        Nz = self.remainder.value(z)
        lu = scipy.linalg.lu_factor(Nz)
        NiV = scipy.linalg.lu_solve(lu, self.V)
        Ni = scipy.linalg.lu_solve(lu, np.eye(self.dim))
        K = np.diag(z - self.eigenvalues) + self.W.conj().T @ NiV
        return Ni - NiV @ np.linalg.solve(K, self.W.conj().T @ Ni)

    def check_contour(self, contour):
        sing = self.remainder.singularities()
        if any(contour.contains(mu) for mu in sing):
            raise ValueError("remainder has a pole inside the contour region")
        gap = np.min(np.abs(contour.nodes[:, None] - self.eigenvalues[None, :]))
        if gap < 1e-8 * contour.scale:
            warnings.warn("a planted eigenvalue lies on the contour", RuntimeWarning, stacklevel=3)

    # -- exact data --------------------------------------------------------
    def inside(self, contour: ContourQuadrature) -> np.ndarray:
        return np.array([contour.contains(z, closed=False, rtol=0.0) for z in self.eigenvalues])

    def _restricted(self, contour):
        mask = np.ones(self.m, bool) if contour is None else self.inside(contour)
        return self.eigenvalues[mask], self.V[:, mask], self.W[:, mask]

    def exact_markov(self, probes: ProbingConfig, K_max: int, shift: complex = 0.0,
                     scale: float = 1.0, contour: Optional[ContourQuadrature] = None) -> MomentSet:
        """Closed-form A_k of the planted eigenvalues (those inside ``contour`` if given)."""
        lam, V, W = self._restricted(contour)
        u = (lam - shift) / scale
        d = u[None, :] ** np.arange(K_max + 1)[:, None]
        return self._moment_set(probes, V, W, d, None, complex(shift), float(scale))

    def exact_sigma_moments(self, probes: ProbingConfig, sigma: complex, K_max: int,
                            scale: float = 1.0,
                            contour: Optional[ContourQuadrature] = None) -> MomentSet:
        lam, V, W = self._restricted(contour)
        k = np.arange(K_max + 1)[:, None]
        d = (-scale) ** k / (sigma - lam[None, :]) ** (k + 1)
        return self._moment_set(probes, V, W, d, complex(sigma), 0j, float(scale))

    @staticmethod
    def _moment_set(probes, V, W, d, point, shift, scale):
        LV = probes.L.conj().T @ V
        WR = W.conj().T @ probes.R
        Wh = W.conj().T
        left = np.einsum("am,km,mn->kan", LV, d, Wh)
        right = np.einsum("nm,km,mb->knb", V, d, WR)
        two = np.einsum("am,km,mb->kab", LV, d, WR)
        return MomentSet(left, right, two, point, shift, scale)

    def hankel_factors(self, probes: ProbingConfig, K: int,
                       contour: Optional[ContourQuadrature] = None):
        """Block observability ``O`` (K ell x m) and reachability ``Rc`` (m x K r)."""
        lam, V, W = self._restricted(contour)
        LV = probes.L.conj().T @ V
        WR = W.conj().T @ probes.R
        O = np.vstack([LV * lam ** k for k in range(K)])
        Rc = np.hstack([lam[:, None] ** k * WR for k in range(K)])
        return O, Rc, lam

    def loewner_factors(self, probes: ProbingConfig, theta, sigma, left_coeffs, right_coeffs,
                        contour: Optional[ContourQuadrature] = None):
        """Generalized observability/reachability: ``O[i] = l_i^* V (theta_i - Lam)^{-1}``,
        ``Rc[:, j] = (sigma_j - Lam)^{-1} W^* r_j``."""
        lam, V, W = self._restricted(contour)
        ldirs = probes.L @ np.asarray(left_coeffs)
        rdirs = probes.R @ np.asarray(right_coeffs)
        O = (ldirs.conj().T @ V) / (np.asarray(theta)[:, None] - lam[None, :])
        Rc = (W.conj().T @ rdirs) / (np.asarray(sigma)[None, :] - lam[:, None])
        return O, Rc, lam

    def exact_multipoint(self, scheme, probes: ProbingConfig,
                         contour: Optional[ContourQuadrature] = None):
        """Loewner pair from exact samples of the planted rational part."""
        from .loewner_multi import build_multipoint_from_samples

        lam, V, W = self._restricted(contour)

        def H(z):
            return (V / (z - lam)) @ W.conj().T

        def dH(z):
            return -(V / (z - lam) ** 2) @ W.conj().T

        ldirs = scheme.left_directions(probes)
        rdirs = scheme.right_directions(probes)
        Ldm = np.vstack([ldirs[:, i].conj() @ H(t) for i, t in enumerate(scheme.theta)])
        Rdm = np.column_stack([H(s) @ rdirs[:, j] for j, s in enumerate(scheme.sigma)])
        D = np.zeros((scheme.r, scheme.r), dtype=complex)
        for i, j in zip(*np.nonzero(scheme.hermite_mask)):
            D[i, j] = ldirs[:, i].conj() @ dH(scheme.sigma[j]) @ rdirs[:, j]
        return build_multipoint_from_samples(scheme.theta, scheme.sigma, Ldm, Rdm,
                                             ldirs, rdirs, D)


def _cgauss(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def make_planted_problem(n: int, m: int, eigenvalues: Optional[Sequence[complex]] = None,
                         center: complex = 0.0, radius: float = 1.0,
                         eig_radius_ratio: float = 0.5, vector_rank: Optional[int] = None,
                         remainder: str = "polynomial", degree: int = 2,
                         n_remainder_poles: int = 2, remainder_pole_ratio: float = 3.0,
                         seed: int = 0) -> PlantedProblem:
    """Seeded planted problem with ``m`` eigenvalues in the disk ``|z - center| < radius``.

    Eigenvalues default to random points with ``|lam - center| <= eig_radius_ratio * radius``.
    ``vector_rank < m`` makes V and W rank deficient (dependent eigenvectors).
    ``remainder`` is ``"zero"``, ``"polynomial"`` (given ``degree``) or
    ``"rational"`` (poles at ``remainder_pole_ratio * radius`` from the center).
    """
    if m < 1 or n < 1:
        raise ValueError("need m >= 1 and n >= 1")
    rng = np.random.default_rng(seed)
    center = complex(center)
    if eigenvalues is None:
        lam = []
        min_sep = 0.05 * radius * eig_radius_ratio
        while len(lam) < m:
            z = center + eig_radius_ratio * radius * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
            if all(abs(z - q) > min_sep for q in lam):
                lam.append(z)
        lam = np.asarray(lam)
    else:
        lam = np.asarray(eigenvalues, dtype=complex).ravel()
        if len(lam) != m:
            raise ValueError("number of eigenvalues must equal m")
    if len(np.unique(lam)) != m:
        raise ValueError("planted eigenvalues must be distinct")
    q = m if vector_rank is None else int(vector_rank)
    if not 1 <= q <= min(m, n):
        raise ValueError("vector_rank must lie in [1, min(m, n)]")
    if q == m:
        V, W = _cgauss(rng, n, m), _cgauss(rng, n, m)
    else:
        V = _cgauss(rng, n, q) @ _cgauss(rng, q, m)
        W = _cgauss(rng, n, q) @ _cgauss(rng, q, m)
    V /= np.linalg.norm(V, axis=0)
    W /= np.linalg.norm(W, axis=0)
    if remainder == "zero":
        rem: Remainder = ZeroRemainder(n)
    elif remainder == "polynomial":
        coeffs = [np.eye(n) + 0.2 * _cgauss(rng, n, n) / np.sqrt(n)]
        coeffs += [0.3 * _cgauss(rng, n, n) / np.sqrt(n) for _ in range(degree)]
        rem = PolynomialRemainder(coeffs, center, radius)
    elif remainder == "rational":
        mus = center + remainder_pole_ratio * radius * np.exp(
            2j * np.pi * (np.arange(n_remainder_poles) + 0.25) / max(n_remainder_poles, 1))
        res = [0.3 * radius * _cgauss(rng, n, n) / np.sqrt(n) for _ in mus]
        rem = RationalRemainder(np.eye(n) + 0.2 * _cgauss(rng, n, n) / np.sqrt(n), mus, res)
    else:
        raise ValueError(f"unknown remainder kind {remainder!r}")
    return PlantedProblem(lam, V, W, rem)


# ---------------------------------------------------------------------------
# toys


class ScalarProblem(NlevpProblem):
    """1 x 1 problem ``T(z) = f(z)``."""

    dim = 1

    def __init__(self, f: Callable[[complex], complex],
                 df: Optional[Callable[[complex], complex]] = None):
        self.f, self.df = f, df

    def matrix(self, z):
        return np.array([[complex(self.f(complex(z)))]])

    def factor(self, z):
        val = complex(self.f(complex(z)))
        if val == 0 or not np.isfinite(val):
            raise SingularEvaluationError(z, "f(z) = 0")
        return _DiagonalFactor(np.array([val]))

    def apply_derivative(self, z, V):
        if self.df is None:
            raise NotImplementedError
        return complex(self.df(complex(z))) * np.asarray(V)


def polynomial_problem(coeffs: Sequence[np.ndarray]) -> DenseProblem:
    """Matrix polynomial ``T(z) = sum_k coeffs[k] z^k``."""
    C = [np.atleast_2d(np.asarray(A, dtype=complex)) for A in coeffs]
    n = C[0].shape[0]

    def T(z):
        return sum(A * z ** k for k, A in enumerate(C))

    def dT(z):
        return sum(k * A * z ** (k - 1) for k, A in enumerate(C) if k)

    return DenseProblem(T, n, dT)


def linear_problem(A: np.ndarray, E: Optional[np.ndarray] = None) -> DenseProblem:
    """``T(z) = z E - A`` (E defaults to the identity)."""
    A = np.asarray(A, dtype=complex)
    E = np.eye(A.shape[0]) if E is None else np.asarray(E, dtype=complex)
    return polynomial_problem([-A, E])


# ---------------------------------------------------------------------------
# Matrix Market combiner


def _scalar_function(spec) -> tuple[Callable[[complex], complex], Optional[complex]]:
    """Return ``(f, branch_point)``; branch_point is set for square-root terms."""
    if spec == "1" or spec == 1:
        return (lambda z: 1.0 + 0j), None
    if spec == "z":
        return (lambda z: complex(z)), None
    if isinstance(spec, dict):
        if "sqrt_shift" in spec:
            a = complex(spec["sqrt_shift"])
            return (lambda z: np.sqrt(complex(z) - a)), a
        if "exp_scale" in spec:
            c, tau = spec["exp_scale"]
            return (lambda z: c * np.exp(-tau * complex(z))), None
        if "poly" in spec:
            p = [complex(x) for x in spec["poly"]]
            return (lambda z: sum(ck * complex(z) ** k for k, ck in enumerate(p))), None
    raise ValueError(f"unknown scalar function specification {spec!r}")


def _load_matrix(matrix, base_dir):
    if isinstance(matrix, (str, os.PathLike)):
        path = matrix if os.path.isabs(matrix) or base_dir is None else os.path.join(base_dir, matrix)
        M = scipy.io.mmread(path)
        return M.toarray() if hasattr(M, "toarray") else np.asarray(M)
    return np.asarray(matrix)


class CombinedProblem(DenseProblem):
    """``T(z) = sum_t coef_t f_t(z) A_t`` with dense term matrices.

    Square-root terms use the principal branch, so ``T`` is analytic off the
    cut ``(-inf, alpha]`` of each ``sqrt(z - alpha)``.
    """

    def __init__(self, terms):
        self.terms = terms
        self.branch_points = [bp for _, _, _, bp in terms if bp is not None]
        n = terms[0][2].shape[0]

        def T(z):
            return sum(coef * f(z) * A for coef, f, A, _ in terms)

        super().__init__(T, n)

    def check_contour(self, contour):
        for a in self.branch_points:
            on_cut = (contour.nodes.real <= a.real) & (np.abs(contour.nodes.imag - a.imag) <= 1e-12 * contour.scale)
            if np.any(on_cut):
                warnings.warn(f"quadrature node lies on the branch cut of sqrt(z - {a})",
                              RuntimeWarning, stacklevel=3)


def load_matrix_problem(terms, base_dir: Optional[str] = None) -> CombinedProblem:
    """Build ``sum_t coef_t f_t(z) A_t`` from term descriptions.

    Each term is a dict ``{"f": ..., "coef": [re, im] or number, "matrix": path_or_array}``
    where ``f`` is ``"1"``, ``"z"``, ``{"sqrt_shift": alpha}``,
    ``{"exp_scale": [c, tau]}`` or ``{"poly": [p0, p1, ...]}``.  Paths are
    Matrix Market files read with :func:`scipy.io.mmread`.
    """
    if isinstance(terms, (str, os.PathLike)):
        with open(terms) as fh:
            spec = json.load(fh)
        base_dir = os.path.dirname(os.path.abspath(terms)) if base_dir is None else base_dir
        terms = spec["terms"] if isinstance(spec, dict) else spec
    if not terms:
        raise ValueError("combiner needs at least one term")
    built = []
    n = None
    for t in terms:
        f, bp = _scalar_function(t.get("f", "1"))
        coef = t.get("coef", 1.0)
        coef = complex(*coef) if isinstance(coef, (list, tuple)) else complex(coef)
        A = np.asarray(_load_matrix(t["matrix"], base_dir), dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("term matrices must be square")
        if n is None:
            n = A.shape[0]
        elif A.shape[0] != n:
            raise ValueError("term matrices must share one dimension")
        built.append((coef, f, A, bp))
    return CombinedProblem(built)


def gun_form_terms(K, M, E1, E2, alpha1: float = 0.0, alpha2: float = 108.8774):
    """Terms for ``K - z M + i sqrt(z - alpha1^2) E1 + i sqrt(z - alpha2^2) E2``."""
    return [
        {"f": "1", "coef": 1.0, "matrix": K},
        {"f": "z", "coef": -1.0, "matrix": M},
        {"f": {"sqrt_shift": alpha1 ** 2}, "coef": [0.0, 1.0], "matrix": E1},
        {"f": {"sqrt_shift": alpha2 ** 2}, "coef": [0.0, 1.0], "matrix": E2},
    ]
