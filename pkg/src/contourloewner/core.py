"""Problem abstraction, contour quadrature and probed resolvent sampling.

Every solver backend consumes the same :class:`QuadratureDataTensors`: the
per-node slabs ``L^* T(z_k)^{-1}`` and ``T(z_k)^{-1} R``.  Quadrature weights
absorb the ``1/(2*pi*i)`` factor and the contour derivative, so a contour
integral is always the plain weighted sum ``sum_k w_k f(z_k) (slab k)``.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import warnings
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

EPS = np.finfo(float).eps

# pivots/diagonals below this (relative) are treated as an exactly singular T(z)
SINGULAR_RCOND = 64 * EPS


class SingularEvaluationError(ArithmeticError):
    """T(z) is numerically singular at the requested point."""

    def __init__(self, z: complex, detail: str = ""):
        self.z = complex(z)
        msg = f"T(z) is singular at z={self.z:.16g}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class NodeSingularError(SingularEvaluationError):
    """A quadrature node coincides with an eigenvalue (contour passes through it)."""

    def __init__(self, index: int, node: complex, detail: str = ""):
        self.index = index
        self.node = complex(node)
        ArithmeticError.__init__(
            self,
            f"node-singular: T(zeta_{index}) is singular at zeta_{index}={self.node:.16g}; "
            "the contour passes through (or numerically touches) an eigenvalue"
            + (f" ({detail})" if detail else ""),
        )
        self.z = self.node


# ---------------------------------------------------------------------------
# contours


@dataclasses.dataclass(frozen=True, eq=False)
class ContourQuadrature:
    """Closed contour with N nodes/weights approximating (1/2*pi*i) * integral.

    ``kind`` is ``"circle"``, ``"ellipse"`` or ``"custom"``.  For custom
    contours an ``inside`` predicate may be supplied; otherwise membership is
    decided by the discrete winding number ``sum_k w_k / (z_k - z)``.
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    center: complex = 0j
    radius: Optional[float] = None
    semi_axes: Optional[tuple] = None
    inside: Optional[Callable[[complex], bool]] = None

    @property
    def N(self) -> int:
        return len(self.nodes)

    @property
    def scale(self) -> float:
        """Characteristic size of the contour (radius, major semi-axis, ...)."""
        if self.kind == "circle":
            return float(self.radius)
        if self.kind == "ellipse":
            return float(max(self.semi_axes))
        return float(np.max(np.abs(self.nodes - np.mean(self.nodes))))

    def integrate(self, values: np.ndarray) -> complex:
        """Weighted sum ``sum_k w_k f(z_k)`` for samples ``f(z_k)``."""
        return complex(np.sum(self.weights * np.asarray(values)))

    def boundary_offset(self, z: complex) -> float:
        """Signed distance-like offset: negative inside, 0 on the curve, positive outside."""
        z = complex(z)
        if self.kind == "circle":
            return abs(z - self.center) - self.radius
        if self.kind == "ellipse":
            a, b = self.semi_axes
            d = z - self.center
            rho = np.hypot(d.real / a, d.imag / b)
            return float((rho - 1.0) * min(a, b))
        if self.inside is not None:
            # custom predicate: no metric, only a sign
            return -1.0 if self.inside(z) else 1.0
        wind = self.winding_number(z)
        return float(0.5 - wind.real) * self.scale

    def winding_number(self, z: complex) -> complex:
        """Discrete approximation of the winding number about ``z``."""
        return complex(np.sum(self.weights / (self.nodes - complex(z))))

    def contains(self, z: complex, closed: bool = True, rtol: float = 1e-12) -> bool:
        """Membership in the (closed or open) region bounded by the contour."""
        off = self.boundary_offset(z)
        tol = rtol * self.scale
        return off <= tol if closed else off < -tol

    def on_boundary(self, z: complex, rtol: float = 1e-12) -> bool:
        if self.kind == "custom" and self.inside is not None:
            return False
        return abs(self.boundary_offset(z)) <= rtol * self.scale

    def descriptor(self) -> dict:
        """JSON-friendly description (custom contours carry nodes and weights)."""
        c = complex(self.center)
        if self.kind == "circle":
            return {"kind": "circle", "center": [c.real, c.imag], "radius": self.radius, "N": self.N}
        if self.kind == "ellipse":
            return {
                "kind": "ellipse",
                "center": [c.real, c.imag],
                "semi_axes": list(self.semi_axes),
                "N": self.N,
            }
        return {
            "kind": "custom",
            "N": self.N,
            "nodes": [[z.real, z.imag] for z in self.nodes],
            "weights": [[w.real, w.imag] for w in self.weights],
        }


def _unit_roots(N: int) -> np.ndarray:
    k = np.arange(1, N + 1)
    theta = 2 * np.pi * k / N
    roots = np.cos(theta) + 1j * np.sin(theta)
    # snap the quarter points so e.g. N=4 gives exactly {i, -1, -i, 1}
    for target, mask in (
        (1.0, (4 * k) % (4 * N) == 0),
        (1j, (4 * k) % (4 * N) == N),
        (-1.0, (4 * k) % (4 * N) == 2 * N),
        (-1j, (4 * k) % (4 * N) == 3 * N),
    ):
        roots[mask] = target
    return roots


def circle(center: complex, radius: float, N: int) -> ContourQuadrature:
    """Trapezoid rule on a circle: z_k = c + r e^{2 pi i k/N}, w_k = r e^{2 pi i k/N}/N."""
    _check_N(N)
    if not radius > 0:
        raise ValueError(f"circle radius must be positive, got {radius!r}")
    u = _unit_roots(N)
    center = complex(center)
    return ContourQuadrature(
        kind="circle", nodes=center + radius * u, weights=radius * u / N,
        center=center, radius=float(radius),
    )


def ellipse(center: complex, semi_axes: Sequence[float], N: int) -> ContourQuadrature:
    """Trapezoid rule on the axis-aligned ellipse c + a cos t + i b sin t."""
    _check_N(N)
    a, b = (float(x) for x in semi_axes)
    if not (a > 0 and b > 0):
        raise ValueError(f"ellipse semi-axes must be positive, got {semi_axes!r}")
    t = 2 * np.pi * np.arange(1, N + 1) / N
    center = complex(center)
    nodes = center + a * np.cos(t) + 1j * b * np.sin(t)
    # z'(t) dt / (2 pi i) with dt = 2 pi / N
    weights = (b * np.cos(t) + 1j * a * np.sin(t)) / N
    return ContourQuadrature(kind="ellipse", nodes=nodes, weights=weights,
                             center=center, semi_axes=(a, b))


def custom(nodes, weights, inside: Optional[Callable[[complex], bool]] = None) -> ContourQuadrature:
    nodes = np.asarray(nodes, dtype=complex).ravel()
    weights = np.asarray(weights, dtype=complex).ravel()
    if nodes.shape != weights.shape:
        raise ValueError("nodes and weights must have the same length")
    _check_N(len(nodes))
    return ContourQuadrature(kind="custom", nodes=nodes, weights=weights,
                             center=complex(np.mean(nodes)), inside=inside)


def build_contour(kind: str, N: int, **params) -> ContourQuadrature:
    """Dispatch on ``kind``; parameters as for :func:`circle`, :func:`ellipse`, :func:`custom`."""
    if kind == "circle":
        return circle(params.get("center", 0), params["radius"], N)
    if kind == "ellipse":
        return ellipse(params.get("center", 0), params["semi_axes"], N)
    if kind == "custom":
        c = custom(params["nodes"], params["weights"], params.get("inside"))
        if c.N != N:
            raise ValueError(f"custom contour has {c.N} nodes, expected N={N}")
        return c
    raise ValueError(f"unknown contour kind {kind!r}")


def _check_N(N: int) -> None:
    if int(N) != N or N < 2:
        raise ValueError(f"need at least 2 quadrature nodes, got N={N!r}")


# ---------------------------------------------------------------------------
# probing


@dataclasses.dataclass(frozen=True, eq=False)
class ProbingConfig:
    """Left probes ``L`` (n_out x ell) and right probes ``R`` (n_in x r)."""

    L: np.ndarray
    R: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        L = np.atleast_2d(np.asarray(self.L, dtype=complex))
        R = np.atleast_2d(np.asarray(self.R, dtype=complex))
        if L.ndim != 2 or R.ndim != 2 or L.shape[1] < 1 or R.shape[1] < 1:
            raise ValueError("probing matrices must be 2-D with at least one column")
        if np.any(np.linalg.norm(L, axis=0) == 0) or np.any(np.linalg.norm(R, axis=0) == 0):
            raise ValueError("probing matrices must not contain zero columns")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "R", R)

    @property
    def ell(self) -> int:
        return self.L.shape[1]

    @property
    def r(self) -> int:
        return self.R.shape[1]

    @classmethod
    def random(cls, n: int, ell: int, r: int, seed: int = 0,
               n_in: Optional[int] = None) -> "ProbingConfig":
        """Standard complex Gaussian probes, fully determined by ``seed``."""
        rng = np.random.default_rng(seed)
        n_in = n if n_in is None else n_in
        L = (rng.standard_normal((n, ell)) + 1j * rng.standard_normal((n, ell))) / np.sqrt(2)
        R = (rng.standard_normal((n_in, r)) + 1j * rng.standard_normal((n_in, r))) / np.sqrt(2)
        return cls(L, R, seed)

    @classmethod
    def identity(cls, n: int) -> "ProbingConfig":
        eye = np.eye(n, dtype=complex)
        return cls(eye, eye.copy())


# ---------------------------------------------------------------------------
# problems


class Factorization:
    """Reusable solver for T(z) at one point: ``solve`` and ``solve_adjoint``."""

    def solve(self, B: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def solve_adjoint(self, B: np.ndarray) -> np.ndarray:
        """Return ``T(z)^{-*} B`` so that ``L^* T(z)^{-1} = (T(z)^{-*} L)^*``."""
        raise NotImplementedError


class LUFactorization(Factorization):
    def __init__(self, z: complex, T: np.ndarray):
        T = np.asarray(T, dtype=complex)
        if not np.all(np.isfinite(T)):
            raise SingularEvaluationError(z, "non-finite matrix entries")
        anorm = np.linalg.norm(T, 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self.lu, self.piv = scipy.linalg.lu_factor(T, check_finite=False)
        if anorm == 0:
            raise SingularEvaluationError(z, "zero matrix")
        gecon, = lapack.get_lapack_funcs(("gecon",), (self.lu,))
        rcond, _ = gecon(self.lu, anorm, norm="1")
        if not rcond > SINGULAR_RCOND:
            raise SingularEvaluationError(z, f"reciprocal condition {rcond:.3g}")
        self.z = z

    def solve(self, B):
        return scipy.linalg.lu_solve((self.lu, self.piv), B, check_finite=False)

    def solve_adjoint(self, B):
        return scipy.linalg.lu_solve((self.lu, self.piv), B, trans=2, check_finite=False)


class NlevpProblem:
    """Black-box NLEVP T(z) v = 0 of dimension ``dim``.

    Subclasses implement :meth:`apply` and either :meth:`factor` or
    :meth:`matrix` (dense problems get an LU factorization for free).
    ``matrix`` also enables relative residuals.
    """

    dim: int

    def apply(self, z: complex, V: np.ndarray) -> np.ndarray:
        return self.matrix(z) @ V

    def matrix(self, z: complex) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} does not assemble T(z)")

    def factor(self, z: complex) -> Factorization:
        return LUFactorization(z, self.matrix(z))

    def solve(self, z: complex, B: np.ndarray) -> np.ndarray:
        return self.factor(z).solve(B)

    def solve_adjoint(self, z: complex, B: np.ndarray) -> np.ndarray:
        return self.factor(z).solve_adjoint(B)

    def apply_derivative(self, z: complex, V: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def has_matrix(self) -> bool:
        return type(self).matrix is not NlevpProblem.matrix

    def check_contour(self, contour: ContourQuadrature) -> None:
        """Hook for problem-specific warnings about node placement."""


class DenseProblem(NlevpProblem):
    """T(z) given as a callable returning a dense n x n matrix."""

    def __init__(self, func: Callable[[complex], np.ndarray], dim: int,
                 derivative: Optional[Callable[[complex], np.ndarray]] = None):
        self.func = func
        self.dim = int(dim)
        self.derivative = derivative

    def matrix(self, z):
        return np.asarray(self.func(complex(z)), dtype=complex).reshape(self.dim, self.dim)

    def apply_derivative(self, z, V):
        if self.derivative is None:
            raise NotImplementedError("no derivative supplied")
        return np.asarray(self.derivative(complex(z)), dtype=complex) @ V


# ---------------------------------------------------------------------------
# quadrature data


@dataclasses.dataclass(frozen=True, eq=False)
class QuadratureDataTensors:
    """Probed resolvent slabs.

    ``QL[:, :, k] = L^* T(z_k)^{-1}`` (ell x n) and
    ``QR[:, :, k] = T(z_k)^{-1} R`` (n x r).
    """

    QL: np.ndarray
    QR: np.ndarray
    contour: ContourQuadrature
    probes: ProbingConfig

    @property
    def n(self) -> int:
        return self.QR.shape[0]

    @property
    def ell(self) -> int:
        return self.QL.shape[0]

    @property
    def r(self) -> int:
        return self.QR.shape[1]

    @property
    def N(self) -> int:
        return self.QR.shape[2]

    def two_sided(self) -> np.ndarray:
        """Per-node ``L^* T(z_k)^{-1} R`` as an (ell, r, N) array."""
        return np.einsum("ank,nb->abk", self.QL, self.probes.R)

    def consistency_error(self) -> float:
        """max_k ||L^* QR_k - QL_k R|| / ||QL_k R||."""
        lhs = np.einsum("na,nbk->abk", self.probes.L.conj(), self.QR)
        rhs = self.two_sided()
        scale = np.maximum(np.linalg.norm(rhs, axis=(0, 1)), np.finfo(float).tiny)
        return float(np.max(np.linalg.norm(lhs - rhs, axis=(0, 1)) / scale))


def compute_quadrature_data(problem: NlevpProblem, contour: ContourQuadrature,
                            probes: ProbingConfig, threads: int = 1) -> QuadratureDataTensors:
    """Factor T(z_k) once per node and apply it to all ell + r probe columns.

    Nodes may be processed concurrently (``threads > 1``); each writes its own
    slab, so the tensors are identical to a sequential run.
    """
    n = problem.dim
    L, R = probes.L, probes.R
    if L.shape[0] != n or R.shape[0] != n:
        raise ValueError(f"probes have {L.shape[0]}/{R.shape[0]} rows, problem dim is {n}")
    problem.check_contour(contour)
    N = contour.N
    QL = np.empty((L.shape[1], n, N), dtype=complex)
    QR = np.empty((n, R.shape[1], N), dtype=complex)

    def work(k: int) -> None:
        z = contour.nodes[k]
        try:
            fac = problem.factor(z)
            right = fac.solve(R)
            left = fac.solve_adjoint(L)
        except SingularEvaluationError as exc:
            raise NodeSingularError(k + 1, z, str(exc)) from exc
        except (np.linalg.LinAlgError, ZeroDivisionError, FloatingPointError) as exc:
            raise NodeSingularError(k + 1, z, str(exc)) from exc
        if not (np.all(np.isfinite(right)) and np.all(np.isfinite(left))):
            raise NodeSingularError(k + 1, z, "non-finite solve")
        QR[:, :, k] = right
        QL[:, :, k] = left.conj().T

    if threads and threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(N)))
    else:
        for k in range(N):
            work(k)
    return QuadratureDataTensors(QL=QL, QR=QR, contour=contour, probes=probes)


# ---------------------------------------------------------------------------
# solutions and residuals


@dataclasses.dataclass(eq=False)
class EigenSolution:
    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray
    residuals: np.ndarray
    relative_residuals: Optional[np.ndarray]
    singular_values: np.ndarray
    rank_used: int
    method: str
    left_eigenvectors: Optional[np.ndarray] = None
    flags: list = dataclasses.field(default_factory=list)
    boundary: Optional[np.ndarray] = None
    dropped: int = 0
    approximate: bool = False

    @property
    def max_residual(self) -> float:
        if len(self.residuals) == 0:
            return 0.0
        return float(np.max(self.residuals))

    def __len__(self) -> int:
        return len(self.eigenvalues)


@dataclasses.dataclass(frozen=True, eq=False)
class ResidualReport:
    eigenvectors: np.ndarray
    residuals: np.ndarray
    relative_residuals: Optional[np.ndarray]

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0


def residual_report(problem: NlevpProblem, eigenvalues, eigenvectors) -> ResidualReport:
    """Normalize eigenvector columns and evaluate ||T(lam_j) v_j||_2 from the problem."""
    lam = np.asarray(eigenvalues, dtype=complex).ravel()
    V = np.asarray(eigenvectors, dtype=complex).reshape(problem.dim, -1) if len(lam) else \
        np.zeros((problem.dim, 0), dtype=complex)
    if V.shape[1] != len(lam):
        raise ValueError("need one eigenvector column per eigenvalue")
    norms = np.linalg.norm(V, axis=0)
    if np.any(norms == 0):
        raise ValueError("zero eigenvector column")
    V = V / norms
    res = np.empty(len(lam))
    rel = np.empty(len(lam)) if problem.has_matrix else None
    for j, z in enumerate(lam):
        if rel is not None:
            T = problem.matrix(z)
            res[j] = np.linalg.norm(T @ V[:, j])
            tn = np.linalg.norm(T, "fro")
            rel[j] = res[j] / tn if tn > 0 else 0.0
        else:
            res[j] = np.linalg.norm(problem.apply(z, V[:, [j]]))
    return ResidualReport(eigenvectors=V, residuals=res, relative_residuals=rel)


def attach_residuals(solution: EigenSolution, problem: NlevpProblem) -> EigenSolution:
    rep = residual_report(problem, solution.eigenvalues, solution.right_eigenvectors)
    return dataclasses.replace(solution, right_eigenvectors=rep.eigenvectors,
                               residuals=rep.residuals,
                               relative_residuals=rep.relative_residuals)


def filter_eigenvalues_to_domain(solution: EigenSolution, contour: ContourQuadrature,
                                 keep_all: bool = False, rtol: float = 1e-12) -> EigenSolution:
    """Drop eigenpairs outside the closed contour region; flag boundary hits."""
    if keep_all:
        return solution
    lam = solution.eigenvalues
    keep = np.array([contour.contains(z, closed=True, rtol=rtol) for z in lam], dtype=bool)
    on_edge = np.array([contour.on_boundary(z, rtol=rtol) for z in lam], dtype=bool)
    flags = list(solution.flags)
    if np.any(on_edge & keep):
        flags.append("boundary-warning")

    def take(a):
        if a is None:
            return None
        a = np.asarray(a)
        return a[..., keep] if a.ndim == 2 else a[keep]

    return dataclasses.replace(
        solution,
        eigenvalues=lam[keep],
        right_eigenvectors=take(solution.right_eigenvectors),
        left_eigenvectors=take(solution.left_eigenvectors),
        residuals=np.asarray(solution.residuals)[keep],
        relative_residuals=take(solution.relative_residuals),
        boundary=on_edge[keep],
        flags=flags,
        dropped=solution.dropped + int(np.sum(~keep)),
    )
