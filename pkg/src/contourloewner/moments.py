"""Markov moments, sigma-moments and point samples of the rational part H(z).

All quantities are weighted sums over the quadrature slabs of a
:class:`~contourloewner.core.QuadratureDataTensors`, so each is accurate up to
the contour quadrature error.
"""

from __future__ import annotations

import dataclasses
import warnings
from typing import Optional, Sequence, Union

import numpy as np

from .core import ContourQuadrature, QuadratureDataTensors

# sigma closer than this fraction of the contour size to a node triggers a warning
NEAR_NODE_FRACTION = 1e-6

Direction = Union[int, Sequence[complex], np.ndarray, None]


@dataclasses.dataclass(frozen=True, eq=False)
class MomentSet:
    """Moments of orders 0..K_max.

    ``left_blocks[k]`` is ell x n, ``right_blocks[k]`` is n x r and
    ``two_sided[k]`` is ell x r.  ``point`` is ``None`` for Markov moments
    (expansion at infinity) and sigma otherwise.  Markov moments use the
    variable ``(z - shift) / scale``; sigma-moments are stored as
    ``scale**k * M_k``.
    """

    left_blocks: np.ndarray
    right_blocks: np.ndarray
    two_sided: np.ndarray
    point: Optional[complex] = None
    shift: complex = 0j
    scale: float = 1.0

    @property
    def K_max(self) -> int:
        return self.two_sided.shape[0] - 1

    @property
    def kind(self) -> str:
        return "markov" if self.point is None else "sigma"


def _weighted(data: QuadratureDataTensors, f: np.ndarray):
    """Return (sum_k f[j,k] QL_k, sum_k f[j,k] QR_k, sum_k f[j,k] QL_k R) for each row j."""
    left = np.einsum("jk,ank->jan", f, data.QL)
    right = np.einsum("jk,nbk->jnb", f, data.QR)
    two = np.einsum("jan,nb->jab", left, data.probes.R)
    return left, right, two


def markov_moments(data: QuadratureDataTensors, K_max: int, shift: complex = 0.0,
                   scale: float = 1.0) -> MomentSet:
    """A_k = sum_j w_j ((z_j - shift)/scale)^k L^* T(z_j)^{-1} R for k = 0..K_max."""
    if K_max < 0:
        raise ValueError("K_max must be nonnegative")
    if not scale > 0:
        raise ValueError("scale must be positive")
    c = data.contour
    u = (c.nodes - shift) / scale
    powers = u[None, :] ** np.arange(K_max + 1)[:, None]
    left, right, two = _weighted(data, powers * c.weights[None, :])
    return MomentSet(left, right, two, None, complex(shift), float(scale))


def _check_exterior(contour: ContourQuadrature, sigma: complex) -> None:
    sigma = complex(sigma)
    if np.any(contour.nodes == sigma):
        k = int(np.flatnonzero(contour.nodes == sigma)[0]) + 1
        raise ZeroDivisionError(f"sigma={sigma} coincides with quadrature node zeta_{k}")
    if contour.contains(sigma, closed=True, rtol=0.0):
        raise ValueError(f"sigma={sigma} lies inside the contour; expansion point must be exterior")
    gap = float(np.min(np.abs(contour.nodes - sigma)))
    if gap < NEAR_NODE_FRACTION * contour.scale:
        warnings.warn(f"sigma={sigma} is within {gap:.3g} of a quadrature node; "
                      "moments will be inaccurate", RuntimeWarning, stacklevel=3)


def sigma_moments(data: QuadratureDataTensors, sigma: complex, K_max: int,
                  scale: float = 1.0) -> MomentSet:
    """M_k = (-1)^k sum_j w_j (sigma - z_j)^{-(k+1)} L^* T(z_j)^{-1} R.

    These are the Taylor coefficients of L^* H(z) R about an exterior point
    sigma.  With ``scale`` s the stored blocks are ``s**k M_k``.
    """
    if K_max < 0:
        raise ValueError("K_max must be nonnegative")
    c = data.contour
    _check_exterior(c, sigma)
    d = 1.0 / (sigma - c.nodes)
    k = np.arange(K_max + 1)[:, None]
    f = ((-scale) ** k) * d[None, :] ** (k + 1) * c.weights[None, :]
    left, right, two = _weighted(data, f)
    return MomentSet(left, right, two, complex(sigma), 0j, float(scale))


def _direction_vector(direction: Direction, width: int) -> Optional[np.ndarray]:
    if direction is None:
        return None
    if np.isscalar(direction) and float(direction).is_integer():
        e = np.zeros(width, dtype=complex)
        e[int(direction)] = 1.0
        return e
    v = np.asarray(direction, dtype=complex).ravel()
    if v.shape != (width,):
        raise ValueError(f"direction coefficient vector must have length {width}")
    return v


def point_samples(data: QuadratureDataTensors, points, side: str = "right",
                  direction: Direction = None) -> np.ndarray:
    """Quadrature samples of H at exterior points.

    ``side="right"`` gives ``H(s) R c`` (shape (P, n)); ``side="left"`` gives
    ``c^* L^* H(s)`` (shape (P, n)).  With ``direction=None`` the full probed
    blocks ``H(s) R`` (P, n, r) or ``L^* H(s)`` (P, ell, n) are returned.
    ``direction`` is a probe index or a coefficient vector over the probes.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    c = data.contour
    for s in pts:
        _check_exterior(c, s)
    f = c.weights[None, :] / (pts[:, None] - c.nodes[None, :])
    if side == "right":
        blocks = np.einsum("jk,nbk->jnb", f, data.QR)
        v = _direction_vector(direction, data.r)
        return blocks if v is None else blocks @ v
    if side == "left":
        blocks = np.einsum("jk,ank->jan", f, data.QL)
        v = _direction_vector(direction, data.ell)
        return blocks if v is None else np.einsum("a,jan->jn", v.conj(), blocks)
    raise ValueError("side must be 'left' or 'right'")


def hermite_sample(data: QuadratureDataTensors, sigma: complex,
                   left: Direction = None, right: Direction = None):
    """Derivative sample ``l^* H'(sigma) r`` (or the full ell x r block when directions are None)."""
    c = data.contour
    _check_exterior(c, sigma)
    f = -c.weights / (sigma - c.nodes) ** 2
    block = np.einsum("k,abk->ab", f, data.two_sided())
    lv = _direction_vector(left, data.ell)
    rv = _direction_vector(right, data.r)
    if lv is not None:
        block = lv.conj() @ block
    if rv is not None:
        block = block @ rv
    return block


def interior_remainder_sample(data: QuadratureDataTensors, sigma: complex, k: int) -> np.ndarray:
    """Contour sum for an interior point: ``(-1)^{k+1} L^* N^{(k)}(sigma) R / k!``.

    For sigma strictly inside, ``sum_j w_j (sigma - z_j)^{-(k+1)} L^* T(z_j)^{-1} R``
    isolates the holomorphic remainder N (the rational part contributes zero).
    """
    c = data.contour
    sigma = complex(sigma)
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    if np.any(c.nodes == sigma):
        raise ZeroDivisionError(f"sigma={sigma} coincides with a quadrature node")
    if not c.contains(sigma, closed=False, rtol=0.0):
        raise ValueError(f"sigma={sigma} must lie strictly inside the contour")
    f = c.weights / (sigma - c.nodes) ** (k + 1)
    return np.einsum("k,abk->ab", f, data.two_sided())


def remainder_taylor_coefficient(data: QuadratureDataTensors, sigma: complex, k: int) -> np.ndarray:
    """``L^* N^{(k)}(sigma) R / k!`` for sigma strictly inside the contour."""
    return (-1.0) ** (k + 1) * interior_remainder_sample(data, sigma, k)
