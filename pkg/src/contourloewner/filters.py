"""Scalar filter functions induced by the quadrature rule.

Applying the discretized moment sums to a pole ``1/(z - lam)`` replaces the
ideal indicator of the contour interior by a rational filter evaluated at
``lam``.  These functions make that filter explicit.
"""

from __future__ import annotations

import csv
import dataclasses
from typing import Sequence

import numpy as np

from .core import ContourQuadrature


def _node_differences(contour: ContourQuadrature, z: np.ndarray) -> np.ndarray:
    diff = contour.nodes - z[..., None]
    hit = np.argwhere(diff == 0)
    if hit.size:
        k = int(hit[0, -1])
        raise ZeroDivisionError(f"filter has a pole at quadrature node zeta_{k + 1} = {contour.nodes[k]}")
    return diff


def hankel_filter(contour: ContourQuadrature, k: int, z) -> np.ndarray:
    """b_k(z) = sum_j w_j z_j^k / (z_j - z); ideally z^k inside and 0 outside."""
    diff = _node_differences(contour, np.asarray(z, dtype=complex))
    return np.sum(contour.weights * contour.nodes ** k / diff, axis=-1)


def loewner_filter(contour: ContourQuadrature, sigma: complex, k: int, z) -> np.ndarray:
    """b_{sigma,k}(z) = sum_j w_j / ((z_j - z)(sigma - z_j)^{k+1}).

    Ideally ``1/(sigma - z)^{k+1}`` inside the contour and 0 outside.
    """
    diff = _node_differences(contour, np.asarray(z, dtype=complex))
    gap = sigma - contour.nodes
    if np.any(gap == 0):
        k0 = int(np.flatnonzero(gap == 0)[0])
        raise ZeroDivisionError(f"sigma coincides with quadrature node zeta_{k0 + 1}")
    return np.sum(contour.weights / (diff * gap ** (k + 1)), axis=-1)


def ideal_hankel_filter(contour: ContourQuadrature, k: int, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    inside = np.vectorize(lambda x: contour.contains(x, closed=False, rtol=0.0), otypes=[bool])(z)
    return np.where(inside, z ** k, 0.0)


def ideal_loewner_filter(contour: ContourQuadrature, sigma: complex, k: int, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    inside = np.vectorize(lambda x: contour.contains(x, closed=False, rtol=0.0), otypes=[bool])(z)
    return np.where(inside, 1.0 / (sigma - z) ** (k + 1), 0.0)


def closed_form_b0_unit_circle(N: int, z) -> np.ndarray:
    """b_0(z) = 1/(1 - z^N) for the N-point trapezoid rule on the unit circle."""
    z = np.asarray(z, dtype=complex)
    den = 1.0 - z ** N
    if np.any(den == 0):
        raise ZeroDivisionError("z is an N-th root of unity, a pole of b_0")
    return 1.0 / den


def closed_form_bk_unit_circle(N: int, k: int, z) -> np.ndarray:
    """b_k(z) = z^k / (1 - z^N) for 0 <= k < N on the unit circle."""
    if not 0 <= k < N:
        raise ValueError("closed form holds for 0 <= k < N")
    return np.asarray(z, dtype=complex) ** k * closed_form_b0_unit_circle(N, z)


@dataclasses.dataclass(frozen=True, eq=False)
class FilterProfile:
    """Filter values along a set of sample points, with the ideal response alongside."""

    points: np.ndarray
    values: np.ndarray
    ideal: np.ndarray
    kind: str
    k: int
    sigma: complex | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["re_z", "im_z", "abs_z", "re_b", "im_b", "abs_b", "abs_ideal", "abs_error"])
            for z, b, g in zip(self.points, self.values, self.ideal):
                out.writerow([f"{v:.17g}" for v in
                              (z.real, z.imag, abs(z), b.real, b.imag, abs(b), abs(g), abs(b - g))])


def filter_profile(contour: ContourQuadrature, points: Sequence[complex], k: int = 0,
                   kind: str = "hankel", sigma: complex | None = None) -> FilterProfile:
    """Evaluate the quadrature filter and the ideal filter at ``points``."""
    pts = np.asarray(points, dtype=complex).ravel()
    if kind == "hankel":
        vals = hankel_filter(contour, k, pts)
        ideal = ideal_hankel_filter(contour, k, pts)
    elif kind == "loewner":
        if sigma is None:
            raise ValueError("Loewner filter needs an expansion point sigma")
        vals = loewner_filter(contour, sigma, k, pts)
        ideal = ideal_loewner_filter(contour, sigma, k, pts)
    else:
        raise ValueError(f"unknown filter kind {kind!r}")
    return FilterProfile(pts, vals, ideal, kind, k, None if sigma is None else complex(sigma))


def radial_points(contour: ContourQuadrature, radii: Sequence[float], angle: float = 0.3) -> np.ndarray:
    """Points ``center + t e^{i angle}`` along a ray (angle avoids the nodes)."""
    return contour.center + np.asarray(radii, dtype=float) * np.exp(1j * angle)
