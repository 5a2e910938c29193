"""Data-driven modal truncation of a linear transfer function.

Contour-filtered samples of ``G(z)`` at exterior points are samples of the
retained part ``G_r(z) = sum_{lam_j in region} c_j b_j^* / (z - lam_j)``.
Feeding them to the multi-point Loewner machinery yields ``G_r`` in
pole-residue form without access to a state-space realization.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .core import ContourQuadrature, NodeSingularError, ProbingConfig, QuadratureDataTensors
from .loewner_multi import (InterpolationScheme, MultiPointLoewner, build_multipoint,
                            pole_residue_form)
from .realize import RankPolicy, sort_order

# a node sample this many times the median norm hints at a pole near the contour
LARGE_SAMPLE_FACTOR = 1e3
# relative pole separation below which retained poles are reported as clustered
CLUSTER_TOL = 1e-8


class LtiTransferSource:
    """Transfer function ``G(z)`` (n_out x n_in), from a callable or ``C (zE - A)^{-1} B``."""

    def __init__(self, evaluate: Callable[[complex], np.ndarray], n_out: int, n_in: int,
                 state_space: Optional[tuple] = None):
        self._evaluate = evaluate
        self.n_out, self.n_in = int(n_out), int(n_in)
        self.state_space = state_space

    @classmethod
    def from_state_space(cls, A, B, C, E=None) -> "LtiTransferSource":
        A = np.asarray(A, dtype=complex)
        B = np.asarray(B, dtype=complex)
        C = np.asarray(C, dtype=complex)
        E = np.eye(A.shape[0]) if E is None else np.asarray(E, dtype=complex)
        if B.ndim == 1:
            B = B[:, None]
        if C.ndim == 1:
            C = C[None, :]

        def G(z):
            return C @ np.linalg.solve(complex(z) * E - A, B)

        return cls(G, C.shape[0], B.shape[1], (A, B, C, E))

    def __call__(self, z: complex) -> np.ndarray:
        G = np.asarray(self._evaluate(complex(z)), dtype=complex)
        return G.reshape(self.n_out, self.n_in)

    def poles(self) -> np.ndarray:
        if self.state_space is None:
            raise ValueError("poles are only available for state-space sources")
        A, _, _, E = self.state_space
        lam = scipy.linalg.eigvals(A, E)
        return lam[sort_order(lam)]


def compute_transfer_data(source: LtiTransferSource, contour: ContourQuadrature,
                          probes: ProbingConfig) -> QuadratureDataTensors:
    """Per-node ``L^* G(z_k)`` and ``G(z_k) R`` in the layout used by the NLEVP solvers."""
    if probes.L.shape[0] != source.n_out or probes.R.shape[0] != source.n_in:
        raise ValueError("probes must have n_out (left) and n_in (right) rows")
    N = contour.N
    QL = np.empty((probes.ell, source.n_in, N), dtype=complex)
    QR = np.empty((source.n_out, probes.r, N), dtype=complex)
    norms = np.empty(N)
    for k, z in enumerate(contour.nodes):
        try:
            G = source(z)
        except (np.linalg.LinAlgError, ArithmeticError) as exc:
            raise NodeSingularError(k + 1, z, f"transfer function evaluation failed: {exc}") from exc
        if not np.all(np.isfinite(G)):
            raise NodeSingularError(k + 1, z, "non-finite transfer function value")
        norms[k] = np.linalg.norm(G)
        QL[:, :, k] = probes.L.conj().T @ G
        QR[:, :, k] = G @ probes.R
    med = np.median(norms)
    if med > 0 and np.max(norms) > LARGE_SAMPLE_FACTOR * med:
        k = int(np.argmax(norms))
        warnings.warn(f"|G(zeta_{k + 1})| is {norms[k] / med:.3g} times the median sample; "
                      "a pole may lie close to the contour", RuntimeWarning, stacklevel=2)
    return QuadratureDataTensors(QL=QL, QR=QR, contour=contour, probes=probes)


def sample_retained(source: LtiTransferSource, contour: ContourQuadrature,
                    scheme: InterpolationScheme, probes: ProbingConfig) -> MultiPointLoewner:
    """Tangential samples of the retained part ``G_r`` and the resulting Loewner pair."""
    return build_multipoint(compute_transfer_data(source, contour, probes), scheme)


@dataclasses.dataclass(eq=False)
class ModalRom:
    """``G_r(z) = sum_j c_j b_j^* / (z - poles_j)`` with ``||b_j|| = 1``.

    ``c`` is n_out x m and ``b`` is n_in x m.
    """

    poles: np.ndarray
    c: np.ndarray
    b: np.ndarray
    singular_values: Optional[np.ndarray] = None
    flags: list = dataclasses.field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.poles)

    def __call__(self, z: complex) -> np.ndarray:
        return (self.c / (complex(z) - self.poles)) @ self.b.conj().T

    def to_dict(self) -> dict:
        def enc(a):
            a = np.asarray(a)
            return {"shape": list(a.shape), "re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}

        return {"schema": 1, "poles": enc(self.poles), "c": enc(self.c), "b": enc(self.b),
                "flags": list(self.flags)}

    @classmethod
    def from_dict(cls, d: dict) -> "ModalRom":
        def dec(e):
            return (np.asarray(e["re"]) + 1j * np.asarray(e["im"])).reshape(e["shape"])

        return cls(dec(d["poles"]), dec(d["c"]), dec(d["b"]), None, list(d.get("flags", [])))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ModalRom":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _normalized_rom(poles, C, Bt, contour, s, r_scheme) -> ModalRom:
    scale = np.linalg.norm(Bt, axis=1)
    if np.any(scale == 0):
        raise ValueError("zero residue direction")
    b = (Bt.conj() / scale[:, None]).T
    c = C * scale[None, :]
    flags = []
    if len(poles) and len(poles) >= r_scheme:
        flags.append("possibly-under-resolved: Loewner matrix has full rank; "
                     "enlarge the interpolation scheme")
    outside = [p for p in poles if not contour.contains(p)]
    if outside:
        flags.append(f"poles-outside-region={len(outside)}")
    if len(poles) > 1:
        gaps = np.abs(poles[:, None] - poles[None, :]) + np.diag(np.full(len(poles), np.inf))
        if np.min(gaps) <= CLUSTER_TOL * max(1.0, np.max(np.abs(poles))):
            flags.append("clustered-poles")
    for f in flags:
        warnings.warn(f, RuntimeWarning, stacklevel=3)
    return ModalRom(poles, c, b, s, flags)


def modal_truncate(source: LtiTransferSource, contour: ContourQuadrature,
                   scheme: InterpolationScheme, probes: ProbingConfig,
                   rank_policy: RankPolicy = RankPolicy()) -> ModalRom:
    """Pole-residue ROM of the part of ``G`` with poles inside the contour."""
    lw = sample_retained(source, contour, scheme, probes)
    poles, C, Bt = pole_residue_form(lw, rank_policy)
    s = scipy.linalg.svdvals(lw.Lmat)
    return _normalized_rom(poles, C, Bt, contour, s, scheme.r)


def exact_modal_truncation(source: LtiTransferSource, contour: ContourQuadrature) -> ModalRom:
    """Reference ROM from the eigen-decomposition of a state-space source."""
    if source.state_space is None:
        raise ValueError("exact truncation needs a state-space source")
    A, B, C, E = source.state_space
    lam, VL, VR = scipy.linalg.eig(A, E, left=True, right=True)
    keep = np.array([contour.contains(z, closed=False) for z in lam])
    lam, VL, VR = lam[keep], VL[:, keep], VR[:, keep]
    # G = sum_j (C v_j)(w_j^* B) / ((z - lam_j) w_j^* E v_j)
    denom = np.einsum("nj,nk,kj->j", VL.conj(), E, VR)
    Cv = (C @ VR) / denom
    wB = VL.conj().T @ B
    order = sort_order(lam)
    return _normalized_rom(lam[order], Cv[:, order], wB[order], contour, None, np.inf)
