"""Serialization of quadrature data, solutions, pencils and singular values.

Binary quadrature container (``.ceqd``), all integers little-endian::

    magic   4 bytes  b"CEQD"
    version uint32   (currently 1)
    n, ell, r, N     uint64 each
    desc_len uint32, then desc_len bytes of UTF-8 JSON contour descriptor
    payload  complex128, row-major, in this order:
             nodes (N), weights (N), L (n x ell), R (n x r),
             QL (ell x n x N), QR (n x r x N)
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .core import ContourQuadrature, EigenSolution, ProbingConfig, QuadratureDataTensors, custom

MAGIC = b"CEQD"
VERSION = 1
_HEADER = struct.Struct("<4sIQQQQ")


def _contour_from_descriptor(desc: dict, nodes, weights) -> ContourQuadrature:
    # the stored nodes and weights are authoritative; the descriptor restores metadata
    kind = desc.get("kind", "custom")
    if kind == "circle":
        center = complex(*desc["center"])
        return ContourQuadrature("circle", nodes, weights, center, float(desc["radius"]))
    if kind == "ellipse":
        center = complex(*desc["center"])
        return ContourQuadrature("ellipse", nodes, weights, center, semi_axes=tuple(desc["semi_axes"]))
    return custom(nodes, weights)


def save_quadrature_data(data: QuadratureDataTensors, path) -> None:
    n, ell, r, N = data.n, data.ell, data.r, data.N
    if data.QL.shape[1] != n or data.probes.L.shape[0] != n:
        raise ValueError("binary container stores square (NLEVP) data only")
    desc = json.dumps(data.contour.descriptor()).encode()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, ell, r, N))
        fh.write(struct.pack("<I", len(desc)))
        fh.write(desc)
        for a in (data.contour.nodes, data.contour.weights, data.probes.L, data.probes.R,
                  data.QL, data.QR):
            fh.write(np.ascontiguousarray(a, dtype="<c16").tobytes())


def load_quadrature_data(path) -> QuadratureDataTensors:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size + 4:
        raise ValueError("file too short for a quadrature container")
    magic, version, n, ell, r, N = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError("not a quadrature container (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported container version {version}")
    off = _HEADER.size
    (dlen,) = struct.unpack_from("<I", raw, off)
    off += 4
    desc = json.loads(raw[off:off + dlen].decode())
    off += dlen
    shapes = [(N,), (N,), (n, ell), (n, r), (ell, n, N), (n, r, N)]
    need = sum(int(np.prod(s)) for s in shapes) * 16
    if len(raw) - off != need:
        raise ValueError(f"payload size {len(raw) - off} does not match header ({need})")
    arrays = []
    for s in shapes:
        cnt = int(np.prod(s))
        arrays.append(np.frombuffer(raw, dtype="<c16", count=cnt, offset=off).reshape(s).astype(complex))
        off += cnt * 16
    nodes, weights, L, R, QL, QR = arrays
    return QuadratureDataTensors(QL=QL, QR=QR, contour=_contour_from_descriptor(desc, nodes, weights),
                                 probes=ProbingConfig(L, R))


def encode_complex(a) -> list:
    """Nested ``[re, im]`` pairs for JSON."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def save_tensors_json(data: QuadratureDataTensors, path) -> None:
    doc = {"schema": 1, "contour": data.contour.descriptor(),
           "nodes": encode_complex(data.contour.nodes), "weights": encode_complex(data.contour.weights),
           "L": encode_complex(data.probes.L), "R": encode_complex(data.probes.R),
           "QL": encode_complex(data.QL), "QR": encode_complex(data.QR)}
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_tensors_json(path) -> QuadratureDataTensors:
    with open(path) as fh:
        doc = json.load(fh)
    nodes, weights = decode_complex(doc["nodes"]), decode_complex(doc["weights"])
    return QuadratureDataTensors(
        QL=decode_complex(doc["QL"]), QR=decode_complex(doc["QR"]),
        contour=_contour_from_descriptor(doc["contour"], nodes, weights),
        probes=ProbingConfig(decode_complex(doc["L"]), decode_complex(doc["R"])))


def _g(x) -> str:
    return f"{x:.17g}"


def write_eigenvalues_csv(solution: EigenSolution, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["index", "re", "im", "residual"])
        for j, (z, res) in enumerate(zip(solution.eigenvalues, solution.residuals)):
            out.writerow([j, _g(z.real), _g(z.imag), _g(res)])


def write_residuals_csv(solution: EigenSolution, path) -> None:
    rel = solution.relative_residuals
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["index", "residual", "relative_residual", "boundary"])
        for j, res in enumerate(solution.residuals):
            b = bool(solution.boundary[j]) if solution.boundary is not None else False
            out.writerow([j, _g(res), _g(rel[j]) if rel is not None else "", int(b)])


def write_singular_values_csv(s, path, rank: int | None = None) -> None:
    s = np.asarray(s, dtype=float)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["index", "singular_value", "relative", "retained"])
        for j, v in enumerate(s):
            out.writerow([j, _g(v), _g(v / s[0] if s[0] else 0.0),
                          "" if rank is None else int(j < rank)])


def read_eigenvalues_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    lam = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows], dtype=complex)
    res = np.array([float(r["residual"]) for r in rows])
    return lam, res


def solution_to_dict(solution: EigenSolution) -> dict:
    return {
        "schema": 1,
        "method": solution.method,
        "eigenvalues": encode_complex(solution.eigenvalues),
        "residuals": [float(x) for x in solution.residuals],
        "rank": int(solution.rank_used),
        "singular_values": [float(x) for x in solution.singular_values],
        "flags": list(solution.flags),
        "dropped": int(solution.dropped),
        "approximate": bool(solution.approximate),
    }


def dump_pencil(path, **matrices) -> None:
    """Write named complex matrices as ``[re, im]`` pairs to JSON."""
    with open(path, "w") as fh:
        json.dump({"schema": 1, **{k: encode_complex(v) for k, v in matrices.items()}}, fh)


def load_pencil(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    return {k: decode_complex(v) for k, v in doc.items() if k != "schema"}
