import struct

import numpy as np
import pytest

from contourloewner.core import EigenSolution, ProbingConfig, circle, compute_quadrature_data, ellipse
from contourloewner.io import (decode_complex, dump_pencil, encode_complex, load_pencil,
                               load_quadrature_data, load_tensors_json, read_eigenvalues_csv,
                               save_quadrature_data, save_tensors_json, solution_to_dict,
                               write_eigenvalues_csv, write_residuals_csv,
                               write_singular_values_csv)
from contourloewner.problems import make_planted_problem


@pytest.fixture
def data():
    prob = make_planted_problem(6, 2, seed=1)
    return compute_quadrature_data(prob, circle(0.1 - 0.2j, 1.0, 16), ProbingConfig.random(6, 2, 3, seed=0))


def assert_same(a, b):
    for name in ("QL", "QR"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    np.testing.assert_array_equal(a.probes.L, b.probes.L)
    np.testing.assert_array_equal(a.probes.R, b.probes.R)
    np.testing.assert_array_equal(a.contour.nodes, b.contour.nodes)
    np.testing.assert_array_equal(a.contour.weights, b.contour.weights)


def test_binary_round_trip_is_bit_exact(data, tmp_path):
    path = tmp_path / "d.ceqd"
    save_quadrature_data(data, path)
    back = load_quadrature_data(path)
    assert_same(data, back)
    assert back.contour.kind == "circle"
    assert back.contour.center == data.contour.center and back.contour.radius == 1.0


def test_binary_ellipse_descriptor(tmp_path):
    prob = make_planted_problem(4, 1, seed=0)
    d = compute_quadrature_data(prob, ellipse(0, (1.0, 0.6), 12), ProbingConfig.identity(4))
    save_quadrature_data(d, tmp_path / "e.ceqd")
    back = load_quadrature_data(tmp_path / "e.ceqd")
    assert back.contour.kind == "ellipse"
    assert_same(d, back)


def test_binary_header_layout(data, tmp_path):
    path = tmp_path / "d.ceqd"
    save_quadrature_data(data, path)
    raw = path.read_bytes()
    magic, version, n, ell, r, N = struct.unpack_from("<4sIQQQQ", raw, 0)
    assert (magic, version, n, ell, r, N) == (b"CEQD", 1, 6, 2, 3, 16)


def test_bad_magic_version_and_size(data, tmp_path):
    path = tmp_path / "d.ceqd"
    save_quadrature_data(data, path)
    raw = bytearray(path.read_bytes())

    bad = tmp_path / "bad.ceqd"
    bad.write_bytes(b"XXXX" + bytes(raw[4:]))
    with pytest.raises(ValueError, match="magic"):
        load_quadrature_data(bad)

    bumped = bytearray(raw)
    struct.pack_into("<I", bumped, 4, 2)
    bad.write_bytes(bytes(bumped))
    with pytest.raises(ValueError, match="version"):
        load_quadrature_data(bad)

    bad.write_bytes(bytes(raw[:-16]))
    with pytest.raises(ValueError, match="payload size"):
        load_quadrature_data(bad)

    bad.write_bytes(bytes(raw[:10]))
    with pytest.raises(ValueError, match="too short"):
        load_quadrature_data(bad)


def test_json_round_trip(data, tmp_path):
    save_tensors_json(data, tmp_path / "d.json")
    assert_same(data, load_tensors_json(tmp_path / "d.json"))


def test_complex_encoding():
    a = np.array([[1 + 2j, -0.5], [0, 3e-300j]])
    assert encode_complex(a)[0][0] == [1.0, 2.0]
    np.testing.assert_array_equal(decode_complex(encode_complex(a)), a)


def make_solution():
    return EigenSolution(eigenvalues=np.array([0.1 + 0.2j, -1 / 3]), right_eigenvectors=np.eye(2),
                         residuals=np.array([1e-15, 2.5e-13]), relative_residuals=np.array([1e-16, 3e-14]),
                         singular_values=np.array([2.0, 0.5, 1e-17]), rank_used=2, method="hankel",
                         boundary=np.array([False, True]))


def test_eigenvalue_csv_round_trip(tmp_path):
    sol = make_solution()
    write_eigenvalues_csv(sol, tmp_path / "e.csv")
    lam, res = read_eigenvalues_csv(tmp_path / "e.csv")
    np.testing.assert_array_equal(lam, sol.eigenvalues)
    np.testing.assert_array_equal(res, sol.residuals)


def test_residual_and_singular_value_csv(tmp_path):
    sol = make_solution()
    write_residuals_csv(sol, tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "index,residual,relative_residual,boundary"
    assert lines[2].endswith(",1")
    write_singular_values_csv(sol.singular_values, tmp_path / "s.csv", rank=2)
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert len(lines) == 4 and lines[1].endswith(",1,1") and lines[3].endswith(",0")


def test_solution_dict():
    doc = solution_to_dict(make_solution())
    assert doc["schema"] == 1 and doc["rank"] == 2 and doc["method"] == "hankel"
    assert doc["eigenvalues"][1] == [-1 / 3, 0.0]


def test_pencil_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    dump_pencil(tmp_path / "p.json", A=A, B=np.eye(3))
    back = load_pencil(tmp_path / "p.json")
    assert set(back) == {"A", "B"}
    np.testing.assert_array_equal(back["A"], A)
