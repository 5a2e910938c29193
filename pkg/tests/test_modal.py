import numpy as np
import pytest

from contourloewner.core import NodeSingularError, ProbingConfig, circle
from contourloewner.loewner_multi import InterpolationScheme, default_scheme
from contourloewner.modal import (LtiTransferSource, ModalRom, compute_transfer_data,
                                  exact_modal_truncation, modal_truncate, sample_retained)


def diag_source(poles):
    poles = np.asarray(poles, dtype=complex)
    return LtiTransferSource.from_state_space(np.diag(poles), np.eye(len(poles)), np.eye(len(poles)))


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_scalar_partial_fraction_filtering():
    src = LtiTransferSource(lambda z: 1 / (z - 1) + 1 / (z - 10), 1, 1)
    one = np.ones((1, 1))
    lw = sample_retained(src, circle(0, 2, 128), InterpolationScheme([5.0], [-5.0], one, one),
                         ProbingConfig(one, one))
    assert lw.Ldm[0, 0] == pytest.approx(0.25, abs=1e-14)
    assert lw.Rdm[0, 0] == pytest.approx(-1 / 6, abs=1e-14)


def test_diagonal_samples_keep_retained_term_only():
    src = diag_source([1.0, 10.0])
    probes = ProbingConfig.identity(2)
    scheme = InterpolationScheme([3j, -3j], [3.0, -3.0], np.eye(2), np.eye(2))
    lw = sample_retained(src, circle(0, 2, 64), scheme, probes)
    Gr = lambda z: np.diag([1 / (z - 1), 0])
    np.testing.assert_allclose(lw.Ldm, np.vstack([Gr(3j)[0], Gr(-3j)[1]]), atol=1e-10)
    np.testing.assert_allclose(lw.Rdm, np.column_stack([Gr(3.0)[:, 0], Gr(-3.0)[:, 1]]), atol=1e-10)


def test_empty_region_gives_vanishing_samples():
    src = diag_source([1.0, 10.0])
    probes = ProbingConfig.identity(2)
    c = circle(5, 1, 256)
    scheme = default_scheme(c, probes, 1, 2, hermite=False)
    lw = sample_retained(src, c, scheme, probes)
    assert np.max(np.abs(lw.Ldm)) < 1e-12 and np.max(np.abs(lw.Rdm)) < 1e-12


def test_state_space_evaluator():
    rng = np.random.default_rng(0)
    A, B, C = rng.standard_normal((4, 4)), rng.standard_normal((4, 2)), rng.standard_normal((3, 4))
    E = np.eye(4) + 0.1 * rng.standard_normal((4, 4))
    src = LtiTransferSource.from_state_space(A, B, C, E)
    z = 0.3 + 1.1j
    np.testing.assert_allclose(src(z), C @ np.linalg.inv(z * E - A) @ B, atol=1e-13)
    assert src(z).shape == (3, 2)


def test_diagonal_modal_truncation():
    src = diag_source([1.0, 10.0])
    probes = ProbingConfig.identity(2)
    c = circle(0, 2, 128)
    rom = modal_truncate(src, c, default_scheme(c, probes, 1, 2, hermite=False), probes)
    assert rom.order == 1
    assert rom.poles[0] == pytest.approx(1.0, abs=1e-12)
    residue = np.outer(rom.c[:, 0], rom.b[:, 0].conj())
    np.testing.assert_allclose(residue, np.diag([1, 0]), atol=1e-12)
    assert np.linalg.norm(rom.b[:, 0]) == pytest.approx(1.0)


@pytest.fixture(scope="module")
def stable30():
    rng = np.random.default_rng(3)
    center, radius = -1.0, 0.5
    inner = center + 0.25 * np.sqrt(rng.random(5)) * np.exp(2j * np.pi * rng.random(5))
    outer = -1.5 - 3 * rng.random(25) + 4j * (rng.random(25) - 0.5)
    outer = np.where(np.abs(outer - center) < 1.0, outer - 1.0, outer)
    lam = np.concatenate([inner, outer])
    X = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    A = X @ np.diag(lam) @ np.linalg.inv(X)
    B = rng.standard_normal((30, 2))
    C = rng.standard_normal((3, 30))
    src = LtiTransferSource.from_state_space(A, B, C)
    c = circle(center, radius, 128)
    probes = ProbingConfig.random(3, 2, 2, seed=1, n_in=2)
    rom = modal_truncate(src, c, default_scheme(c, probes, 3, 2), probes)
    return src, c, rom, lam, rng.standard_normal(20) * 2 + 1j * rng.standard_normal(20) * 2


def test_random_system_matches_spectral_truncation(stable30):
    src, c, rom, lam, tests = stable30
    ref = exact_modal_truncation(src, c)
    assert rom.order == ref.order == 5
    for z in tests:
        assert rel(rom(z), ref(z)) <= 1e-8


def test_retained_part_equals_full_minus_tail(stable30):
    src, c, rom, lam, tests = stable30
    A, B, C, E = src.state_space
    w, VL, VR = __import__("scipy.linalg").linalg.eig(A, E, left=True, right=True)
    out = ~np.array([c.contains(z, closed=False) for z in w])
    denom = np.einsum("nj,nk,kj->j", VL.conj(), E, VR)
    for z in tests:
        tail = ((C @ VR[:, out]) / (denom[out] * (z - w[out]))) @ (VL[:, out].conj().T @ B)
        assert rel(rom(z), src(z) - tail) <= 1e-8


def test_poles_inside_contour(stable30):
    _, c, rom, _, _ = stable30
    # the offset is negative inside; tiny outward excursions up to 1e-8 radius are tolerated
    assert max(c.boundary_offset(p) for p in rom.poles) <= 1e-8 * c.radius
    assert not any(f.startswith("poles-outside") for f in rom.flags)


def test_additivity_over_disjoint_regions():
    src = diag_source([1.0, 10.0, -5.0])
    probes = ProbingConfig.identity(3)
    c1, c2, both = circle(1, 1, 128), circle(10, 1, 128), circle(5.5, 6, 256)
    roms = [modal_truncate(src, c, default_scheme(c, probes, 1, 3, hermite=False), probes)
            for c in (c1, c2, both)]
    for z in (0.3j, 4 + 2j, -2 - 1j):
        assert rel(roms[0](z) + roms[1](z), roms[2](z)) <= 1e-8


def test_underresolved_scheme_warns():
    src = diag_source([0.1, 0.2j, -0.3, 5.0])
    probes = ProbingConfig.identity(4)
    c = circle(0, 1, 128)
    scheme = default_scheme(c, probes, 1, 2, hermite=False)
    with pytest.warns(RuntimeWarning, match="under-resolved"):
        rom = modal_truncate(src, c, scheme, probes)
    assert rom.order <= 2


def test_large_sample_warns():
    src = diag_source([1.0 + 1e-6])
    with pytest.warns(RuntimeWarning, match="median"):
        compute_transfer_data(src, circle(0, 1, 32), ProbingConfig.identity(1))


def test_pole_on_node_raises_node_error():
    src = diag_source([1.0])
    with pytest.raises(NodeSingularError) as info:
        compute_transfer_data(src, circle(0, 1, 4), ProbingConfig.identity(1))
    assert info.value.index == 4


def test_rom_json_round_trip(tmp_path):
    rom = ModalRom(np.array([1 + 2j, -0.5]), np.arange(6).reshape(3, 2) * (1 + 1j),
                   np.array([[1, 0], [0, 1j]]))
    path = tmp_path / "rom.json"
    rom.save(path)
    back = ModalRom.load(path)
    np.testing.assert_array_equal(back.poles, rom.poles)
    np.testing.assert_array_equal(back.c, rom.c)
    np.testing.assert_array_equal(back.b, rom.b)
    assert back(0.3) == pytest.approx(rom(0.3))
