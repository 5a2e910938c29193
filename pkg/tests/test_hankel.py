import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contourloewner.core import DenseProblem, ProbingConfig, circle, compute_quadrature_data
from contourloewner.hankel import (build_hankel, hankel_eigensolver, singular_value_report,
                                   solve_hankel)
from contourloewner.moments import markov_moments
from contourloewner.problems import ScalarProblem, make_planted_problem
from contourloewner.realize import RankPolicy, collinearity, match_eigenvalues, truncated_svd

ONE = ProbingConfig(np.ones((1, 1)), np.ones((1, 1)))


@pytest.fixture(scope="module")
def scalar03():
    return compute_quadrature_data(ScalarProblem(lambda z: z - 0.3), circle(0, 1, 128), ONE)


def test_scalar_block_hankel_layout(scalar03):
    pair, one = build_hankel(markov_moments(scalar03, 3), 2)
    np.testing.assert_allclose(pair.H, [[1, 0.3], [0.3, 0.09]], atol=1e-14)
    np.testing.assert_allclose(pair.Hs, [[0.3, 0.09], [0.09, 0.027]], atol=1e-14)


def test_K1_is_first_two_moments(scalar03):
    ms = markov_moments(scalar03, 1)
    pair, _ = build_hankel(ms, 1)
    np.testing.assert_array_equal(pair.H, ms.two_sided[0])
    np.testing.assert_array_equal(pair.Hs, ms.two_sided[1])


def test_insufficient_order_rejected(scalar03):
    with pytest.raises(ValueError):
        build_hankel(markov_moments(scalar03, 2), 2)


def test_hankel_structure_and_one_sided_blocks():
    prob = make_planted_problem(6, 3, seed=1)
    probes = ProbingConfig.random(6, 2, 2, seed=0)
    ms = prob.exact_markov(probes, 5)
    pair, one = build_hankel(ms, 3)
    blk = lambda M, i, j: M[2 * i:2 * i + 2, 2 * j:2 * j + 2]
    for i in range(3):
        for j in range(3):
            for i2 in range(3):
                j2 = i + j - i2
                if 0 <= j2 < 3:
                    np.testing.assert_array_equal(blk(pair.H, i, j), blk(pair.H, i2, j2))
    # first block row from Bdata, first block column from Cdata
    for j in range(3):
        np.testing.assert_allclose(blk(pair.H, 0, j), one.Bdata[2 * j:2 * j + 2] @ probes.R, atol=1e-13)
        np.testing.assert_allclose(blk(pair.H, j, 0), probes.L.conj().T @ one.Cdata[:, 2 * j:2 * j + 2],
                                   atol=1e-13)


def test_exact_rank_equals_m_with_single_probe():
    prob = make_planted_problem(7, 3, seed=5)
    ms = prob.exact_markov(ProbingConfig.random(7, 1, 1, seed=2), 5)
    pair, _ = build_hankel(ms, 3)
    s = np.linalg.svd(pair.H, compute_uv=False)
    assert np.sum(s > 1e-12 * s[0]) == 3


def test_hankel_equals_observability_times_reachability():
    prob = make_planted_problem(6, 3, seed=8)
    probes = ProbingConfig.random(6, 2, 2, seed=1)
    pair, _ = build_hankel(prob.exact_markov(probes, 3), 2)
    O, Rc, lam = prob.hankel_factors(probes, 2)
    np.testing.assert_allclose(pair.H, O @ Rc, atol=1e-13)
    np.testing.assert_allclose(pair.Hs, O @ np.diag(lam) @ Rc, atol=1e-13)


def test_scalar_solve(scalar03):
    sol = solve_hankel(*build_hankel(markov_moments(scalar03, 3), 2))
    assert sol.rank_used == 1
    assert sol.eigenvalues[0] == pytest.approx(0.3, abs=1e-13)
    assert collinearity(sol.right_eigenvectors[:, 0], [1.0]) == pytest.approx(1, abs=1e-14)


def test_diagonal_solve_keeps_interior_eigenvalue():
    prob = DenseProblem(lambda z: np.diag([z - 1, z - 3]), 2)
    d = compute_quadrature_data(prob, circle(0, 2, 128), ProbingConfig.identity(2))
    sol = hankel_eigensolver(d, 1, problem=prob)
    assert len(sol) == 1
    assert sol.eigenvalues[0] == pytest.approx(1, abs=1e-13)
    assert collinearity(sol.right_eigenvectors[:, 0], [1, 0]) > 1 - 1e-14


def test_zero_data_gives_empty_spectrum():
    prob = make_planted_problem(4, 1, seed=0)
    ms = prob.exact_markov(ProbingConfig.random(4, 1, 1), 1)
    zero = type(ms)(ms.left_blocks * 0, ms.right_blocks * 0, ms.two_sided * 0)
    sol = solve_hankel(*build_hankel(zero, 1))
    assert len(sol) == 0 and "empty-spectrum" in sol.flags


def test_singular_value_report_rank_one(scalar03):
    rep = singular_value_report(build_hankel(markov_moments(scalar03, 3), 2)[0])
    assert rep.singular_values[1] / rep.singular_values[0] <= 1e-14
    assert rep.rank == 1


def test_singular_value_report_exact_planted():
    prob = make_planted_problem(8, 3, seed=2)
    pair, _ = build_hankel(prob.exact_markov(ProbingConfig.random(8, 2, 2, seed=3), 3), 2)
    s = singular_value_report(pair).singular_values
    assert pair.H.shape == (4, 4)
    assert np.sum(s > 1e-12 * s[0]) == 3


@pytest.mark.parametrize("N", [16, 64])
def test_singular_value_report_from_quadrature(N):
    prob = make_planted_problem(8, 3, seed=2)
    d = compute_quadrature_data(prob, circle(0, 1, N), ProbingConfig.random(8, 2, 2, seed=3))
    pair, _ = build_hankel(markov_moments(d, 3), 2)
    rep = singular_value_report(pair, RankPolicy(rel_tol=1e-8))
    assert len(rep.gap_ratios) == 3
    if N >= 64:
        assert rep.rank == 3
        assert rep.largest_gap == 3


@pytest.mark.parametrize("m", [1, 2, 4])
def test_exact_recovery(m):
    prob = make_planted_problem(9, m, seed=10 + m)
    probes = ProbingConfig.random(9, m, m, seed=1)
    sol = solve_hankel(*build_hankel(prob.exact_markov(probes, 1), 1))
    rows, cols, err = match_eigenvalues(sol.eigenvalues, prob.eigenvalues)
    assert len(sol) == m and err.max() < 1e-10
    for i, j in zip(rows, cols):
        assert collinearity(sol.right_eigenvectors[:, i], prob.V[:, j]) >= 1 - 1e-8
        assert collinearity(sol.left_eigenvectors[:, i], prob.W[:, j]) >= 1 - 1e-8


def test_dependent_eigenvectors_need_more_blocks():
    prob = make_planted_problem(8, 3, vector_rank=2, seed=4)
    probes = ProbingConfig.random(8, 2, 2, seed=0)
    one = solve_hankel(*build_hankel(prob.exact_markov(probes, 1), 1))
    assert one.rank_used == 2
    two = solve_hankel(*build_hankel(prob.exact_markov(probes, 3), 2))
    assert two.rank_used == 3
    assert match_eigenvalues(two.eigenvalues, prob.eigenvalues)[2].max() < 1e-10


def test_ho_kalman_block_equivalence():
    prob = make_planted_problem(8, 3, seed=6)
    pair, _ = build_hankel(prob.exact_markov(ProbingConfig.random(8, 2, 2, seed=2), 3), 2)
    svd = truncated_svd(pair.H, RankPolicy())
    B = (svd.X.conj().T @ pair.Hs @ svd.Y) / svd.s
    U, s, Vh = np.linalg.svd(pair.H)
    s_pinv = np.where(s > 1e-10 * s[0], 1 / np.where(s > 0, s, 1), 0.0)
    full = (U.conj().T @ pair.Hs @ Vh.conj().T) * s_pinv
    np.testing.assert_allclose(full[:3, :3], B, atol=1e-12)


@given(st.integers(0, 10_000))
@settings(max_examples=20, deadline=None)
def test_similarity_invariance_under_unitary_rotation(seed):
    prob = make_planted_problem(6, 3, seed=seed % 50)
    pair, _ = build_hankel(prob.exact_markov(ProbingConfig.random(6, 3, 3, seed=seed), 1), 1)
    svd = truncated_svd(pair.H, RankPolicy())
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    # X -> XQ, Y -> YQ keeps H = (XQ)(Q^* Sigma Q)(YQ)^*; B is then similar to the original
    X, Y, S = svd.X @ Q, svd.Y @ Q, Q.conj().T @ np.diag(svd.s) @ Q
    B0 = (svd.X.conj().T @ pair.Hs @ svd.Y) / svd.s
    B1 = X.conj().T @ pair.Hs @ Y @ np.linalg.inv(S)
    e0 = np.sort_complex(np.linalg.eigvals(B0))
    e1 = np.linalg.eigvals(B1)
    assert match_eigenvalues(e1, e0)[2].max() < 1e-10
