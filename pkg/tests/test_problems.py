import numpy as np
import pytest
import scipy.io
from hypothesis import given, settings, strategies as st

from contourloewner.core import ProbingConfig, circle, compute_quadrature_data
from contourloewner.hankel import build_hankel
from contourloewner.problems import (delay_eigen_oracle, delay_reference_disk, gun_form_terms,
                                     load_matrix_problem, make_delay_problem,
                                     make_planted_problem)


# ---------------------------------------------------------------------------
# delay problem and oracle


def test_delay_defaults():
    p = make_delay_problem()
    assert p.dim == 50 and p.c == 0.015 and p.tau == 8
    assert p.e_values[0] == pytest.approx(-1e-4)
    assert p.e_values[-1] == pytest.approx(-1e10)
    assert np.all(np.diff(np.log10(-p.e_values)) > 0)


@pytest.mark.parametrize("kw", [dict(n=0), dict(e_min_mag=0.0), dict(e_min_mag=10.0, e_max_mag=1.0)])
def test_delay_invalid_ranges(kw):
    with pytest.raises(ValueError):
        make_delay_problem(**kw)


def test_delay_scalar_value():
    p = make_delay_problem(n=1, e_min_mag=1.0, e_max_mag=1.0)
    assert p.matrix(0.5)[0, 0] == pytest.approx(1.5 + 0.015 * np.exp(-4), abs=1e-15)
    assert p.matrix(0.5)[0, 0].real == pytest.approx(1.5002747, abs=1e-7)


def test_delay_without_delay_term_is_linear():
    p = make_delay_problem(c=0.0, n=6, e_min_mag=0.1, e_max_mag=10.0)
    orc = delay_eigen_oracle(p, -1.0, 1.5)
    inside = p.e_values[np.abs(p.e_values + 1.0) <= 1.5]
    np.testing.assert_allclose(np.sort(orc.eigenvalues.real), np.sort(inside), atol=1e-14)
    assert not orc.mismatched


def test_delay_oracle_scalar_root_residual():
    p = make_delay_problem(n=1, e_min_mag=0.1, e_max_mag=0.1)
    orc = delay_eigen_oracle(p, 0.0, 1.0)
    assert len(orc.eigenvalues) >= 1
    for lam in orc.eigenvalues:
        assert abs(lam + 0.015 * np.exp(-8 * lam) + 0.1) <= 1e-12
    assert np.any(np.abs(orc.eigenvalues.imag) < 1e-14)


@pytest.fixture(scope="module")
def delay_disk():
    p = make_delay_problem()
    center, radius = delay_reference_disk(p, 11, ratio=0.7)
    return p, center, radius, delay_eigen_oracle(p, center, radius)


def test_reference_disk_holds_eleven_roots(delay_disk):
    p, center, radius, orc = delay_disk
    assert len(orc.eigenvalues) == 11
    assert sum(orc.counts) == 11 and not orc.mismatched


def test_oracle_roots_satisfy_scalar_equations(delay_disk):
    p, _, _, orc = delay_disk
    for lam, i in zip(orc.eigenvalues, orc.components):
        assert abs(lam + p.c * np.exp(-p.tau * lam) - p.e_values[i]) <= 1e-12


def test_oracle_eigenvectors_are_canonical(delay_disk):
    p, _, _, orc = delay_disk
    V = orc.eigenvectors(p.dim)
    for j, lam in enumerate(orc.eigenvalues):
        assert np.linalg.norm(p.apply(lam, V[:, [j]])) <= 1e-12


def test_reference_disk_ratio_validation():
    with pytest.raises(ValueError):
        delay_reference_disk(make_delay_problem(), 11, ratio=1.5)


# ---------------------------------------------------------------------------
# planted problems


def test_planted_zero_remainder_first_moment():
    prob = make_planted_problem(5, 2, eigenvalues=[0.5, -0.3j], remainder="zero", seed=0)
    A0 = prob.exact_markov(ProbingConfig.identity(5), 0).two_sided[0]
    np.testing.assert_allclose(A0, prob.V @ prob.W.conj().T, atol=1e-15)
    d = compute_quadrature_data(prob, circle(0, 1, 64), ProbingConfig.identity(5))
    from contourloewner.moments import markov_moments

    np.testing.assert_allclose(markov_moments(d, 0).two_sided[0], A0, atol=1e-13)


def test_planted_dependent_vectors_single_probe_rank():
    prob = make_planted_problem(6, 3, vector_rank=1, seed=2)
    probes = ProbingConfig.random(6, 1, 1, seed=0)
    ms = prob.exact_markov(probes, 5)
    rank = lambda M: np.sum(np.linalg.svd(M, compute_uv=False) > 1e-12 * np.linalg.norm(M, 2))
    assert rank(build_hankel(ms, 1)[0].H) == 1
    assert rank(build_hankel(ms, 3)[0].H) == 3


@pytest.mark.parametrize("kind", ["polynomial", "rational"])
def test_remainder_integrates_to_zero(kind):
    prob = make_planted_problem(6, 2, remainder=kind, seed=1)
    c = circle(0, 1, 64)
    total = sum(w * prob.remainder.value(z) for z, w in zip(c.nodes, c.weights))
    assert np.max(np.abs(total)) <= 1e-12


def test_planted_duplicate_eigenvalues_rejected():
    with pytest.raises(ValueError):
        make_planted_problem(5, 2, eigenvalues=[0.1, 0.1])


def test_planted_is_seeded():
    a, b = make_planted_problem(7, 3, seed=4), make_planted_problem(7, 3, seed=4)
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
    np.testing.assert_array_equal(a.V, b.V)
    np.testing.assert_array_equal(a.W, b.W)
    z = 0.2 + 0.7j
    np.testing.assert_array_equal(a.resolvent(z), b.resolvent(z))


def test_planted_eigenvalues_inside_region():
    prob = make_planted_problem(8, 5, center=2 - 1j, radius=0.5, seed=3)
    assert np.all(np.abs(prob.eigenvalues - (2 - 1j)) <= 0.25 + 1e-15)


def test_rational_remainder_pole_inside_rejected():
    prob = make_planted_problem(5, 2, remainder="rational", remainder_pole_ratio=3.0, seed=0)
    with pytest.raises(ValueError):
        prob.check_contour(circle(0, 4, 16))


@given(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
@settings(max_examples=30, deadline=None)
def test_planted_matrix_inverts_resolvent(z):
    prob = make_planted_problem(6, 2, seed=8)
    if np.min(np.abs(z - prob.eigenvalues)) < 1e-2 or abs(z) > 1.9:
        return
    T = prob.matrix(z)
    np.testing.assert_allclose(T @ prob.resolvent(z), np.eye(6), atol=1e-8 * np.linalg.cond(T))


def test_oracle_closure_for_loewner_entries():
    from contourloewner.loewner_multi import build_multipoint, default_scheme

    prob = make_planted_problem(8, 3, seed=2)
    probes = ProbingConfig.random(8, 2, 2, seed=1)
    Ns, errs = (16, 32, 64), []
    for N in Ns:
        c = circle(0, 1, N)
        scheme = default_scheme(c, probes, 2, 2)
        exact = prob.exact_multipoint(scheme, probes)
        got = build_multipoint(compute_quadrature_data(prob, c, probes), scheme)
        errs.append(np.max(np.abs(got.Lmat - exact.Lmat)))
    # points at 4/3 of the radius give rate 3/4; derivative entries carry an extra factor N
    for i in range(2):
        growth = Ns[i + 1] / Ns[i]
        assert errs[i + 1] <= 1.5 * growth * 0.75 ** (Ns[i + 1] - Ns[i]) * errs[i]


# ---------------------------------------------------------------------------
# Matrix Market combiner


def test_linear_combiner_from_files(tmp_path):
    A = np.array([[2.0, 1.0, 0.0], [0.0, -1.0, 0.5], [0.0, 0.0, 3.0]])
    scipy.io.mmwrite(tmp_path / "A.mtx", A)
    scipy.io.mmwrite(tmp_path / "I.mtx", scipy.sparse.identity(3, format="coo"))
    terms = [{"f": "z", "matrix": "I.mtx"}, {"f": "1", "coef": -1.0, "matrix": "A.mtx"}]
    prob = load_matrix_problem(terms, base_dir=str(tmp_path))
    z = 0.7 - 0.2j
    np.testing.assert_allclose(prob.matrix(z), z * np.eye(3) - A, atol=1e-15)


def test_combiner_from_json_manifest(tmp_path):
    import json

    scipy.io.mmwrite(tmp_path / "A.mtx", np.diag([1.0, 2.0]))
    (tmp_path / "t.json").write_text(json.dumps(
        {"terms": [{"f": {"poly": [0, 0, 1]}, "matrix": [[1, 0], [0, 1]]},
                   {"f": {"exp_scale": [0.5, 2.0]}, "matrix": "A.mtx"}]}))
    prob = load_matrix_problem(str(tmp_path / "t.json"))
    z = 0.3
    np.testing.assert_allclose(prob.matrix(z), z ** 2 * np.eye(2) + 0.5 * np.exp(-0.6) * np.diag([1, 2]))


def test_gun_form_accepted_and_cut_warning():
    rng = np.random.default_rng(0)
    K, M, E1, E2 = (rng.standard_normal((4, 4)) for _ in range(4))
    prob = load_matrix_problem(gun_form_terms(K, M, E1, E2))
    z = 140.0 ** 2 + 10j
    expect = K - z * M + 1j * np.sqrt(z) * E1 + 1j * np.sqrt(z - 108.8774 ** 2) * E2
    np.testing.assert_allclose(prob.matrix(z), expect, rtol=1e-13)
    assert np.all(np.isfinite(prob.matrix(100.0 + 1j)))
    with pytest.warns(RuntimeWarning, match="branch cut"):
        prob.check_contour(circle(108.8774 ** 2 - 10, 5, 8))


def test_empty_combiner_rejected():
    with pytest.raises(ValueError):
        load_matrix_problem([])


def test_combiner_dimension_mismatch():
    with pytest.raises(ValueError):
        load_matrix_problem([{"f": "1", "matrix": np.eye(2)}, {"f": "z", "matrix": np.eye(3)}])


def test_unknown_function_rejected():
    with pytest.raises(ValueError):
        load_matrix_problem([{"f": "cosh", "matrix": np.eye(2)}])
