import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from haarlab.ensembles import RngStream, gaussian_complex_matrix, haar_orthogonal, so2
from haarlab.lemmas import (
    SPHERE_C1,
    BlockMatrix2,
    HypothesisError,
    LemmaReport,
    det_trig_coefficients,
    gaussian_map_norm,
    identity_perturbation_instance,
    low_dim_theorem_check,
    merge_reports,
    null_covector,
    quadratic_form_sides,
    random_gaussian_map,
    remez_convex_check,
    remez_convex_instance,
    remez_sphere_check,
    remez_torus_check,
    sample_s_j,
    trig_identity_error,
    vanishing_determinant_scan,
    verify_breaking_orthogonality,
    verify_gaussian_perturbation,
    verify_identity_perturbation,
    verify_poorly_invertible_minor,
    verify_quadratic_form,
    verify_well_invertible_minor,
)
from haarlab.linalg import LinAlgError
from haarlab.smin import counterexample_matrix

ROOT = RngStream(31337)


# --- report plumbing ----------------------------------------------------------

def test_report_counts_and_json():
    r = LemmaReport("x")
    r.record(0.5, True, a=1)
    r.record(-0.25, False, a=2)
    r.skip(3)
    assert (r.instances, r.violations, r.skipped) == (2, 1, 3)
    assert r.max_slack == -0.25 and r.worst_case["a"] == 2
    assert not r.passed and r.summary_line().startswith("FAIL x")
    assert set(r.to_dict()) == {"lemma_id", "instances", "skipped", "violations", "max_slack", "worst_case"}
    merged = merge_reports("y", [r, LemmaReport("z")])
    assert merged.violations == 1 and merged.instances == 2


def test_block_matrix_roundtrip():
    A = gaussian_complex_matrix(6, 6, RngStream(1))
    b = BlockMatrix2.split(A, 2)
    assert b.k == 2 and b.n == 6
    assert np.array_equal(b.assemble(), A)
    with pytest.raises(ValueError):
        BlockMatrix2(np.eye(2), np.eye(2), np.eye(3), np.eye(3))


# --- identity perturbation ----------------------------------------------------

def test_identity_perturbation_zero():
    lhs, rhs, unit_err, W = identity_perturbation_instance(np.zeros((4, 4)), 0.3)
    assert lhs == 0 and rhs == 0 and np.allclose(W, np.eye(4))


def test_identity_perturbation_matches_scipy_polar():
    from haarlab.ensembles import skew_hermitian_bordered

    S = skew_hermitian_bordered(7, RngStream(3))
    _, _, _, W = identity_perturbation_instance(S, 0.05)
    U, _ = scipy.linalg.polar(np.eye(7) + 0.05 * S)
    assert np.allclose(W, U, atol=1e-12)


@pytest.mark.parametrize("field", ["complex", "real"])
def test_identity_perturbation_n6(field):
    r = verify_identity_perturbation(6, 0.01, 1000, ROOT.child(6), field)
    assert r.passed and r.instances + r.skipped == 1000


def test_identity_perturbation_skips_large_eps():
    r = verify_identity_perturbation(20, 1.0, 50, ROOT, "real")
    assert r.skipped == 50 and r.instances == 0


# --- null covector and quadratic form -----------------------------------------

def test_null_covector_identity():
    h = null_covector(np.eye(3))
    assert abs(abs(h[0]) - 1) < 1e-14 and np.allclose(h[1:], 0, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**40), n=st.integers(2, 12))
def test_null_covector_residual(seed, n):
    A = gaussian_complex_matrix(n, n, RngStream(seed))
    h = null_covector(A)
    assert abs(np.linalg.norm(h) - 1) < 1e-12
    assert np.max(np.abs(h @ A[:, 1:])) <= 1e-9 * np.linalg.norm(A, 2)


def test_null_covector_phase_invariance():
    A = gaussian_complex_matrix(6, 6, RngStream(8))
    h = null_covector(A)
    ref = scipy.linalg.null_space(A[:, 1:].T)[:, 0]
    assert abs(abs(h @ A[:, 0]) - abs(ref @ A[:, 0])) <= 1e-9


def test_null_covector_rank_deficient():
    A = gaussian_complex_matrix(5, 5, RngStream(2))
    A[:, 2] = A[:, 1]
    with pytest.raises(LinAlgError):
        null_covector(A)


def test_quadratic_form_trivial():
    lhs, rhs = quadratic_form_sides(np.eye(4))
    assert lhs == pytest.approx(1.0, abs=1e-14) and rhs == pytest.approx(1.0, abs=1e-14)


def test_quadratic_form_y_zero():
    A = gaussian_complex_matrix(5, 5, RngStream(4))
    A[0, 1:] = 0
    lhs, rhs = quadratic_form_sides(A)
    assert lhs == pytest.approx(abs(A[0, 0]), rel=1e-10)
    assert rhs == pytest.approx(abs(A[0, 0]), rel=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_quadratic_form_random_n8(seed):
    assert verify_quadratic_form(gaussian_complex_matrix(8, 8, RngStream(seed)), 1e-8).passed


def test_quadratic_form_singular_b():
    A = np.eye(3, dtype=complex)
    A[2, 2] = 0
    with pytest.raises(HypothesisError):
        quadratic_form_sides(A)


# --- block minors -------------------------------------------------------------

def test_sample_s_j_constraint():
    x = sample_s_j(10, 3, 500, RngStream(1))
    assert np.allclose(np.linalg.norm(x, axis=0), 1, atol=1e-12)
    head = np.sum(np.abs(x[:3]) ** 2, axis=0)
    assert np.all(head >= 1 / 10 - 1e-12)
    assert head.min() == pytest.approx(0.1) and head.max() == pytest.approx(1.0)


def test_well_invertible_identity():
    r = verify_well_invertible_minor(np.eye(6), 1.0, 1.0, 200, RngStream(1))
    assert r.extras["bound"] == pytest.approx(1 / (2 * math.sqrt(6)))
    assert r.passed and r.max_slack == pytest.approx(1 - 1 / (2 * math.sqrt(6)))


def test_well_invertible_random_n10():
    H = gaussian_complex_matrix(10, 10, RngStream(5))
    b = BlockMatrix2.split(H, 3)
    L1 = 1 / np.linalg.svd(b.bottom_right, compute_uv=False)[-1]
    L2 = np.linalg.norm(b.top_right, 2)
    assert verify_well_invertible_minor(b, L1, L2, 10_000, RngStream(6)).passed


def test_well_invertible_head_supported():
    H = gaussian_complex_matrix(10, 10, RngStream(7))
    b = BlockMatrix2.split(H, 3)
    L1 = 1 / np.linalg.svd(b.bottom_right, compute_uv=False)[-1]
    L2 = np.linalg.norm(b.top_right, 2)
    bound = verify_well_invertible_minor(b, L1, L2, 10, RngStream(8)).extras["bound"]
    x = np.zeros((10, 200), dtype=complex)
    x[:3] = gaussian_complex_matrix(3, 200, RngStream(9))
    x /= np.linalg.norm(x, axis=0)
    assert np.all(np.linalg.norm(H @ x, axis=0) - bound >= 0)


def test_well_invertible_precondition():
    with pytest.raises(HypothesisError):
        verify_well_invertible_minor(4 * np.eye(6), 0.1, 1.0, 10, RngStream(1))


def _poor_instance(n=10, L=1000.0, seed=0, singular=False):
    H = gaussian_complex_matrix(n, n, RngStream(seed))
    U, s, Vh = np.linalg.svd(H[1:, 1:])
    s[-1] = 0.0 if singular else 0.1 / L
    H[1:, 1:] = (U * s) @ Vh
    return H


def test_poorly_invertible_deterministic_implication():
    r = verify_poorly_invertible_minor(_poor_instance(), 0.01, 1.0, 1000.0, RngStream(2), draws=500)
    assert r.passed
    assert r.extras["small_ball_frequency"] <= r.extras["small_ball_bound"]


def test_poorly_invertible_l_infinity():
    r = verify_poorly_invertible_minor(_poor_instance(singular=True), 0.01, 1.0, math.inf, RngStream(3), draws=300)
    assert r.extras["bound"] == pytest.approx(0.01 / math.sqrt(10))
    assert r.passed


def test_poorly_invertible_vacuous_bound():
    r = verify_poorly_invertible_minor(_poor_instance(), 1e-4, 1.0, 1000.0, RngStream(4), draws=100)
    assert r.extras["bound"] <= 0 and r.passed


def test_poorly_invertible_precondition():
    with pytest.raises(HypothesisError):
        verify_poorly_invertible_minor(np.eye(5), 0.01, 1.0, 1000.0, RngStream(1), draws=5)


# --- tail lemmas ----------------------------------------------------------------

def test_gaussian_map_norm_scaling():
    F = random_gaussian_map(4, RngStream(1), K=2.5)
    assert gaussian_map_norm(F) == pytest.approx(2.5)


def test_gaussian_perturbation_zero_map():
    r = verify_gaussian_perturbation(np.zeros((3, 3, 3)), [0.1, 0.5, 0.9], 200, RngStream(2))
    assert r.passed and not r.extras["tail"].hits.any()


def test_gaussian_perturbation_decay():
    F = random_gaussian_map(6, RngStream(3), K=1.0)
    r = verify_gaussian_perturbation(F, [1e-4, 1e-3, 1e-2, 1e-1], 10_000, RngStream(4), threads=4)
    assert r.passed and r.extras["tail"].p_hat[0] <= 0.05


def test_breaking_orthogonality_example():
    r = verify_breaking_orthogonality(np.eye(2), [1.0, 2.0], [1e-3, 1e-2, 1e-1], 10_000, RngStream(5), threads=4)
    assert r.passed and r.extras["tail"].p_hat[0] <= 0.05


def test_breaking_orthogonality_rejects_equal_diagonal():
    with pytest.raises(HypothesisError):
        verify_breaking_orthogonality(np.eye(2), [1.0, 1.0], [0.1], 10, RngStream(1))


# --- trig coefficients and vanishing determinants ------------------------------

def test_trig_coefficients_examples():
    assert det_trig_coefficients(np.zeros((2, 2))) == (1, 0, 0)
    assert det_trig_coefficients(-np.eye(2)) == (2, -2, 0)
    k0, k1, k2 = det_trig_coefficients(counterexample_matrix(100.0))
    assert abs(k0 - 1) < 1e-9 and k1 == 0 and k2 == 0
    with pytest.raises(ValueError):
        det_trig_coefficients(np.eye(3))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**40))
def test_trig_identity_property(seed):
    g = RngStream(seed).normal((2, 2, 2))
    assert trig_identity_error(3 * (g[0] + 1j * g[1])) <= 1e-10


def test_det_of_minus_identity_plus_rotation():
    sup = max(abs(np.linalg.det(-np.eye(2) + so2(p))) for p in np.linspace(0, 2 * math.pi, 65))
    assert sup == pytest.approx(4.0)


def test_vanishing_determinant_orthogonal_b():
    sup_det, defect = vanishing_determinant_scan(haar_orthogonal(3, RngStream(1)))
    assert defect <= 1e-12 and sup_det > 0


def test_vanishing_determinant_counterexample():
    B = counterexample_matrix(100.0)
    sup_det, defect = vanishing_determinant_scan(B)
    assert sup_det == pytest.approx(1.0, abs=1e-8) and defect == pytest.approx(1.0)
    assert defect <= 1.0 * sup_det * np.linalg.norm(B, 2)


def test_vanishing_determinant_two_identity():
    sup_det, defect = vanishing_determinant_scan(2 * np.eye(2))
    assert defect == pytest.approx(3.0) and sup_det == pytest.approx(9.0)
    assert defect / (sup_det * 2) <= 1


def test_vanishing_determinant_hypothesis():
    with pytest.raises(HypothesisError):
        vanishing_determinant_scan(0.1 * np.eye(2))


# --- Remez ------------------------------------------------------------------------

def test_remez_constant_polynomial():
    sup_v, sup_e, factor = remez_convex_instance(lambda x: np.ones(len(x)), 0, [(-1, 1)], [(-1, 0)])
    assert sup_v == sup_e == 1 and factor >= 1


def test_remez_convex_degree4():
    assert remez_convex_check(4, 1, [(-1.0, 1.0)], 0.5, 100, RngStream(1)).passed


def test_remez_chebyshev():
    T4 = np.polynomial.chebyshev.Chebyshev.basis(4)
    sup_v, sup_e, factor = remez_convex_instance(lambda x: T4(x[:, 0]), 4, [(-1.0, 1.0)], [(-1.0, 0.9)])
    assert sup_v == pytest.approx(1.0) and sup_v <= factor * sup_e


def test_remez_sphere_s1():
    r = remez_sphere_check(2, 1, 0.5, 100, RngStream(2), C1=SPHERE_C1)
    assert r.passed and r.extras["C1_needed"] <= SPHERE_C1


def test_remez_torus_20():
    r = remez_torus_check(2, 0.5, 0.5, 20, RngStream(3))
    assert r.passed


def test_remez_torus_at_4pi():
    r = remez_torus_check(2, 0.5, 0.5, 20, RngStream(3), C1=SPHERE_C1)
    # |E| = 2 pi^2 > 4 pi, so the factor drops below 1 and every polynomial violates
    assert not r.passed and r.violations == 20
    assert r.extras["C1_needed"] > SPHERE_C1


# --- low-dimensional theorem ---------------------------------------------------

def test_low_dim_diag():
    est = low_dim_theorem_check(np.diag([2.0, 0.1]), 0.7, [1e-4, 1e-2, 1e-1], 10_000, RngStream(4), threads=4)
    assert est.p_hat[0] <= 0.02 and est.is_monotone()


def test_low_dim_rejects_counterexample():
    with pytest.raises(HypothesisError):
        low_dim_theorem_check(counterexample_matrix(100.0), 1e-4, [0.1], 10, RngStream(1))


def test_low_dim_zero_b():
    est = low_dim_theorem_check(np.zeros((3, 3)), 0.0, [0.5, 0.9], 200, RngStream(5))
    assert not est.hits.any()
