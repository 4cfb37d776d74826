"""Local perturbations of the identity and the bilinear quadratic form."""

from __future__ import annotations

import math

import numpy as np

from ..ensembles import RngStream, gaussian_complex_matrix, gaussian_skew_symmetric, skew_hermitian_bordered
from ..linalg import LinAlgError, operator_norm, smallest_singular_value, solve_linear, svd
from .report import BlockMatrix2, HypothesisError, LemmaReport, merge_reports

__all__ = [
    "identity_perturbation_instance",
    "verify_identity_perturbation",
    "null_covector",
    "quadratic_form_sides",
    "verify_quadratic_form",
    "quadratic_form_suite",
]

UNITARITY_TOL = 1e-10


def identity_perturbation_instance(S, epsilon: float):
    """Nearest unitary ``W = U V*`` to ``W0 = I + eps S`` and the two sides
    of ``||W - W0|| <= 2 eps^2 ||S^2||``.

    Returns ``(lhs, rhs, unitarity_error, W)``.
    """
    S = np.asarray(S, dtype=np.complex128)
    n = S.shape[0]
    W0 = np.eye(n) + epsilon * S
    f = svd(W0)
    W = f.left @ f.right.conj().T
    lhs = operator_norm(W - W0)
    rhs = 2.0 * epsilon**2 * operator_norm(S @ S)
    unit_err = operator_norm(W.conj().T @ W - np.eye(n))
    return lhs, rhs, unit_err, W


def verify_identity_perturbation(n: int, epsilon: float, trials: int, rng: RngStream,
                                 field: str = "complex") -> LemmaReport:
    """Check the nearest-unitary bound on random skew perturbations.

    ``field="complex"`` draws the bordered skew-Hermitian matrix,
    ``field="real"`` a Gaussian skew-symmetric one (then ``W`` must come
    out real orthogonal).  Draws with ``eps^2 ||S^2|| > 1/4`` are skipped.
    """
    report = LemmaReport(f"identity-perturbation/{field}")
    for i in range(trials):
        sub = rng.child(i)
        S = skew_hermitian_bordered(n, sub) if field == "complex" else gaussian_skew_symmetric(n, sub)
        if epsilon**2 * operator_norm(S @ S) > 0.25:
            report.skip()
            continue
        lhs, rhs, unit_err, W = identity_perturbation_instance(S, epsilon)
        ok = lhs <= rhs * (1 + 1e-12) + 1e-15 and unit_err <= UNITARITY_TOL
        if field == "real":
            ok = ok and float(np.max(np.abs(W.imag))) <= UNITARITY_TOL
        report.record(rhs - lhs, ok, n=n, trial=i, lhs=lhs, rhs=rhs, unitarity_error=unit_err)
    return report


def null_covector(A, rank_tol: float = 1e-10) -> np.ndarray:
    """Unit ``h`` with ``h^T A_i = 0`` for every column ``i >= 2`` (no conjugation).

    Computed as the right singular vector for the zero singular value of the
    transposed column block padded to a square matrix.
    """
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    if A.shape != (n, n) or n < 2:
        raise ValueError("null_covector needs a square matrix with n >= 2")
    block_t = A[:, 1:].T  # (n-1) x n
    padded = np.vstack([block_t, np.zeros((1, n), dtype=np.complex128)])
    f = svd(padded)
    scale = max(1.0, float(f.singular_values[0]))
    if f.singular_values[-2] <= rank_tol * scale:
        raise LinAlgError("columns 2..n are rank deficient; the null covector is not unique")
    return f.right[:, -1].copy()


def quadratic_form_sides(A):
    """``(|h^T A_1|, |A11 - X^T B^{-1} Y| / sqrt(1 + ||B^{-1} Y||^2))`` for
    ``A = [[A11, Y^T], [X, B^T]]``."""
    blocks = A if isinstance(A, BlockMatrix2) else BlockMatrix2.split(A, 1)
    if blocks.k != 1:
        raise ValueError("quadratic form needs a 1 x 1 corner")
    M = blocks.assemble()
    B = blocks.bottom_right.T
    if smallest_singular_value(B) <= 1e-10 * operator_norm(B):
        raise HypothesisError("B is numerically singular")
    a11 = blocks.top_left[0, 0]
    Y = blocks.top_right[0, :]
    X = blocks.bottom_left[:, 0]
    BinvY = solve_linear(B, Y)
    rhs = abs(a11 - X @ BinvY) / math.sqrt(1.0 + float(np.sum(np.abs(BinvY) ** 2)))
    h = null_covector(M)
    lhs = abs(h @ M[:, 0])
    return lhs, rhs


def verify_quadratic_form(A, rel_tol: float = 1e-8) -> LemmaReport:
    report = LemmaReport("quadratic-form")
    lhs, rhs = quadratic_form_sides(A)
    err = abs(lhs - rhs) / max(rhs, 1e-300)
    report.record(rel_tol - err, err <= rel_tol, lhs=lhs, rhs=rhs, rel_error=err)
    return report


def quadratic_form_suite(instances: int, rng: RngStream, n_max: int = 12,
                         rel_tol: float = 1e-6, min_rel_smin: float = 1e-6) -> LemmaReport:
    """Random complex instances of size 2..n_max; instances whose ``B`` has
    ``s_min(B) < min_rel_smin * ||B||`` are skipped."""
    reports = []
    for i in range(instances):
        sub = rng.child(i)
        n = 2 + int(sub.child(0).uniform(1)[0] * (n_max - 1))
        A = gaussian_complex_matrix(n, n, sub.child(1))
        B = A[1:, 1:].T
        r = LemmaReport("quadratic-form")
        if smallest_singular_value(B) < min_rel_smin * operator_norm(B):
            r.skip()
        else:
            r = verify_quadratic_form(A, rel_tol)
        reports.append(r)
    return merge_reports("quadratic-form", reports)
