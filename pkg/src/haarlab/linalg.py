"""Dense complex linear algebra written from scratch.

Matrices are plain ``numpy`` arrays; every routine returns ``complex128``
results (real input is promoted).  The numerical work happens in the
compiled kernels of :mod:`haarlab._kernels`; this module checks inputs,
handles shapes and enforces the documented invariants.

Tolerances are module-level so they can be inspected and pinned by tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

__all__ = [
    "LinAlgError",
    "ConvergenceError",
    "SingularMatrixError",
    "SvdResult",
    "Spectrum",
    "as_matrix",
    "qr_decompose",
    "svd",
    "singular_values",
    "smallest_singular_value",
    "eigenvalues",
    "operator_norm",
    "hs_norm",
    "determinant",
    "solve_linear",
    "inverse",
]

SVD_MAX_SWEEPS = 60
SVD_TOL = 1e-13
EIG_DEFLATION_TOL = 1e-13
EIG_ITER_PER_DIM = 50
SOLVE_PIVOT_RATIO = 1e-12
MAX_DIM = 2048


class LinAlgError(ArithmeticError):
    """Base class for failures of the dense kernels."""


class ConvergenceError(LinAlgError):
    """An iterative kernel hit its iteration cap.

    ``partial`` carries whatever had converged: the sweep count for the SVD,
    the deflated eigenvalues for the eigensolver.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SingularMatrixError(LinAlgError):
    """Raised by :func:`solve_linear` when the pivot ratio is too small."""


@dataclass(frozen=True)
class SvdResult:
    """``A = left @ diag(singular_values) @ right.conj().T``."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    sweeps: int = 0

    @property
    def s_min(self) -> float:
        return float(self.singular_values[-1])


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)


def as_matrix(A, *, square: bool = False) -> np.ndarray:
    """Validate and promote ``A`` to a finite 2-D ``complex128`` array."""
    M = np.asarray(A)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    if M.shape[0] == 0 or M.shape[1] == 0:
        raise ValueError("empty matrix")
    if square and M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if max(M.shape) > MAX_DIM:
        raise ValueError(f"dimension {max(M.shape)} exceeds {MAX_DIM}")
    M = np.ascontiguousarray(M, dtype=np.complex128)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def qr_decompose(A):
    """Thin QR of a tall matrix with ``diag(R)`` real and non-negative.

    The sign convention makes the factorization unique for full-rank
    input, which is what turns QR of a Gaussian matrix into a Haar sample.
    """
    M = as_matrix(A)
    if M.shape[0] < M.shape[1]:
        raise ValueError(f"qr_decompose needs rows >= cols, got shape {M.shape}")
    Q, R = _kernels.householder_qr(M)
    return Q, np.ascontiguousarray(R[: M.shape[1]])


def _complete_basis(U, good):
    """Replace the columns of ``U`` not flagged in ``good`` by an
    orthonormal completion of the flagged ones."""
    m, k = U.shape
    basis = [U[:, j] for j in range(k) if good[j]]
    e = 0
    for j in range(k):
        if good[j]:
            continue
        while True:
            v = np.zeros(m, dtype=np.complex128)
            v[e % m] = 1.0
            e += 1
            for _ in range(2):
                for b in basis:
                    v = v - (b.conj() @ v) * b
            nv = np.linalg.norm(v)
            if nv > 0.5:
                break
        v = v / nv
        U[:, j] = v
        basis.append(v)
    return U


def svd(A, *, compute_vectors: bool = True) -> SvdResult:
    """Singular value decomposition by one-sided Jacobi rotations.

    For an ``m x n`` input the factors are thin: ``left`` is ``m x k`` and
    ``right`` is ``n x k`` with ``k = min(m, n)``.  With
    ``compute_vectors=False`` only the singular values are meaningful and
    the factor fields are ``None``.

    Raises
    ------
    ConvergenceError
        If the off-diagonal Gram entries are still above ``SVD_TOL`` after
        ``SVD_MAX_SWEEPS`` sweeps.
    """
    M = as_matrix(A)
    wide = M.shape[0] < M.shape[1]
    if wide:
        M = np.ascontiguousarray(M.conj().T)
    G, sigma, V, sweeps, converged = _kernels.jacobi_svd(
        M, compute_vectors, SVD_TOL, SVD_MAX_SWEEPS
    )
    if not converged:
        raise ConvergenceError(
            f"Jacobi SVD did not converge in {SVD_MAX_SWEEPS} sweeps", partial=sweeps
        )
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    if not compute_vectors:
        return SvdResult(None, sigma, None, sweeps)
    G = G[:, order]
    V = np.ascontiguousarray(V[:, order])
    m = G.shape[0]
    eps = np.finfo(float).eps
    good = sigma > m * eps * max(sigma[0], np.finfo(float).tiny)
    U = np.zeros_like(G)
    U[:, good] = G[:, good] / sigma[good]
    if not np.all(good):
        U = _complete_basis(U, good)
    if wide:
        return SvdResult(V, sigma, U, sweeps)
    return SvdResult(U, sigma, V, sweeps)


def singular_values(A) -> np.ndarray:
    """Descending singular values without accumulating vectors."""
    return svd(A, compute_vectors=False).singular_values


def smallest_singular_value(A) -> float:
    """``s_min(A)``, the distance from a square ``A`` to the singular matrices."""
    M = as_matrix(A, square=True)
    return float(singular_values(M)[-1])


def eigenvalues(A, *, balance: bool = True) -> Spectrum:
    """Eigenvalues of a square matrix.

    Balancing, Householder reduction to Hessenberg form, then single-shift
    complex QR with Wilkinson shifts and an exceptional shift every tenth
    stalled iteration.  The total number of QR steps is capped at
    ``EIG_ITER_PER_DIM * n``; on overflow a :class:`ConvergenceError` is
    raised with the already deflated eigenvalues attached.
    """
    M = as_matrix(A, square=True)
    n = M.shape[0]
    if n == 1:
        return Spectrum(M[0].copy())
    if balance:
        M = _kernels.balance(M)
    H = _kernels.hessenberg(M)
    eigs, found, ok = _kernels.hessenberg_qr_eigenvalues(
        H, EIG_DEFLATION_TOL, EIG_ITER_PER_DIM * n
    )
    if not ok:
        raise ConvergenceError(
            f"QR iteration exceeded {EIG_ITER_PER_DIM * n} steps "
            f"({found} of {n} eigenvalues deflated)",
            partial=Spectrum(eigs[n - found:].copy()),
        )
    return Spectrum(eigs)


def operator_norm(A) -> float:
    return float(singular_values(A)[0])


def hs_norm(A) -> float:
    M = as_matrix(A)
    return float(np.sqrt(np.sum(M.real**2 + M.imag**2)))


def determinant(A) -> complex:
    """Determinant through partial-pivoting LU."""
    M = as_matrix(A, square=True)
    LU, _, sign = _kernels.lu_factor(M)
    return complex(sign * np.prod(np.diag(LU)))


def solve_linear(A, b) -> np.ndarray:
    """Solve ``A x = b`` by pivoted LU.

    Refuses (``SingularMatrixError``) when the smallest pivot is below
    ``SOLVE_PIVOT_RATIO`` times the largest one.  ``b`` may be a vector or
    a matrix of right-hand sides.
    """
    M = as_matrix(A, square=True)
    rhs = np.asarray(b, dtype=np.complex128)
    if rhs.shape[0] != M.shape[0]:
        raise ValueError(f"right-hand side has {rhs.shape[0]} rows, matrix has {M.shape[0]}")
    if not np.all(np.isfinite(rhs)):
        raise ValueError("right-hand side has non-finite entries")
    LU, perm, _ = _kernels.lu_factor(M)
    piv = np.abs(np.diag(LU))
    if piv.max() == 0.0 or piv.min() < SOLVE_PIVOT_RATIO * piv.max():
        raise SingularMatrixError(
            f"pivot ratio {piv.min() / max(piv.max(), 1e-300):.3e} below {SOLVE_PIVOT_RATIO}"
        )
    if rhs.ndim == 1:
        return _kernels.lu_solve(LU, perm, np.ascontiguousarray(rhs))
    cols = [_kernels.lu_solve(LU, perm, np.ascontiguousarray(rhs[:, j])) for j in range(rhs.shape[1])]
    return np.stack(cols, axis=1)


def inverse(A) -> np.ndarray:
    M = as_matrix(A, square=True)
    return solve_linear(M, np.eye(M.shape[0], dtype=np.complex128))
