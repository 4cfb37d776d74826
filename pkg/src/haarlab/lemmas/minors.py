"""Block-matrix invertibility bounds and the two 3-dimensional tail lemmas.

The well/poorly invertible minor bounds are statements for every ``x`` in
``S_J = {x : ||x|| = 1, sum_{j in J} |x_j|^2 >= 1/n}``; they are checked
by evaluating ``||Hx||`` on sampled points of ``S_J`` plus a few
adversarial directions.  The Gaussian-perturbation and breaking-orthogonality
lemmas carry unspecified constants, so only their tails are estimated and
checked for monotone decay.
"""

from __future__ import annotations

import math

import numpy as np

from .._parallel import map_trials
from ..ensembles import RngStream, gaussian_complex_matrix, hurwitz_so3, so2
from ..linalg import operator_norm, smallest_singular_value, solve_linear, svd
from ..smin import fit_tail_exponent, InsufficientDataError, tail_from_samples
from .report import BlockMatrix2, HypothesisError, LemmaReport, merge_reports

__all__ = [
    "sample_s_j",
    "verify_well_invertible_minor",
    "well_invertible_suite",
    "verify_poorly_invertible_minor",
    "poorly_invertible_suite",
    "gaussian_map_norm",
    "random_gaussian_map",
    "verify_gaussian_perturbation",
    "verify_breaking_orthogonality",
]

REL_TOL = 1e-10
DECAY_MAX = 0.05


def _unit_rows(g):
    return g / np.linalg.norm(g, axis=0, keepdims=True)


def sample_s_j(n: int, k: int, samples: int, rng: RngStream) -> np.ndarray:
    """``samples`` unit vectors of C^n (as columns) whose first ``k`` coordinates
    carry squared mass uniform in ``[1/n, 1]``; the first two columns sit on
    the two extremes of that range."""
    head = _unit_rows(gaussian_complex_matrix(k, samples, rng.child(0)))
    x = np.zeros((n, samples), dtype=np.complex128)
    w = 1.0 / n + (1.0 - 1.0 / n) * rng.child(2).uniform(samples)
    w[0] = 1.0 / n
    if samples > 1:
        w[1] = 1.0
    x[:k] = head * np.sqrt(w)
    if n > k:
        tail = _unit_rows(gaussian_complex_matrix(n - k, samples, rng.child(1)))
        x[k:] = tail * np.sqrt(1.0 - w)
    return x


def verify_well_invertible_minor(H, L1: float, L2: float, samples: int, rng: RngStream,
                                 k: int = 3) -> LemmaReport:
    """``||Hx|| >= s_min(H0 - Y Hbar^{-1} X) / (sqrt(n) (1 + L1 L2))`` on ``S_{1..k}``.

    Raises ``HypothesisError`` unless ``||Hbar^{-1}|| <= L1`` and ``||Y|| <= L2``.
    """
    blocks = H if isinstance(H, BlockMatrix2) else BlockMatrix2.split(H, k)
    M = blocks.assemble()
    n = blocks.n
    smin_bar = smallest_singular_value(blocks.bottom_right)
    inv_norm = math.inf if smin_bar == 0 else 1.0 / smin_bar
    y_norm = operator_norm(blocks.top_right)
    if inv_norm > L1 * (1 + 1e-12) or y_norm > L2 * (1 + 1e-12):
        raise HypothesisError(f"||Hbar^-1|| = {inv_norm:.6g} (L1 = {L1}), ||Y|| = {y_norm:.6g} (L2 = {L2})")
    schur = blocks.top_left - blocks.top_right @ solve_linear(blocks.bottom_right, blocks.bottom_left)
    bound = smallest_singular_value(schur) / (math.sqrt(n) * (1.0 + L1 * L2))
    x = sample_s_j(n, blocks.k, samples, rng)
    norms = np.linalg.norm(M @ x, axis=0)
    report = LemmaReport("well-invertible-minor")
    tol = REL_TOL * max(bound, operator_norm(M) * 1e-5)
    slack = norms - bound
    j = int(np.argmin(slack))
    report.instances = samples
    report.violations = int(np.sum(slack < -tol))
    report.max_slack = float(slack[j])
    report.worst_case = {"sample": j, "norm_Hx": float(norms[j]), "bound": bound}
    report.extras["bound"] = bound
    return report


def well_invertible_suite(instances: int, samples: int, rng: RngStream, n: int = 10,
                          threads: int = 1) -> LemmaReport:
    """Random complex ``H`` with ``L1 = ||Hbar^{-1}||``, ``L2 = ||Y||`` taken tight."""

    def one(i):
        sub = rng.child(i)
        H = gaussian_complex_matrix(n, n, sub.child(0))
        b = BlockMatrix2.split(H, 3)
        L1 = 1.0 / smallest_singular_value(b.bottom_right)
        L2 = operator_norm(b.top_right)
        return verify_well_invertible_minor(b, L1, L2, samples, sub.child(1))

    return merge_reports("well-invertible-minor", map_trials(one, instances, threads))


def _hs_ratio_weights(Hbar):
    """Left singular vectors and weights ``s_min / s_i`` of ``Hbar``: then
    ``||Hbar^{-1} X|| / ||Hbar^{-1}||_HS = ||w * (U^* X)|| / ||w||``, which
    stays defined in the singular limit."""
    f = svd(Hbar)
    s = f.singular_values
    smin = s[-1]
    w = np.where(s > 0, smin / np.where(s > 0, s, 1.0), 1.0)
    if smin == 0:
        w = np.where(s == 0, 1.0, 0.0)
    return f, w


def verify_poorly_invertible_minor(H, t: float, epsilon: float, L: float, rng: RngStream,
                                   draws: int = 1000, samples: int = 8) -> LemmaReport:
    """Deterministic core of the poorly invertible minor bound.

    ``H = [[H0, Y], [nu, Hbar]]`` with a 1 x 1 corner; the first column is
    resampled as ``X = nu + eps Z`` with ``Z`` real standard Gaussian.  When
    ``||Hbar^{-1} X|| > t eps ||Hbar^{-1}||_HS`` every ``x`` in ``S_1`` must
    satisfy ``||Hx|| >= t eps / sqrt(n) - 1/L``.  Draws failing the premise
    are the small-ball events; their frequency is in
    ``extras["small_ball_frequency"]``.  A numerically singular ``Hbar`` is
    the ``L = inf`` limit.
    """
    blocks = H if isinstance(H, BlockMatrix2) else BlockMatrix2.split(H, 1)
    if blocks.k != 1:
        raise ValueError("poorly invertible minor needs a 1 x 1 corner")
    n = blocks.n
    Hbar = blocks.bottom_right
    f, w = _hs_ratio_weights(Hbar)
    smin_bar = f.singular_values[-1]
    singular = smin_bar <= 1e-14 * max(f.singular_values[0], 1e-300)
    inv_norm = math.inf if singular else 1.0 / smin_bar
    if inv_norm < L:
        raise HypothesisError(f"||Hbar^-1|| = {inv_norm:.6g} < L = {L}")
    bound = t * epsilon / math.sqrt(n) - (0.0 if math.isinf(L) else 1.0 / L)
    nu = blocks.bottom_left[:, 0]
    Uh = f.left
    wnorm = float(np.linalg.norm(w))
    report = LemmaReport("poorly-invertible-minor")
    small_ball = 0
    M = blocks.assemble()
    for d in range(draws):
        sub = rng.child(d)
        X = nu + epsilon * sub.normal(n - 1)
        ratio = float(np.linalg.norm(w * (Uh.conj().T @ X))) / wnorm
        if ratio <= t * epsilon:
            small_ball += 1
            report.skip()
            continue
        M[1:, 0] = X
        cands = [sample_s_j(n, 1, samples, sub.child(1))]
        v = svd(M).right[:, -1]
        if abs(v[0]) ** 2 >= 1.0 / n:
            cands.append(v[:, None])
        if not singular:
            xbar = -solve_linear(Hbar, X)
            nb = float(np.linalg.norm(xbar))
            direct = np.concatenate([[1.0], xbar]) / math.sqrt(1.0 + nb * nb)
            if abs(direct[0]) ** 2 >= 1.0 / n:
                cands.append(direct[:, None])
            elif nb > 0:
                edge = np.concatenate([[1.0 / math.sqrt(n)], xbar / nb * math.sqrt(1.0 - 1.0 / n)])
                cands.append(edge[:, None])
        xs = np.concatenate(cands, axis=1)
        norms = np.linalg.norm(M @ xs, axis=0)
        worst = float(norms.min())
        tol = REL_TOL * max(abs(bound), 1e-12)
        report.record(worst - bound, worst >= bound - tol, draw=d, inf_sampled=worst, bound=bound)
    report.extras.update(
        small_ball_frequency=small_ball / draws if draws else 0.0,
        small_ball_bound=10.0 * t * math.sqrt(n),
        bound=bound,
        draws=draws,
    )
    return report


def poorly_invertible_suite(draws: int, rng: RngStream, n: int = 10, t: float = 0.01,
                            epsilon: float = 1.0, L: float = 1000.0, samples: int = 8) -> LemmaReport:
    """One random ``H`` whose ``Hbar`` has ``s_min = 1/(10 L)``, so ``||Hbar^{-1}|| >= L``."""
    H = gaussian_complex_matrix(n, n, rng.child(0))
    f = svd(H[1:, 1:])
    s = f.singular_values.copy()
    s[-1] = 0.1 / L
    H[1:, 1:] = (f.left * s) @ f.right.conj().T
    return verify_poorly_invertible_minor(H, t, epsilon, L, rng.child(1), draws=draws, samples=samples)


def gaussian_map_norm(F) -> float:
    """Operator norm of ``z -> sum_j z_j F_j`` from R^m to (C^{3x3}, HS)."""
    F = np.asarray(F, dtype=np.complex128)
    m = F.shape[0]
    flat = F.reshape(m, -1).T
    real = np.vstack([flat.real, flat.imag])  # 18 x m
    return operator_norm(real)


def random_gaussian_map(m: int, rng: RngStream, K: float = 1.0) -> np.ndarray:
    """``m`` random complex 3 x 3 coefficient matrices scaled to map norm ``K``."""
    F = gaussian_complex_matrix(3 * m, 3, rng).reshape(m, 3, 3)
    return F * (K / gaussian_map_norm(F))


def _tail_report(lemma_id, stats, t_grid, decay_max, extras):
    est = tail_from_samples(stats, t_grid)
    report = LemmaReport(lemma_id)
    for j in range(1, len(est.t_grid)):
        step = float(est.p_hat[j] - est.p_hat[j - 1])
        report.record(step, step >= 0, kind="monotone", t=float(est.t_grid[j]))
    report.record(decay_max - float(est.p_hat[0]), est.p_hat[0] <= decay_max,
                  kind="decay", t=float(est.t_grid[0]), p_hat=float(est.p_hat[0]))
    report.extras.update(extras)
    report.extras["tail"] = est
    try:
        report.extras["exponent"] = fit_tail_exponent(est)
    except InsufficientDataError:
        report.extras["exponent"] = None
    return report


def verify_gaussian_perturbation(F, t_grid, trials: int, rng: RngStream, threads: int = 1,
                                 decay_max: float = DECAY_MAX) -> LemmaReport:
    """Tail of ``s_min(I + f(Z))`` for the linear map given by coefficient
    matrices ``F[j]`` (``f(z) = sum_j z_j F[j]``) and ``Z`` standard Gaussian."""
    F = np.asarray(F, dtype=np.complex128)
    if F.ndim != 3 or F.shape[1:] != (3, 3):
        raise ValueError("F must have shape (m, 3, 3)")
    m = F.shape[0]
    K = gaussian_map_norm(F)
    I3 = np.eye(3)

    def one(i):
        z = rng.child(i).normal(m)
        return smallest_singular_value(I3 + np.tensordot(z, F, axes=1))

    stats = map_trials(one, trials, threads)
    return _tail_report("gaussian-perturbation", stats, t_grid, decay_max, {"K": K})


def verify_breaking_orthogonality(T, D, t_grid, trials: int, rng: RngStream, threads: int = 1,
                                  decay_max: float = DECAY_MAX) -> LemmaReport:
    """Tail of ``||B B^T - I|| / ||B||^2`` for ``B = T Q D Q^T`` with ``Q`` Haar in SO(n)."""
    d = np.asarray(D, dtype=np.complex128)
    if d.ndim == 2:
        d = np.diag(d)
    n = len(d)
    if n not in (2, 3):
        raise ValueError("breaking orthogonality is checked for n in {2, 3}")
    T = np.asarray(T, dtype=np.complex128)
    delta = abs(d[0] ** 2 - d[1] ** 2)
    if delta == 0:
        raise HypothesisError("|d1^2 - d2^2| = 0: the diagonal is a multiple of identity on its first two entries")
    Dm = np.diag(d)
    I = np.eye(n)

    def one(i):
        sub = rng.child(i)
        Q = hurwitz_so3(sub) if n == 3 else so2(2.0 * math.pi * sub.uniform(1)[0])
        B = T @ Q @ Dm @ Q.T
        nb = operator_norm(B)
        return math.inf if nb == 0 else operator_norm(B @ B.T - I) / nb**2

    stats = map_trials(one, trials, threads)
    K = float(np.max(np.abs(d)))
    return _tail_report("breaking-orthogonality", stats, t_grid, decay_max, {"delta": float(delta), "K": K})
