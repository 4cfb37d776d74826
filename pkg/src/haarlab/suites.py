"""Named, seedable verification suites shared by the CLI and the acceptance tests.

Each suite takes ``(instances, rng, threads)`` and returns a
:class:`~haarlab.lemmas.LemmaReport`.  ``instances`` scales the main loop of
the suite (random instances, Monte Carlo trials or polynomials, depending on
the lemma).
"""

from __future__ import annotations

import math

import numpy as np

from .ensembles import RngStream
from .lemmas import (
    LemmaReport,
    low_dim_theorem_check,
    merge_reports,
    poorly_invertible_suite,
    quadratic_form_suite,
    random_gaussian_map,
    remez_convex_check,
    remez_convex_instance,
    remez_sphere_check,
    remez_torus_check,
    trig_identity_error,
    vanishing_determinant_suite,
    verify_breaking_orthogonality,
    verify_gaussian_perturbation,
    verify_identity_perturbation,
    well_invertible_suite,
)

__all__ = ["SUITES", "run_suite", "DEFAULT_INSTANCES"]

TRIG_TOL = 1e-10


def identity_perturbation(instances, rng, threads=1, epsilon=0.01):
    """``instances`` draws spread over n = 2..20, half complex, half real."""
    reports = []
    dims = list(range(2, 21))
    per = [instances // (2 * len(dims))] * len(dims)
    for j in range(instances // 2 - sum(per)):
        per[j] += 1
    for fi, field in enumerate(("complex", "real")):
        for n, count in zip(dims, per):
            if count:
                reports.append(verify_identity_perturbation(n, epsilon, count, rng.child(100 * fi + n), field))
    return merge_reports("identity-perturbation", reports)


def quadratic_form(instances, rng, threads=1):
    return quadratic_form_suite(instances, rng, n_max=12, rel_tol=1e-6, min_rel_smin=1e-6)


def well_invertible_minor(instances, rng, threads=1, samples=10_000):
    return well_invertible_suite(instances, samples, rng, n=10, threads=threads)


def poorly_invertible_minor(instances, rng, threads=1):
    """``instances`` Gaussian draws of the first column at n = 10, t = 0.01."""
    r = poorly_invertible_suite(instances, rng, n=10, t=0.01, epsilon=1.0, L=1000.0)
    freq = r.extras["small_ball_frequency"]
    cap = r.extras["small_ball_bound"]
    r.record(cap - freq, freq <= cap, kind="small-ball", frequency=freq, bound=cap)
    return r


GAUSSIAN_T_GRID = (1e-4, 1e-3, 1e-2, 3e-2, 1e-1, 3e-1)
BREAKING_T_GRID = (1e-3, 1e-2, 3e-2, 1e-1, 3e-1)
LOWDIM_T_GRID = (1e-4, 1e-3, 1e-2, 3e-2, 1e-1, 3e-1)


def gaussian_perturbation(instances, rng, threads=1, m=6):
    F = random_gaussian_map(m, rng.child(0), K=1.0)
    return verify_gaussian_perturbation(F, GAUSSIAN_T_GRID, instances, rng.child(1), threads)


def breaking_orthogonality(instances, rng, threads=1):
    reports = []
    T3 = np.eye(3) + 0.5 * rng.child(0).normal((3, 3))
    for n, T, D in ((2, np.eye(2), [1.0, 2.0]), (3, T3, [1.0, 2.0, 1.5])):
        reports.append(verify_breaking_orthogonality(T, D, BREAKING_T_GRID, instances, rng.child(n), threads))
    merged = merge_reports("breaking-orthogonality", reports)
    merged.extras["tails"] = [r.extras["tail"] for r in reports]
    return merged


def trig_coefficients(instances, rng, threads=1):
    report = LemmaReport("trig-coefficients")
    for i in range(instances):
        g = rng.child(i).normal((2, 2, 2))
        B = 2.0 * (g[0] + 1j * g[1])
        err = trig_identity_error(B, 64)
        report.record(TRIG_TOL - err, err <= TRIG_TOL, instance=i, error=err)
    return report


def vanishing_determinant(instances, rng, threads=1):
    return merge_reports(
        "vanishing-determinant",
        [vanishing_determinant_suite(instances, rng.child(n), n=n, C=2.0) for n in (2, 3)],
    )


def remez_convex(instances, rng, threads=1):
    reports = [
        remez_convex_check(4, 1, None, 0.5, instances, rng.child(1)),
        remez_convex_check(3, 2, None, 0.25, instances, rng.child(2)),
    ]
    # Chebyshev T4 on [-1, 1] against E = [-1, 0.9]
    cheb = np.polynomial.chebyshev.Chebyshev.basis(4)
    sup_v, sup_e, factor = remez_convex_instance(lambda x: cheb(x[:, 0]), 4, [(-1.0, 1.0)], [(-1.0, 0.9)])
    r = LemmaReport("remez-convex/chebyshev")
    slack = math.log(factor * sup_e / sup_v)
    r.record(slack, slack >= 0, sup_V=sup_v, sup_E=sup_e, factor=factor)
    reports.append(r)
    return merge_reports("remez-convex", reports)


def remez_sphere(instances, rng, threads=1):
    return merge_reports(
        "remez-sphere",
        [
            remez_sphere_check(2, 1, 0.5, instances, rng.child(1)),
            remez_sphere_check(3, 2, 0.25, instances, rng.child(2)),
        ],
    )


def remez_torus(instances, rng, threads=1):
    return remez_torus_check(2, 0.5, 0.5, instances, rng)


def low_dim(instances, rng, threads=1):
    """Tail of ``s_min(B + U)`` for ``B = diag(2, 0.1)`` over O(2), delta = 0.7."""
    est = low_dim_theorem_check(np.diag([2.0, 0.1]), 0.7, LOWDIM_T_GRID, instances, rng, threads)
    report = LemmaReport("low-dim")
    for j in range(1, len(est)):
        step = float(est.p_hat[j] - est.p_hat[j - 1])
        report.record(step, step >= 0, kind="monotone", t=float(est.t_grid[j]))
    p0 = float(est.p_hat[0])
    report.record(0.05 - p0, p0 <= 0.05, kind="decay", t=float(est.t_grid[0]), p_hat=p0)
    report.extras["tail"] = est
    return report


SUITES = {
    "identity-perturbation": identity_perturbation,
    "quadratic-form": quadratic_form,
    "well-invertible-minor": well_invertible_minor,
    "poorly-invertible-minor": poorly_invertible_minor,
    "gaussian-perturbation": gaussian_perturbation,
    "breaking-orthogonality": breaking_orthogonality,
    "trig-coefficients": trig_coefficients,
    "vanishing-determinant": vanishing_determinant,
    "remez-convex": remez_convex,
    "remez-sphere": remez_sphere,
    "remez-torus": remez_torus,
    "low-dim": low_dim,
}

# sizes used by ``verify-all`` when no instance count is given
DEFAULT_INSTANCES = {
    "identity-perturbation": 1000,
    "quadratic-form": 500,
    "well-invertible-minor": 20,
    "poorly-invertible-minor": 2000,
    "gaussian-perturbation": 10_000,
    "breaking-orthogonality": 10_000,
    "trig-coefficients": 200,
    "vanishing-determinant": 200,
    "remez-convex": 100,
    "remez-sphere": 100,
    "remez-torus": 20,
    "low-dim": 10_000,
}


def run_suite(name: str, instances: int, rng: RngStream, threads: int = 1) -> LemmaReport:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown lemma {name!r}; choose from {', '.join(SUITES)}") from None
    report = fn(instances, rng, threads)
    report.lemma_id = name
    return report
