"""Dimensions 2 and 3: vanishing determinants, Remez-type inequalities and
the low-dimensional tail bound for ``s_min(B + U)``.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from ..ensembles import RngStream, hurwitz_rotation, so2
from ..linalg import determinant, operator_norm
from ..smin import TailEstimate, tail_estimate
from .report import HypothesisError, LemmaReport

__all__ = [
    "det_trig_coefficients",
    "trig_identity_error",
    "so3_grid",
    "vanishing_determinant_scan",
    "vanishing_determinant_suite",
    "low_dim_theorem_check",
    "monomials",
    "random_polynomial",
    "remez_convex_instance",
    "remez_convex_check",
    "sphere_grid",
    "remez_sphere_check",
    "remez_torus_check",
    "SPHERE_C1",
    "TORUS_C1",
]

SPHERE_C1 = 4.0 * math.pi
TORUS_C1 = 8.0 * math.pi**2


def det_trig_coefficients(B):
    """``(k0, k1, k2)`` with ``det(B + U(phi)) = k0 + k1 cos(phi) + k2 sin(phi)``
    for ``U(phi) = [[cos, sin], [-sin, cos]]``."""
    B = np.asarray(B, dtype=np.complex128)
    if B.shape != (2, 2):
        raise ValueError(f"expected a 2 x 2 matrix, got shape {B.shape}")
    k0 = determinant(B) + 1.0
    k1 = B[0, 0] + B[1, 1]
    k2 = B[0, 1] - B[1, 0]
    return complex(k0), complex(k1), complex(k2)


def trig_identity_error(B, points: int = 64) -> float:
    k0, k1, k2 = det_trig_coefficients(B)
    B = np.asarray(B, dtype=np.complex128)
    err = 0.0
    for phi in 2.0 * math.pi * np.arange(points) / points:
        lhs = determinant(B + so2(phi))
        err = max(err, abs(lhs - (k0 + k1 * math.cos(phi) + k2 * math.sin(phi))))
    return err


@lru_cache(maxsize=8)
def so3_grid(size: int = 16) -> np.ndarray:
    """Hurwitz product grid, shape ``(size**3, 3, 3)``: ``size`` plane angles
    times a ``size x size`` (polar, azimuth) grid of axis directions."""
    phis = 2.0 * math.pi * np.arange(size) / size
    thetas = np.linspace(0.0, math.pi, size)
    psis = 2.0 * math.pi * np.arange(size) / size
    out = []
    for phi, theta, psi in itertools.product(phis, thetas, psis):
        z = (math.sin(theta) * math.cos(psi), math.sin(theta) * math.sin(psi), math.cos(theta))
        out.append(hurwitz_rotation(phi, z))
    grid = np.array(out)
    grid.setflags(write=False)
    return grid


def _batch_det(A: np.ndarray) -> np.ndarray:
    """Cofactor determinants of a stack of 2 x 2 or 3 x 3 matrices."""
    if A.shape[-1] == 2:
        return A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    return (
        A[:, 0, 0] * (A[:, 1, 1] * A[:, 2, 2] - A[:, 1, 2] * A[:, 2, 1])
        - A[:, 0, 1] * (A[:, 1, 0] * A[:, 2, 2] - A[:, 1, 2] * A[:, 2, 0])
        + A[:, 0, 2] * (A[:, 1, 0] * A[:, 2, 1] - A[:, 1, 1] * A[:, 2, 0])
    )


def vanishing_determinant_scan(B, grid_size: int = None):
    """``(sup_det, orth_defect)``: the largest ``|det(B + U)|`` over a grid of
    SO(n) and ``||B B^T - I||``.  Requires ``||B|| >= 1/2``."""
    B = np.asarray(B, dtype=np.complex128)
    n = B.shape[0]
    if B.shape != (n, n) or n not in (2, 3):
        raise ValueError("vanishing_determinant_scan needs a 2 x 2 or 3 x 3 matrix")
    normB = operator_norm(B)
    if normB < 0.5:
        raise HypothesisError(f"||B|| = {normB:.6g} < 1/2")
    if n == 2:
        size = grid_size or 64
        rotations = np.array([so2(phi) for phi in 2.0 * math.pi * np.arange(size) / size])
    else:
        rotations = so3_grid(grid_size or 16)
    sup_det = np.max(np.abs(_batch_det(B[None, :, :] + rotations)))
    orth_defect = operator_norm(B @ B.T - np.eye(n))
    return float(sup_det), float(orth_defect)


def vanishing_determinant_suite(instances: int, rng: RngStream, n: int = 2, C: float = 2.0,
                                grid_size: int = None) -> LemmaReport:
    """``||B B^T - I|| <= C sup_det ||B||`` for complex Gaussian ``B`` with ``||B|| >= 1/2``
    (smaller draws are skipped)."""
    report = LemmaReport(f"vanishing-determinant/n={n}")
    for i in range(instances):
        g = rng.child(i).normal((2, n, n))
        B = (g[0] + 1j * g[1]) / math.sqrt(2.0)
        nb = operator_norm(B)
        if nb < 0.5:
            report.skip()
            continue
        sup_det, defect = vanishing_determinant_scan(B, grid_size)
        rhs = C * sup_det * nb
        report.record(rhs - defect, defect <= rhs, instance=i, sup_det=sup_det,
                      orth_defect=defect, norm=nb, B=B)
    return report


def low_dim_theorem_check(B, delta: float, t_grid, trials: int, rng: RngStream,
                          threads: int = 1) -> TailEstimate:
    """Tail of ``s_min(B + U)`` over Haar O(n), n in {2, 3}, after checking
    ``||B B^T - I|| >= delta ||B||^2``."""
    B = np.asarray(B, dtype=np.complex128)
    n = B.shape[0]
    if B.shape != (n, n) or n not in (2, 3):
        raise ValueError("low_dim_theorem_check needs a 2 x 2 or 3 x 3 matrix")
    defect = operator_norm(B @ B.T - np.eye(n))
    nb2 = operator_norm(B) ** 2
    if defect < delta * nb2:
        regime = " (approximately complex orthogonal relative to ||B||^2)" if defect <= 1.0 + 1e-12 else ""
        raise HypothesisError(
            f"||BB^T - I|| = {defect:.6g} < delta ||B||^2 = {delta * nb2:.6g}{regime}"
        )
    return tail_estimate(B, "orthogonal", t_grid, trials, rng, threads)


# --- Remez-type inequalities -------------------------------------------------

def monomials(dim: int, degree: int):
    """Exponent tuples of all monomials of total degree <= ``degree``."""
    return [e for e in itertools.product(range(degree + 1), repeat=dim) if sum(e) <= degree]


def random_polynomial(dim: int, degree: int, rng: RngStream) -> Callable[[np.ndarray], np.ndarray]:
    """Real polynomial with standard normal coefficients; evaluates on ``(N, dim)`` points."""
    exps = np.array(monomials(dim, degree))
    coef = rng.normal(len(exps))

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.prod(x[:, None, :] ** exps[None, :, :], axis=2) @ coef

    f.degree = degree
    f.exps = exps
    f.coef = coef
    return f


def _design(points, exps) -> np.ndarray:
    """Monomial values, one column per exponent tuple; reused across polynomials."""
    x = np.asarray(points, dtype=float)
    out = np.ones((x.shape[0], len(exps)))
    for j, e in enumerate(exps):
        for k, p in enumerate(e):
            if p:
                out[:, j] *= x[:, k] ** p
    return out


def _box_grid(lo, hi, per_axis):
    axes = [np.linspace(a, b, per_axis) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def remez_convex_instance(f, degree: int, V: Sequence, E: Sequence, per_axis: int = None):
    """Grid sups of ``|f|`` on boxes ``V`` and ``E`` and the Remez factor.

    Boxes are ``((lo_1, hi_1), ..., (lo_m, hi_m))``.  Returns
    ``(sup_V, sup_E, factor)`` with ``factor = (4 m |V| / |E|)^degree``.
    """
    m = len(V)
    per_axis = per_axis or (4001 if m == 1 else 201)
    vol = lambda box: float(np.prod([b - a for a, b in box]))
    grid_v = _box_grid([a for a, _ in V], [b for _, b in V], per_axis)
    grid_e = _box_grid([a for a, _ in E], [b for _, b in E], per_axis)
    sup_v = float(np.max(np.abs(f(grid_v))))
    sup_e = float(np.max(np.abs(f(grid_e))))
    factor = (4.0 * m * vol(V) / vol(E)) ** degree
    return sup_v, sup_e, factor


def _ratio_slack(sup_whole, sup_part, factor):
    """log-margin ``log(factor * sup_part) - log(sup_whole)``."""
    if sup_whole == 0.0:
        return math.inf
    if sup_part == 0.0:
        return -math.inf
    return math.log(factor) + math.log(sup_part) - math.log(sup_whole)


def remez_convex_check(poly_degree: int, dim: int, V_spec=None, E_fraction: float = 0.5,
                       trials: int = 100, rng: RngStream = None, per_axis: int = None) -> LemmaReport:
    """Random-coefficient polynomials on a box ``V`` (default ``[-1, 1]^dim``);
    ``E`` is the sub-box at the lower corner with ``|E| = E_fraction |V|``."""
    if dim not in (1, 2) or not 0 <= poly_degree <= 6:
        raise ValueError("dim must be 1 or 2 and degree at most 6")
    V = V_spec or [(-1.0, 1.0)] * dim
    side = E_fraction ** (1.0 / dim)
    E = [(a, a + side * (b - a)) for a, b in V]
    rng = rng or RngStream(0)
    report = LemmaReport(f"remez-convex/dim={dim}/deg={poly_degree}")
    per_axis = per_axis or (4001 if dim == 1 else 201)
    exps = monomials(dim, poly_degree)
    phi_v = _design(_box_grid([a for a, _ in V], [b for _, b in V], per_axis), exps)
    phi_e = _design(_box_grid([a for a, _ in E], [b for _, b in E], per_axis), exps)
    vol = lambda box: float(np.prod([b - a for a, b in box]))
    factor = (4.0 * dim * vol(V) / vol(E)) ** poly_degree
    for i in range(trials):
        f = random_polynomial(dim, poly_degree, rng.child(i))
        sup_v = float(np.max(np.abs(phi_v @ f.coef)))
        sup_e = float(np.max(np.abs(phi_e @ f.coef)))
        slack = _ratio_slack(sup_v, sup_e, factor)
        report.record(slack, slack >= -1e-12, trial=i, sup_V=sup_v, sup_E=sup_e, factor=factor)
    return report


def sphere_grid(m: int, n_points: int = None, cap_angle: float = math.pi):
    """Points of ``S^m`` (m in {1, 2}) within geodesic angle ``cap_angle`` of
    the last coordinate axis; ``cap_angle = pi`` gives the whole sphere."""
    if m == 1:
        k = n_points or 4096
        a = np.linspace(-cap_angle, cap_angle, k)
        return np.stack([np.sin(a), np.cos(a)], axis=1)
    k = n_points or 181
    th = np.linspace(0.0, cap_angle, k)
    ps = np.linspace(0.0, 2.0 * math.pi, 2 * k, endpoint=False)
    T, P = np.meshgrid(th, ps, indexing="ij")
    return np.stack([(np.sin(T) * np.cos(P)).ravel(), (np.sin(T) * np.sin(P)).ravel(), np.cos(T).ravel()], axis=1)


def _cap_angle(m: int, fraction: float) -> float:
    """Angular radius of a cap holding ``fraction`` of the sphere's measure."""
    if m == 1:
        return math.pi * fraction
    return math.acos(1.0 - 2.0 * fraction)


def _sphere_measure(m: int) -> float:
    return 2.0 * math.pi if m == 1 else 4.0 * math.pi


def remez_sphere_check(poly_degree: int, m: int, E_fraction: float, trials: int, rng: RngStream,
                       C1: float = SPHERE_C1, n_points: int = None) -> LemmaReport:
    """``sup_{S^m} |f| <= (C1 / |E|)^{2 deg} sup_E |f|`` for caps ``E``.

    ``extras["C1_needed"]`` is the smallest constant that would have sufficed
    over the run.
    """
    if m not in (1, 2):
        raise ValueError("m must be 1 or 2")
    whole = sphere_grid(m, n_points)
    angle = _cap_angle(m, E_fraction)
    cap = sphere_grid(m, n_points, angle)
    measure_e = E_fraction * _sphere_measure(m)
    report = LemmaReport(f"remez-sphere/m={m}/deg={poly_degree}")
    exps = monomials(m + 1, poly_degree)
    phi_s, phi_e = _design(whole, exps), _design(cap, exps)
    needed = 0.0
    for i in range(trials):
        f = random_polynomial(m + 1, poly_degree, rng.child(i))
        sup_s = float(np.max(np.abs(phi_s @ f.coef)))
        sup_e = float(np.max(np.abs(phi_e @ f.coef)))
        factor = (C1 / measure_e) ** (2 * poly_degree)
        slack = _ratio_slack(sup_s, sup_e, factor)
        if poly_degree > 0 and sup_e > 0:
            needed = max(needed, measure_e * (sup_s / sup_e) ** (1.0 / (2 * poly_degree)))
        report.record(slack, slack >= -1e-12, trial=i, sup_S=sup_s, sup_E=sup_e, factor=factor)
    report.extras.update(C1=C1, C1_needed=needed, E_measure=measure_e)
    return report


def remez_torus_check(poly_degree: int, arc_fraction: float, cap_fraction: float, trials: int,
                      rng: RngStream, C1: float = TORUS_C1, n_points: int = 48) -> LemmaReport:
    """The same inequality on ``S^1 x S^2`` in R^5 with exponent ``4 deg`` and
    ``E`` the product of an arc and a cap."""
    def product(circle, sphere):
        a = np.repeat(circle, len(sphere), axis=0)
        b = np.tile(sphere, (len(circle), 1))
        return np.concatenate([a, b], axis=1)

    whole = product(sphere_grid(1, 2 * n_points), sphere_grid(2, n_points))
    part = product(
        sphere_grid(1, 2 * n_points, _cap_angle(1, arc_fraction)),
        sphere_grid(2, n_points, _cap_angle(2, cap_fraction)),
    )
    measure_e = arc_fraction * 2.0 * math.pi * cap_fraction * 4.0 * math.pi
    report = LemmaReport(f"remez-torus/deg={poly_degree}")
    exps = monomials(5, poly_degree)
    phi_t, phi_e = _design(whole, exps), _design(part, exps)
    needed = 0.0
    for i in range(trials):
        f = random_polynomial(5, poly_degree, rng.child(i))
        sup_t = float(np.max(np.abs(phi_t @ f.coef)))
        sup_e = float(np.max(np.abs(phi_e @ f.coef)))
        factor = (C1 / measure_e) ** (4 * poly_degree)
        slack = _ratio_slack(sup_t, sup_e, factor)
        if poly_degree > 0 and sup_e > 0:
            needed = max(needed, measure_e * (sup_t / sup_e) ** (1.0 / (4 * poly_degree)))
        report.record(slack, slack >= -1e-12, trial=i, sup_T=sup_t, sup_E=sup_e, factor=factor)
    report.extras.update(C1=C1, C1_needed=needed, E_measure=measure_e)
    return report
