"""Eigenvalues of ``U D V`` with Haar ``U, V`` and prescribed singular values ``D``.

Provides the annulus radii from the singular-value law, coverage statistics
of sampled eigenvalue clouds, Stieltjes transforms of empirical measures and
the checkable Single Ring conditions.  The limiting eigenvalue density is
not computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from ._parallel import map_trials
from .ensembles import RngStream, haar_orthogonal, haar_unitary
from .linalg import Spectrum, eigenvalues, singular_values, smallest_singular_value

__all__ = [
    "EmpiricalMeasure",
    "AnnulusReport",
    "SRConditionReport",
    "Sr3Estimate",
    "sample_single_ring",
    "single_ring_trials",
    "ring_radii",
    "annulus_coverage",
    "stieltjes_transform",
    "check_sr_conditions",
    "estimate_sr3_integral",
    "symmetrized_singular_measure",
    "z_out_sides",
]

ATOM_COLLISION = 1e-12


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Equal-weight atoms on R or C."""

    atoms: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.atoms)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("an empirical measure needs a non-empty 1-D list of atoms")
        object.__setattr__(self, "atoms", a)

    @property
    def weight(self) -> float:
        return 1.0 / self.atoms.size

    def __len__(self):
        return self.atoms.size

    def scaled(self, alpha: float) -> "EmpiricalMeasure":
        return EmpiricalMeasure(alpha * self.atoms)


def _diag_entries(D) -> np.ndarray:
    d = np.asarray(D)
    if d.ndim == 2:
        d = np.diag(d)
    return d


def _haar(field: str, n: int, rng: RngStream) -> np.ndarray:
    if field == "complex":
        return haar_unitary(n, rng)
    if field == "real":
        return haar_orthogonal(n, rng)
    raise ValueError(f"field must be 'complex' or 'real', got {field!r}")


def sample_single_ring(D, field: str, rng: RngStream) -> Spectrum:
    """Eigenvalues of ``U diag(D) V`` with independent Haar ``U`` (stream child 0)
    and ``V`` (child 1) from U(n) or O(n)."""
    d = _diag_entries(D)
    if np.iscomplexobj(d) and np.any(d.imag != 0):
        raise ValueError("singular values must be real")
    d = np.real(d).astype(float)
    if np.any(d < 0):
        raise ValueError("singular values must be non-negative")
    n = len(d)
    U = _haar(field, n, rng.child(0))
    V = _haar(field, n, rng.child(1))
    return eigenvalues((U * d) @ V)


def single_ring_trials(D, field: str, trials: int, rng: RngStream, threads: int = 1):
    """Spectra of ``trials`` independent samples, trial ``i`` on ``rng.child(i)``."""
    return map_trials(lambda i: sample_single_ring(D, field, rng.child(i)), trials, threads)


def ring_radii(mu_s) -> Tuple[float, float]:
    """Inner and outer radius ``a = E[x^-2]^(-1/2)``, ``b = E[x^2]^(1/2)``.

    ``a`` is 0 when an atom sits at 0 (the negative moment diverges).
    """
    x = np.asarray(mu_s.atoms if isinstance(mu_s, EmpiricalMeasure) else mu_s, dtype=float)
    if x.size == 0:
        raise ValueError("empty measure")
    if np.any(x < 0):
        raise ValueError("singular-value atoms must be non-negative")
    b = math.sqrt(float(np.mean(x * x)))
    if np.any(x == 0):
        return 0.0, b
    a = 1.0 / math.sqrt(float(np.mean(1.0 / (x * x))))
    return a, b


@dataclass
class AnnulusReport:
    a: float
    b: float
    margin: float
    fraction_inside: float
    fraction_below_inner: float
    fraction_above_outer: float
    gap_occupancy: float
    gap: Tuple[float, float] = (0.0, 0.0)
    count: int = 0
    hist_edges: Optional[np.ndarray] = field(default=None, repr=False)
    hist_counts: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "margin": self.margin,
            "fraction_inside": self.fraction_inside,
            "fraction_below_inner": self.fraction_below_inner,
            "fraction_above_outer": self.fraction_above_outer,
            "gap_occupancy": self.gap_occupancy,
            "gap": list(self.gap),
            "count": self.count,
        }


def annulus_coverage(spec, a: float, b: float, margin: float, gap: Optional[Sequence[float]] = None,
                     bins: int = 64) -> AnnulusReport:
    """Classify eigenvalue moduli against ``[a - margin, b + margin]``.

    ``spec`` may be a :class:`Spectrum`, an array of eigenvalues or a list of
    spectra (pooled).  ``gap_occupancy`` is the fraction of moduli inside
    ``gap``, by default the middle third of ``(a, b)``.
    """
    if a > b:
        raise ValueError("a must not exceed b")
    if margin < 0:
        raise ValueError("margin must be non-negative")
    if isinstance(spec, Spectrum):
        lam = spec.eigenvalues
    elif isinstance(spec, (list, tuple)) and spec and isinstance(spec[0], Spectrum):
        lam = np.concatenate([s.eigenvalues for s in spec])
    else:
        lam = np.asarray(spec)
    r = np.abs(lam)
    total = r.size
    if gap is None:
        gap = (a + (b - a) / 3.0, a + 2.0 * (b - a) / 3.0)
    if total == 0:
        return AnnulusReport(a, b, margin, 0.0, 0.0, 0.0, 0.0, tuple(gap), 0)
    below = int(np.sum(r < a - margin))
    above = int(np.sum(r > b + margin))
    inside = total - below - above
    in_gap = int(np.sum((r > gap[0]) & (r < gap[1])))
    top = max(b + margin, float(r.max()))
    counts, edges = np.histogram(r, bins=bins, range=(0.0, top if top > 0 else 1.0))
    return AnnulusReport(
        a=a,
        b=b,
        margin=margin,
        fraction_inside=inside / total,
        fraction_below_inner=below / total,
        fraction_above_outer=above / total,
        gap_occupancy=in_gap / total,
        gap=(float(gap[0]), float(gap[1])),
        count=total,
        hist_edges=edges,
        hist_counts=counts,
    )


def stieltjes_transform(mu, z: complex) -> complex:
    """``S_mu(z) = mean over atoms x of 1 / (z - x)``."""
    x = np.asarray(mu.atoms if isinstance(mu, EmpiricalMeasure) else mu)
    diff = complex(z) - x
    if np.min(np.abs(diff)) <= ATOM_COLLISION:
        raise ValueError(f"z = {z} collides with an atom")
    return complex(np.mean(1.0 / diff))


@dataclass
class SRConditionReport:
    M_bound: float
    M: float
    sr1_pass: bool
    kappa: float
    kappa1: float
    sr2_max_im: float
    sr2_pass: bool
    symmetrized: bool = False
    sr3_estimate: float = float("nan")
    sr3_stderr: float = float("nan")
    sr3_delta: float = float("nan")

    def to_dict(self) -> dict:
        return {k: (v if not (isinstance(v, float) and math.isnan(v)) else None) for k, v in self.__dict__.items()}


def check_sr_conditions(D, M: float, kappa: float, kappa1: float, z_grid,
                        symmetrized: bool = False) -> SRConditionReport:
    """(SR1) ``max d_i <= M``; (SR2) ``max |Im S(z)| <= kappa1`` over ``z_grid``.

    Every grid point must have ``Im z >= n^-kappa``.  With ``symmetrized``
    the transform is taken of the atoms ``{+d_i, -d_i}`` instead of ``{d_i}``.
    """
    d = np.real(_diag_entries(D)).astype(float)
    n = len(d)
    z = np.atleast_1d(np.asarray(z_grid, dtype=np.complex128))
    if z.size == 0:
        raise ValueError("z_grid is empty")
    floor = n ** (-kappa)
    if np.any(z.imag < floor * (1 - 1e-12)):
        raise ValueError(f"every grid point needs Im z >= n^-kappa = {floor:.6g}")
    atoms = np.concatenate([d, -d]) if symmetrized else d
    mu = EmpiricalMeasure(atoms)
    max_im = max(abs(stieltjes_transform(mu, zz).imag) for zz in z)
    M_bound = float(np.max(np.abs(d)))
    return SRConditionReport(
        M_bound=M_bound,
        M=float(M),
        sr1_pass=M_bound <= M,
        kappa=float(kappa),
        kappa1=float(kappa1),
        sr2_max_im=float(max_im),
        sr2_pass=bool(max_im <= kappa1),
        symmetrized=symmetrized,
    )


@dataclass(frozen=True)
class Sr3Estimate:
    """Monte Carlo mean of ``1{sigma_n(z) < n^-delta} log^2 sigma_n(z)``."""

    estimate: float
    stderr: float
    trials: int
    fired: int

    def __float__(self):
        return self.estimate


def estimate_sr3_integral(D, z: complex, delta_exp: float, trials: int, rng: RngStream,
                          field: str = "complex", threads: int = 1) -> Sr3Estimate:
    """Estimate ``E[1{s_min(UDV - zI) < n^-delta} log^2 s_min(UDV - zI)]``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d = np.real(_diag_entries(D)).astype(float)
    n = len(d)
    threshold = n ** (-delta_exp)
    I = np.eye(n)

    def one(i):
        sub = rng.child(i)
        A = (_haar(field, n, sub.child(0)) * d) @ _haar(field, n, sub.child(1))
        return smallest_singular_value(A - z * I)

    sig = np.asarray(map_trials(one, trials, threads))
    fired = sig < threshold
    vals = np.where(fired, np.log(np.where(sig > 0, sig, np.finfo(float).tiny)) ** 2, 0.0)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return Sr3Estimate(mean, stderr, trials, int(fired.sum()))


def symmetrized_singular_measure(A, z: complex = 0.0) -> EmpiricalMeasure:
    """Atoms ``{+s_k, -s_k}`` of the singular values of ``A - z I``."""
    A = np.asarray(A, dtype=np.complex128)
    s = singular_values(A - z * np.eye(A.shape[0]))
    return EmpiricalMeasure(np.concatenate([s, -s]))


def z_out_sides(U, D, V, z: complex):
    """Both sides of ``s_min(U D V - z I) = |z| s_min(D / z - U^-1 V^-1)``."""
    d = _diag_entries(D)
    n = len(d)
    lhs = smallest_singular_value((U * d) @ V - z * np.eye(n))
    rhs = abs(z) * smallest_singular_value(np.diag(d / z) - U.conj().T @ V.conj().T)
    return lhs, rhs
