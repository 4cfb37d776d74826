"""Monte Carlo tails of the smallest singular value of ``D + U``.

``U`` is Haar on U(n), O(n) or SO(n).  The lab estimates
``t -> P(s_min(D + U) <= t)`` on a grid, fits a power law to the
non-saturated part, checks the hypotheses of the orthogonal-perturbation
theorems for a diagonal ``D`` and provides the 2 x 2 complex-orthogonal
counterexample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from ._parallel import map_trials
from .ensembles import ENSEMBLES, RngStream, haar
from .linalg import determinant, smallest_singular_value

__all__ = [
    "TailEstimate",
    "ExponentFit",
    "AssumptionReport",
    "InsufficientDataError",
    "as_square",
    "wilson_interval",
    "perturbed_smin",
    "smin_samples",
    "tail_from_samples",
    "tail_estimate",
    "fit_tail_exponent",
    "check_assumptions",
    "counterexample_matrix",
    "counterexample_scan",
    "SINGULAR_THRESHOLD",
]

# s_min at or below this counts as numerically singular (n <= 10)
SINGULAR_THRESHOLD = 1e-6


class InsufficientDataError(ValueError):
    pass


def fmt(x: float) -> str:
    """Round-trip exact decimal rendering used in every emitted file."""
    return format(float(x), ".17g")


def as_square(D) -> np.ndarray:
    """A diagonal given as a vector, or a square matrix, as a complex matrix."""
    A = np.asarray(D)
    if A.ndim == 1:
        return np.diag(A.astype(np.complex128))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"D must be a diagonal vector or a square matrix, got shape {A.shape}")
    return A.astype(np.complex128)


def wilson_interval(hits, trials: int, level: float = 0.95):
    """Wilson score interval for binomial proportions (vectorized over ``hits``)."""
    z = NormalDist().inv_cdf(0.5 + level / 2.0)
    k = np.asarray(hits, dtype=float)
    p = k / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2.0 * trials)) / denom
    half = z * np.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    lo = np.clip(centre - half, 0.0, 1.0)
    hi = np.clip(centre + half, 0.0, 1.0)
    # guard the p_hat in [lo, hi] invariant against rounding at p = 0 or 1
    return np.minimum(lo, p), np.maximum(hi, p)


@dataclass
class TailEstimate:
    """Empirical ``P(s_min <= t)`` on ``t_grid`` with Wilson 95% bands."""

    t_grid: np.ndarray
    hits: np.ndarray
    trials: int
    ensemble: str
    p_hat: np.ndarray = field(init=False)
    ci_low: np.ndarray = field(init=False)
    ci_high: np.ndarray = field(init=False)
    samples: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.hits = np.asarray(self.hits, dtype=np.int64)
        self.p_hat = self.hits / self.trials
        self.ci_low, self.ci_high = wilson_interval(self.hits, self.trials)

    def __len__(self):
        return len(self.t_grid)

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.hits) >= 0))

    def to_csv(self, header_lines: Sequence[str] = ()) -> str:
        lines = [f"# {h}" for h in header_lines]
        lines.append("t,hits,trials,p_hat,ci_low,ci_high")
        for i in range(len(self.t_grid)):
            lines.append(
                ",".join(
                    [
                        fmt(self.t_grid[i]),
                        str(int(self.hits[i])),
                        str(self.trials),
                        fmt(self.p_hat[i]),
                        fmt(self.ci_low[i]),
                        fmt(self.ci_high[i]),
                    ]
                )
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExponentFit:
    c_hat: float
    logC_hat: float
    r_squared: float
    t_range_used: tuple

    def to_dict(self) -> dict:
        return {
            "c_hat": self.c_hat,
            "logC_hat": self.logC_hat,
            "r_squared": self.r_squared,
            "t_min": self.t_range_used[0],
            "t_max": self.t_range_used[1],
        }


@dataclass(frozen=True)
class AssumptionReport:
    K_observed: float
    delta_sq_observed: float
    dist_to_orthogonal: float
    passes_thm13: bool
    passes_thm12: bool


def perturbed_smin(D, ensemble: str, rng: RngStream) -> float:
    """``s_min(D + U)`` for one Haar draw ``U`` from ``ensemble``."""
    A = as_square(D)
    U = haar(A.shape[0], ensemble, rng)
    return smallest_singular_value(A + U)


def smin_samples(D, ensemble: str, trials: int, rng: RngStream, threads: int = 1) -> np.ndarray:
    """``trials`` independent values of ``s_min(D + U)``; trial ``i`` uses ``rng.child(i)``."""
    if ensemble not in ENSEMBLES:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    A = as_square(D)
    out = map_trials(lambda i: perturbed_smin(A, ensemble, rng.child(i)), trials, threads)
    return np.asarray(out, dtype=float)


def _check_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise ValueError("t_grid must be a non-empty 1-D sequence")
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be positive and strictly ascending")
    return t


def tail_from_samples(samples, t_grid, ensemble: str = "unitary") -> TailEstimate:
    """Cumulative threshold counts of one fixed sample, so ``p_hat`` is monotone."""
    t = _check_grid(t_grid)
    s = np.sort(np.asarray(samples, dtype=float))
    if len(s) == 0:
        raise ValueError("no samples")
    hits = np.searchsorted(s, t, side="right")
    return TailEstimate(t, hits, len(s), ensemble, samples=np.asarray(samples, dtype=float))


def tail_estimate(D, ensemble: str, t_grid, trials: int, rng: RngStream, threads: int = 1) -> TailEstimate:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    t = _check_grid(t_grid)
    samples = smin_samples(D, ensemble, trials, rng, threads)
    return tail_from_samples(samples, t, ensemble)


def fit_tail_exponent(est: TailEstimate) -> ExponentFit:
    """Least-squares line through ``(log t, log p_hat)`` over unsaturated points.

    Only the grid points with ``0 < p_hat < 1`` enter the fit; at least three
    are required.  ``c_hat`` is the slope, ``logC_hat`` the intercept.
    """
    p = np.asarray(est.p_hat, dtype=float)
    mask = (p > 0) & (p < 1)
    if mask.sum() < 3:
        raise InsufficientDataError(
            f"insufficient nondegenerate points: {int(mask.sum())} of {len(p)} have 0 < p_hat < 1"
        )
    x = np.log(np.asarray(est.t_grid, dtype=float)[mask])
    y = np.log(p[mask])
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    syy = np.sum((y - ym) ** 2)
    sxy = np.sum((x - xm) * (y - ym))
    slope = sxy / sxx
    intercept = ym - slope * xm
    r2 = 1.0 if syy == 0 else min(1.0, max(0.0, sxy * sxy / (sxx * syy)))
    t_used = np.asarray(est.t_grid, dtype=float)[mask]
    return ExponentFit(float(slope), float(intercept), float(r2), (float(t_used[0]), float(t_used[-1])))


def check_assumptions(D, K: float, delta: float) -> AssumptionReport:
    """Observed ``K``, ``delta`` for a diagonal ``D`` against supplied thresholds.

    ``passes_thm13``: ``max|d_i| <= K`` and ``max|d_i^2 - d_j^2| >= delta``.
    ``passes_thm12``: ``max|d_i| <= K`` and ``max|s_i(D) - 1| >= delta``, the
    latter being the operator-norm distance from ``D`` to O(n).
    """
    d = np.asarray(D, dtype=np.complex128)
    if d.ndim == 2:
        if np.any(d - np.diag(np.diag(d))):
            raise ValueError("check_assumptions expects a diagonal D")
        d = np.diag(d)
    if d.size == 0:
        raise ValueError("D is empty")
    K_obs = float(np.max(np.abs(d)))
    sq = d * d
    delta_sq = float(np.max(np.abs(sq[:, None] - sq[None, :])))
    dist = float(np.max(np.abs(np.abs(d) - 1.0)))
    return AssumptionReport(
        K_observed=K_obs,
        delta_sq_observed=delta_sq,
        dist_to_orthogonal=dist,
        passes_thm13=K_obs <= K and delta_sq >= delta,
        passes_thm12=K_obs <= K and dist >= delta,
    )


def counterexample_matrix(M: float) -> np.ndarray:
    """``M * [[1, i], [i, -1]]``: complex orthogonal defect 1, yet ``B + U``
    is singular up to ``O(1/M)`` for every rotation ``U``."""
    if not M > 0:
        raise ValueError("M must be positive")
    return M * np.array([[1.0, 1j], [1j, -1.0]])


@dataclass(frozen=True)
class CounterexampleScan:
    M: float
    dets: np.ndarray
    smins: np.ndarray
    bbt_max_abs: float

    @property
    def max_det_error(self) -> float:
        return float(np.max(np.abs(self.dets - 1.0)))

    @property
    def max_smin(self) -> float:
        return float(np.max(self.smins))


def counterexample_scan(M: float, draws: int, rng: RngStream, threads: int = 1,
                        ensemble: str = "orthogonal") -> CounterexampleScan:
    """``det(B + U)`` and ``s_min(B + U)`` for Haar ``U`` in O(2) (or SO(2))."""
    B = counterexample_matrix(M)

    def one(i):
        U = haar(2, ensemble, rng.child(i))
        A = B + U
        return determinant(A), smallest_singular_value(A)

    res = map_trials(one, draws, threads)
    dets = np.array([r[0] for r in res], dtype=np.complex128)
    smins = np.array([r[1] for r in res])
    return CounterexampleScan(float(M), dets, smins, float(np.max(np.abs(B @ B.T))))


def obstruction_band(trials: int, p: float = 0.5, level: float = 0.99):
    """Wilson band around ``p`` for ``trials`` Bernoulli draws, as a frequency interval."""
    lo, hi = wilson_interval(np.array([round(p * trials)]), trials, level)
    return float(lo[0]), float(hi[0])


def _log_grid(lo: float, hi: float, points: int) -> np.ndarray:
    return np.exp(np.linspace(math.log(lo), math.log(hi), points))
