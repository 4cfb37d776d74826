"""Numbered acceptance criteria, each checked at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from haarlab.ensembles import (
    RngStream,
    gaussian_complex_matrix,
    haar_orthogonal,
    haar_special_orthogonal,
    haar_unitary,
    hurwitz_so3,
)
from haarlab.harness import ExperimentConfig, run_experiment
from haarlab.linalg import determinant, eigenvalues, qr_decompose, singular_values, svd
from haarlab.single_ring import (
    annulus_coverage,
    estimate_sr3_integral,
    ring_radii,
    single_ring_trials,
)
from haarlab.smin import (
    counterexample_matrix,
    counterexample_scan,
    obstruction_band,
    perturbed_smin,
    tail_estimate,
)
from haarlab.suites import SUITES, run_suite

ROOT = RngStream(20241019)
THREADS = 8


def _say(number, text):
    print(f"[criterion {number}] {text}")


# 1 ----------------------------------------------------------------------------------

@pytest.mark.acceptance(1, "sampler correctness")
def test_01_sampler_correctness():
    start = time.perf_counter()
    rng = ROOT.child(1)
    worst = 0.0
    for n in (2, 8, 64):
        for i in range(100):
            U = haar_unitary(n, rng.child(n).child(i))
            worst = max(worst, np.linalg.norm(U.conj().T @ U - np.eye(n), 2))
    det_err = max(abs(determinant(haar_special_orthogonal(n, rng.child(100 + n).child(i))) - 1.0)
                  for n in (2, 3, 5, 8) for i in range(50))
    pos = sum(determinant(haar_orthogonal(3, rng.child(200).child(i))).real > 0 for i in range(10_000)) / 10_000
    a = [np.trace(hurwitz_so3(rng.child(300).child(i))) for i in range(10_000)]
    b = [np.trace(haar_special_orthogonal(3, rng.child(400).child(i))) for i in range(10_000)]
    p_ks = stats.ks_2samp(a, b).pvalue
    elapsed = time.perf_counter() - start
    _say(1, f"max ||U*U-I||={worst:.2e} max |det-1|={det_err:.2e} O(3) positive={pos:.4f} "
            f"KS p={p_ks:.3f} runtime={elapsed:.1f}s")
    assert worst <= 1e-10
    assert det_err <= 1e-10
    assert 0.47 <= pos <= 0.53
    assert p_ks > 0.01
    assert elapsed < 30


# 2 ----------------------------------------------------------------------------------

@pytest.mark.acceptance(2, "kernel correctness")
def test_02_kernel_correctness():
    rng = ROOT.child(2)
    worst_svd = worst_qr = worst_det = 0.0
    for i in range(200):
        sub = rng.child(i)
        n = 1 + int(sub.child(0).uniform(1)[0] * 64)
        A = gaussian_complex_matrix(n, n, sub.child(1))
        norm = np.linalg.norm(A, 2)
        f = svd(A)
        worst_svd = max(worst_svd, np.linalg.norm(A - (f.left * f.singular_values) @ f.right.conj().T, 2) / norm)
        Q, R = qr_decompose(A)
        worst_qr = max(worst_qr, np.linalg.norm(A - Q @ R, 2) / norm)
        d = abs(determinant(A))
        worst_det = max(worst_det, abs(d - float(np.prod(singular_values(A)))) / d)
    rot_err = 0.0
    for phi in np.linspace(0.1, 3.0, 20):
        R2 = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
        ev = np.sort_complex(eigenvalues(R2).eigenvalues)
        rot_err = max(rot_err, np.max(np.abs(ev - np.sort_complex(np.exp([1j * phi, -1j * phi])))))
    _say(2, f"svd residual={worst_svd:.2e} qr residual={worst_qr:.2e} rotation eig err={rot_err:.2e} "
            f"|det| vs prod sigma rel={worst_det:.2e}")
    assert worst_svd <= 1e-9 and worst_qr <= 1e-9
    assert rot_err <= 1e-8
    assert worst_det <= 1e-6


# 3 ----------------------------------------------------------------------------------

@pytest.mark.acceptance(3, "trivial exactness")
def test_03_trivial_exactness():
    rng = ROOT.child(3)
    err = max(abs(perturbed_smin(np.zeros((16, 16)), ens, rng.child(k).child(i)) - 1.0)
              for k, ens in enumerate(("unitary", "orthogonal")) for i in range(100))
    _say(3, f"max |s_min(U) - 1| = {err:.2e}")
    assert err <= 1e-10


# 4 ----------------------------------------------------------------------------------

@pytest.mark.acceptance(4, "odd-dimension obstruction")
def test_04_odd_dimension_obstruction():
    start = time.perf_counter()
    est = tail_estimate(-np.ones(5), "orthogonal", [1e-6], 2000, ROOT.child(4), threads=THREADS)
    elapsed = time.perf_counter() - start
    lo, hi = obstruction_band(2000, 0.5, 0.99)
    _say(4, f"frequency={est.p_hat[0]:.4f} band=[{lo:.4f}, {hi:.4f}] runtime={elapsed:.1f}s")
    assert lo <= est.p_hat[0] <= hi
    assert elapsed < 60


# 5 ----------------------------------------------------------------------------------

@pytest.mark.acceptance(5, "complex-orthogonal counterexample on O(2)")
def test_05_counterexample_o2():
    # The criterion names the full group O(2).  For a reflection the determinant is
    # -1 - 2 M exp(i phi), so about half the draws cannot satisfy it; the check is kept
    # as stated and its outcome recorded.
    scan = counterexample_scan(100.0, 1000, ROOT.child(5), ensemble="orthogonal")
    B = counterexample_matrix(100.0)
    bbt_zero = np.array_equal(B @ B.T, np.zeros((2, 2)))
    so2 = counterexample_scan(100.0, 1000, ROOT.child(5), ensemble="special_orthogonal")
    _say(5, f"O(2): max |det-1|={scan.max_det_error:.3e} max s_min={scan.max_smin:.3e}; "
            f"SO(2): max |det-1|={so2.max_det_error:.3e} max s_min={so2.max_smin:.3e}; BB^T=0: {bbt_zero}")
    det_err, smin_max = scan.max_det_error, scan.max_smin
    assert bbt_zero
    assert det_err <= 1e-8
    assert smin_max <= 0.1


# 6 ----------------------------------------------------------------------------------

@pytest.mark.acceptance(6, "single ring radii")
def test_06_single_ring_radii():
    start = time.perf_counter()
    a, b = ring_radii(np.linspace(1, 2, 1000))
    spectra = single_ring_trials(np.linspace(1, 2, 256), "complex", 10, ROOT.child(6), threads=THREADS)
    rep = annulus_coverage(spectra, math.sqrt(2), math.sqrt(7 / 3), 0.15)
    elapsed = time.perf_counter() - start
    _say(6, f"a={a:.6f} b={b:.6f} inside={rep.fraction_inside:.4f} runtime={elapsed:.1f}s")
    assert abs(a - math.sqrt(2)) <= 1e-3 and abs(b - math.sqrt(7 / 3)) <= 1e-3
    assert rep.fraction_inside >= 0.98
    assert elapsed < 120


# 7 ----------------------------------------------------------------------------------

@pytest.mark.acceptance(7, "no forbidden zones")
def test_07_no_forbidden_zones():
    d = np.concatenate([np.ones(128), 2 * np.ones(128)])
    a, b = ring_radii(d)
    spectra = single_ring_trials(d, "complex", 10, ROOT.child(7), threads=THREADS)
    rep = annulus_coverage(spectra, a, b, 0.15)
    _say(7, f"gap occupancy={rep.gap_occupancy:.4f} (a={a:.4f}, b={b:.4f})")
    assert rep.gap_occupancy > 0


# 8 - 13 -------------------------------------------------------------------------------

def _suite(number, name, instances):
    r = run_suite(name, instances, ROOT.child(number).child(list(SUITES).index(name)), threads=THREADS)
    _say(number, r.summary_line())
    return r


@pytest.mark.acceptance(8, "identity perturbation lemma")
def test_08_identity_perturbation():
    r = _suite(8, "identity-perturbation", 1000)
    assert r.instances == 1000 and r.violations == 0


@pytest.mark.acceptance(9, "quadratic form identity")
def test_09_quadratic_form():
    r = _suite(9, "quadratic-form", 500)
    assert r.instances == 500 and r.violations == 0


@pytest.mark.acceptance(10, "well- and poorly-invertible minors")
def test_10_minors():
    well = _suite(10, "well-invertible-minor", 100)
    poor = _suite(10, "poorly-invertible-minor", 10_000)
    freq, cap = poor.extras["small_ball_frequency"], poor.extras["small_ball_bound"]
    _say(10, f"small-ball frequency={freq:.4f} cap 10 t sqrt(n)={cap:.4f}")
    assert well.instances == 100 * 10_000 and well.violations == 0
    assert poor.extras["draws"] == 10_000 and poor.violations == 0
    assert freq <= 10 * 0.01 * math.sqrt(10)


@pytest.mark.acceptance(11, "tail decay of the low-dimensional theorems")
def test_11_tails():
    tails = [_suite(11, "gaussian-perturbation", 10_000).extras["tail"]]
    tails += _suite(11, "breaking-orthogonality", 10_000).extras["tails"]
    tails.append(_suite(11, "low-dim", 10_000).extras["tail"])
    for est in tails:
        _say(11, f"t_min={est.t_grid[0]:.0e} p_hat(t_min)={est.p_hat[0]:.4f} monotone={est.is_monotone()}")
        assert est.trials == 10_000
        assert est.is_monotone()
        assert est.p_hat[0] <= 0.05


@pytest.mark.acceptance(12, "trig coefficients and vanishing determinant")
def test_12_trig_and_vanishing_determinant():
    trig = _suite(12, "trig-coefficients", 200)
    van = _suite(12, "vanishing-determinant", 200)
    assert trig.instances == 200 and trig.violations == 0
    assert van.violations == 0


@pytest.mark.acceptance(13, "Remez checks")
def test_13_remez():
    for name in ("remez-convex", "remez-sphere", "remez-torus"):
        r = _suite(13, name, 100)
        assert r.instances >= 100 and r.violations == 0


# 14 ---------------------------------------------------------------------------------

@pytest.mark.acceptance(14, "SR3 integral bound")
def test_14_sr3():
    # At z = 1.5 the point lies inside the ring [sqrt(2), sqrt(7/3)], where the smallest
    # singular value of A - z is of order 1/n, so the integrand fires on almost every trial
    # and the mean of log^2 is near 11.  The criterion is kept as stated.
    start = time.perf_counter()
    d = np.linspace(1, 2, 64)
    results = {}
    for k, z in enumerate((0.5, 1.5, 2.5)):
        est = estimate_sr3_integral(d, z, 0.2, 500, ROOT.child(14).child(k), threads=THREADS)
        results[z] = est
        _say(14, f"z={z}: estimate={est.estimate:.4f} stderr={est.stderr:.4f} fired={est.fired}/{est.trials}")
    elapsed = time.perf_counter() - start
    _say(14, f"runtime={elapsed:.1f}s")
    assert elapsed < 300
    assert all(math.isfinite(e.stderr) for e in results.values())
    failing = {z: e.estimate for z, e in results.items() if e.estimate > 1.0}
    assert not failing, f"estimate above 1.0 at {failing}"


# 15 ---------------------------------------------------------------------------------

REPRO = {
    "tail": dict(n=8, d_spec="uniform:1:2", trials=2000, t_grid="log:1e-6:1e-1:25"),
    "lemma": dict(lemma="all", instances=40),
    "single-ring": dict(n=64, d_spec="uniform:1:2", trials=4),
    "sr-conditions": dict(n=32, d_spec="uniform:1:2", trials=100),
    "counterexample": dict(ensemble="orthogonal", trials=200),
}


@pytest.mark.acceptance(15, "reproducibility across thread counts")
@pytest.mark.parametrize("experiment", list(REPRO))
def test_15_reproducibility(tmp_path, experiment):
    files = {}
    for threads in (1, 8):
        cfg = ExperimentConfig(experiment=experiment, seed=42, threads=threads,
                               out_path=str(tmp_path / f"t{threads}" / "out"), **REPRO[experiment])
        files[threads] = run_experiment(cfg).outputs
    names = [Path(p).name for p in files[1]]
    assert names == [Path(p).name for p in files[8]]
    same = all(Path(a).read_bytes() == Path(b).read_bytes() for a, b in zip(files[1], files[8]))
    _say(15, f"{experiment}: {', '.join(names)} identical={same}")
    assert same
