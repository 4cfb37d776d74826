"""Seedable samplers for Haar measures, Gaussian matrices and skew perturbations.

Every sampler is a pure function of its parameters and an :class:`RngStream`:
calling it twice with the same stream returns the same matrix.  Independent
draws inside one experiment come from derived streams (:meth:`RngStream.child`).

Haar elements are produced from Ginibre matrices by QR with a non-negative
``R`` diagonal; without that phase correction the result is not Haar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import determinant, qr_decompose

__all__ = [
    "RngStream",
    "gaussian_real_matrix",
    "gaussian_complex_matrix",
    "haar_unitary",
    "haar_orthogonal",
    "haar_special_orthogonal",
    "haar",
    "so2",
    "hurwitz_so3",
    "hurwitz_rotation",
    "sphere_to_rotation",
    "skew_hermitian_bordered",
    "gaussian_skew_symmetric",
    "ENSEMBLES",
]

ENSEMBLES = ("unitary", "orthogonal", "special_orthogonal")

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """Address of a reproducible random stream.

    The bits come from the counter-based Philox generator keyed by
    ``(seed, stream_id)``; nothing is consumed from shared state, so the
    same stream can be handed to any thread.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def child(self, index: int) -> "RngStream":
        """Derived stream number ``index``; children of distinct indices
        (or of distinct parents) have distinct Philox keys."""
        sid = _splitmix64(self.stream_id ^ _splitmix64((int(index) + 1) & _MASK64))
        return RngStream(self.seed, sid)

    def generator(self) -> np.random.Generator:
        key = self.seed | (self.stream_id << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def uniform(self, size) -> np.ndarray:
        return self.generator().random(size)

    def normal(self, size) -> np.ndarray:
        return box_muller(self.generator(), size)


def box_muller(gen: np.random.Generator, size) -> np.ndarray:
    """Standard normals from pairs of uniforms (both Box-Muller outputs used)."""
    count = int(np.prod(size)) if np.ndim(size) else int(size)
    half = (count + 1) // 2
    u1 = 1.0 - gen.random(half)  # (0, 1]
    u2 = gen.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * math.pi * u2
    z = np.empty(2 * half)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:count].reshape(size)


def gaussian_real_matrix(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    """``rows x cols`` matrix of i.i.d. N(0, 1) entries (real dtype)."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    return rng.normal((rows, cols))


def gaussian_complex_matrix(rows: int, cols: int, rng: RngStream) -> np.ndarray:
    """Ginibre matrix with ``E|g|^2 = 1``."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    z = rng.normal((2, rows, cols))
    return (z[0] + 1j * z[1]) / math.sqrt(2.0)


def haar_unitary(n: int, rng: RngStream) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    Q, _ = qr_decompose(gaussian_complex_matrix(n, n, rng))
    return Q


def haar_orthogonal(n: int, rng: RngStream) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    Q, _ = qr_decompose(gaussian_real_matrix(n, n, rng))
    return np.ascontiguousarray(Q.real)


def haar_special_orthogonal(n: int, rng: RngStream) -> np.ndarray:
    """Haar on SO(n): an O(n) draw with its first row negated when det = -1."""
    Q = haar_orthogonal(n, rng)
    if determinant(Q).real < 0:
        Q[0, :] *= -1.0
    return Q


def haar(n: int, ensemble: str, rng: RngStream) -> np.ndarray:
    if ensemble == "unitary":
        return haar_unitary(n, rng)
    if ensemble == "orthogonal":
        return haar_orthogonal(n, rng)
    if ensemble == "special_orthogonal":
        return haar_special_orthogonal(n, rng)
    raise ValueError(f"unknown ensemble {ensemble!r}; expected one of {ENSEMBLES}")


def so2(phi: float) -> np.ndarray:
    """Rotation ``[[cos, sin], [-sin, cos]]``."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, s], [-s, c]])


def sphere_to_rotation(z) -> np.ndarray:
    """A rotation of R^3 sending ``e_z`` to the unit vector ``z``.

    Rotation about the axis ``e_z x z``; at the antipode ``z = -e_z`` the
    half-turn about the x axis is used.
    """
    z1, z2, z3 = (float(v) for v in z)
    if z3 <= -1.0 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    k = 1.0 / (1.0 + z3)
    return np.array(
        [
            [1.0 - k * z1 * z1, -k * z1 * z2, z1],
            [-k * z1 * z2, 1.0 - k * z2 * z2, z2],
            [-z1, -z2, z3],
        ]
    )


def hurwitz_rotation(phi: float, z) -> np.ndarray:
    """Rotation of the (x, y) plane by ``phi`` followed by the rotation taking
    the z axis to ``z``.  Uniform ``phi`` and uniform ``z`` on S^2 give Haar SO(3)."""
    Rxy = np.eye(3)
    c, s = math.cos(phi), math.sin(phi)
    Rxy[:2, :2] = [[c, -s], [s, c]]
    return sphere_to_rotation(z) @ Rxy


def hurwitz_so3(rng: RngStream) -> np.ndarray:
    g = rng.normal(3)
    norm = math.sqrt(float(g @ g))
    z = g / norm if norm > 0.0 else np.array([0.0, 0.0, 1.0])
    phi = 2.0 * math.pi * rng.child(1).uniform(1)[0]
    return hurwitz_rotation(phi, z)


def skew_hermitian_bordered(n: int, rng: RngStream) -> np.ndarray:
    """``[[i s, -Z^T], [Z, 0]]`` with ``s`` and ``Z`` standard real normal."""
    if n < 2:
        raise ValueError("skew_hermitian_bordered needs n >= 2")
    g = rng.normal(n)
    S = np.zeros((n, n), dtype=np.complex128)
    S[0, 0] = 1j * g[0]
    S[1:, 0] = g[1:]
    S[0, 1:] = -g[1:]
    return S


def gaussian_skew_symmetric(n: int, rng: RngStream) -> np.ndarray:
    """Real ``S`` with ``S^T = -S`` and i.i.d. N(0, 1) entries above the diagonal."""
    if n < 2:
        raise ValueError("gaussian_skew_symmetric needs n >= 2")
    iu = np.triu_indices(n, k=1)
    S = np.zeros((n, n))
    S[iu] = rng.normal(len(iu[0]))
    S.T[iu] = -S[iu]
    return S
