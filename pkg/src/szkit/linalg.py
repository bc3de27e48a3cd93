"""Linear symplectic algebra on R^{2n} in (q_1..q_n, p_1..p_n) block order.

Conventions used throughout szkit:

* ``omega0(u, v) = sum_j u_qj v_pj - u_pj v_qj`` (the form dq ^ dp),
* ``J0 (a, b) = (-b, a)``, i.e. multiplication by i under z = q + i p,
* ``omega0(u, J0 v) = <u, v>``, so J0 is compatible with the Euclidean metric,
* a real matrix commuting with J0, ``[[A, -B], [B, A]]``, is the complex
  matrix ``A + iB``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy.interpolate import CubicSpline

from .config import DEFAULT
from .errors import DegenerateHessian, DimensionMismatch, InvalidMatrix, NotALoop


def J0(n: int) -> np.ndarray:
    """Standard complex structure on R^{2n}."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


def omega_matrix(n: int) -> np.ndarray:
    """Gram matrix W of the standard form, omega0(u, v) = u^T W v."""
    return -J0(n)


def omega0(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.shape[-1] // 2
    return np.sum(u[..., :n] * v[..., n:] - u[..., n:] * v[..., :n], axis=-1)


def half_dim(M: np.ndarray) -> int:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] % 2:
        raise InvalidMatrix(f"odd dimension {M.shape[0]}")
    return M.shape[0] // 2


def _finite(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise InvalidMatrix("matrix has non-finite entries")
    return M


def matrix_exponential(A, t: float = 1.0) -> np.ndarray:
    """exp(tA) by scaling and squaring with Pade approximants."""
    A = _finite(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {A.shape}")
    if not np.isfinite(t):
        raise InvalidMatrix("non-finite time")
    return scipy.linalg.expm(t * A)


def symplectic_residual(M) -> float:
    M = np.asarray(M, dtype=float)
    n = half_dim(M)
    J = J0(n)
    return float(np.max(np.abs(M.T @ J @ M - J)))


def is_symplectic(M, tol: float = DEFAULT.symplectic_tol) -> bool:
    """True iff ||M^T J0 M - J0||_inf <= tol."""
    return symplectic_residual(M) <= tol


def is_symmetric(S, tol: float = DEFAULT.symmetric_tol) -> bool:
    S = np.asarray(S, dtype=float)
    return S.ndim == 2 and S.shape[0] == S.shape[1] and bool(np.max(np.abs(S - S.T), initial=0.0) <= tol)


def unitary_part(M) -> np.ndarray:
    """Orthogonal factor U of the polar decomposition M = U P.

    For symplectic M the factor commutes with J0, so it is the image of M
    under the retraction Sp(2n) -> U(n).
    """
    M = _finite(M)
    half_dim(M)
    W, s, Vt = np.linalg.svd(M)
    if s[-1] <= 1e-14 * max(s[0], 1.0):
        raise InvalidMatrix("singular matrix has no polar decomposition")
    return W @ Vt


def to_complex(M) -> np.ndarray:
    """Complex n x n matrix of a real 2n x 2n matrix commuting with J0."""
    M = np.asarray(M, dtype=float)
    n = half_dim(M)
    A = 0.5 * (M[:n, :n] + M[n:, n:])
    B = 0.5 * (M[n:, :n] - M[:n, n:])
    return A + 1j * B


def to_real(U) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    A, B = U.real, U.imag
    return np.block([[A, -B], [B, A]])


def negative_index(S, eps: float = DEFAULT.eig_eps) -> int:
    """Number of negative eigenvalues of a nondegenerate symmetric matrix."""
    S = _finite(S)
    if not is_symmetric(S, tol=1e-12 * max(1.0, float(np.max(np.abs(S), initial=0.0)))):
        raise InvalidMatrix("matrix is not symmetric")
    lam = np.linalg.eigvalsh(0.5 * (S + S.T))
    if np.any(np.abs(lam) <= eps):
        raise DegenerateHessian(f"eigenvalue within {eps:g} of zero: {lam[np.argmin(np.abs(lam))]:.3e}")
    return int(np.sum(lam < 0))


@dataclass(frozen=True)
class SymplecticPath:
    """Sampled path t -> M(t) in Sp(2n) on [0, 1].

    ``evaluator`` (optional) returns M(t) exactly for any t; without it the
    samples are interpolated by cubic splines.
    """

    times: np.ndarray
    mats: np.ndarray
    evaluator: Optional[Callable[[float], np.ndarray]] = None
    generator: Optional[str] = None
    _spline: Optional[CubicSpline] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        mats = np.asarray(self.mats, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or mats.shape[1] % 2:
            raise InvalidMatrix(f"bad sample array shape {mats.shape}")
        if times.shape != (mats.shape[0],) or len(times) < 2:
            raise DimensionMismatch("times and matrices disagree in length")
        if abs(times[0]) > 1e-14 or abs(times[-1] - 1.0) > 1e-14 or np.any(np.diff(times) <= 0):
            raise InvalidMatrix("times must increase from 0 to 1")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "mats", mats)

    @property
    def n(self) -> int:
        return self.mats.shape[1] // 2

    @property
    def max_step(self) -> float:
        return float(np.max(np.diff(self.times)))

    def __call__(self, t: float) -> np.ndarray:
        if self.evaluator is not None:
            return np.asarray(self.evaluator(float(t)), dtype=float)
        if self._spline is None:
            d = self.mats.shape[1]
            spline = CubicSpline(self.times, self.mats.reshape(len(self.times), d * d), axis=0)
            object.__setattr__(self, "_spline", spline)
        d = self.mats.shape[1]
        return self._spline(float(t)).reshape(d, d)

    def derivative(self, t: float, h: float) -> np.ndarray:
        """Centered finite difference (one-sided at the ends)."""
        if t - h < 0.0:
            return (-3 * self(t) + 4 * self(t + h) - self(t + 2 * h)) / (2 * h)
        if t + h > 1.0:
            return (3 * self(t) - 4 * self(t - h) + self(t - 2 * h)) / (2 * h)
        return (self(t + h) - self(t - h)) / (2 * h)

    def endpoint(self) -> np.ndarray:
        return self.mats[-1]

    def is_closed(self, tol: float = DEFAULT.loop_closure_tol) -> bool:
        return bool(np.max(np.abs(self.mats[-1] - self.mats[0])) <= tol)

    def max_symplectic_residual(self) -> float:
        return max(symplectic_residual(M) for M in self.mats)

    def resample(self, samples: int) -> "SymplecticPath":
        t = np.linspace(0.0, 1.0, samples + 1)
        mats = np.array([self(s) for s in t])
        return SymplecticPath(t, mats, self.evaluator, self.generator)

    def inverse(self) -> "SymplecticPath":
        """Pointwise inverse M(t)^{-1} = -J0 M^T J0."""
        J = J0(self.n)
        inv = lambda M: -J @ M.T @ J
        ev = None if self.evaluator is None else (lambda t, e=self.evaluator: inv(e(t)))
        return SymplecticPath(self.times, np.array([inv(M) for M in self.mats]), ev)

    def reversed(self) -> "SymplecticPath":
        """Same samples traversed backwards, t -> M(1 - t)."""
        ev = None if self.evaluator is None else (lambda t, e=self.evaluator: e(1.0 - t))
        return SymplecticPath(1.0 - self.times[::-1], self.mats[::-1].copy(), ev)

    def to_json(self) -> dict:
        return {"n": self.n, "times": self.times.tolist(), "matrices": self.mats.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "SymplecticPath":
        mats = np.asarray(data["matrices"], dtype=float)
        times = data.get("times")
        if times is None:
            times = np.linspace(0.0, 1.0, len(mats))
        return cls(np.asarray(times, dtype=float), mats)


def exp_path(A, samples: int = DEFAULT.path_samples) -> SymplecticPath:
    """The path t -> exp(tA) on [0, 1] with an exact evaluator."""
    A = _finite(A)
    half_dim(A)
    t = np.linspace(0.0, 1.0, samples + 1)
    mats = np.array([scipy.linalg.expm(s * A) for s in t])
    return SymplecticPath(t, mats, evaluator=lambda s: scipy.linalg.expm(s * A), generator="exp(tA)")


def hamiltonian_exp_path(S, samples: int = DEFAULT.path_samples) -> SymplecticPath:
    """The path t -> exp(J0 S t) for symmetric S."""
    S = _finite(S)
    return exp_path(J0(half_dim(S)) @ S, samples)


@dataclass(frozen=True)
class UnitaryLoop:
    """Closed sampled loop in U(n), stored as complex n x n matrices."""

    times: np.ndarray
    mats: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.mats, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise InvalidMatrix(f"bad loop sample shape {mats.shape}")
        object.__setattr__(self, "mats", mats)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        if np.max(np.abs(mats[-1] - mats[0])) > DEFAULT.loop_closure_tol:
            raise NotALoop("first and last samples differ")

    @property
    def n(self) -> int:
        return self.mats.shape[1]

    @classmethod
    def from_function(cls, f: Callable[[float], np.ndarray], samples: int) -> "UnitaryLoop":
        t = np.linspace(0.0, 1.0, samples + 1)
        return cls(t, np.array([np.atleast_2d(f(s)) for s in t]))
