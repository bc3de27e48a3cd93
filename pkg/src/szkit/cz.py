"""Conley-Zehnder index of nondegenerate symplectic paths.

Two routes are provided: a closed formula for paths exp(J0 S t) with small
symmetric S, and a general crossing-form computation.  The crossing form at a
time t with Psi(t) v = v is Q(v) = omega0(v, Psi'(t) v); the index is half the
signature at t = 0 plus the signatures at interior crossings.  With this
normalization exp(J0 S t) has index sign(S)/2, and multiplying a path by a loop
of winding k shifts the index by 2k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import DEFAULT, Config
from .errors import (
    DegeneratePath,
    DimensionMismatch,
    FormulaInapplicable,
    InvalidMatrix,
    NotALoop,
    ResolutionTooCoarse,
)
from .linalg import SymplecticPath, half_dim, is_symmetric, negative_index, omega_matrix


class Method(str, Enum):
    EXP_FORMULA = "ExpFormula"
    CROSSING_FORM = "CrossingForm"


@dataclass(frozen=True)
class CZResult:
    index: int
    method: Method
    crossings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "method": self.method.value,
            "crossings": [{"t": t, "signature": s} for t, s in self.crossings],
        }


def nondegeneracy_check(path: SymplecticPath, tol: float = DEFAULT.nondegeneracy_tol) -> bool:
    """True iff |det(Psi(1) - I)| > tol."""
    M = path.endpoint()
    return bool(abs(np.linalg.det(M - np.eye(M.shape[0]))) > tol)


def cz_exp_formula(S, cfg: Config = DEFAULT) -> CZResult:
    """Closed formula mu^-(S) - n for exp(J0 S t), valid when every |lambda(S)| < 2 pi."""
    S = np.asarray(S, dtype=float)
    n = half_dim(S)
    if not is_symmetric(S, tol=1e-12 * max(1.0, float(np.max(np.abs(S))))):
        raise InvalidMatrix("S must be symmetric")
    lam = np.linalg.eigvalsh(S)
    if np.any(np.abs(lam) >= 2 * math.pi):
        raise FormulaInapplicable(f"eigenvalue {lam[np.argmax(np.abs(lam))]:.6g} has modulus >= 2 pi")
    return CZResult(negative_index(S, cfg.eig_eps) - n, Method.EXP_FORMULA)


def _signature(Q: np.ndarray, what: str) -> int:
    Q = 0.5 * (Q + Q.T)
    lam = np.linalg.eigvalsh(Q)
    scale = max(1.0, float(np.max(np.abs(lam))))
    if np.any(np.abs(lam) <= 1e-7 * scale):
        raise ResolutionTooCoarse(f"degenerate crossing form {what}: eigenvalues {lam}")
    return int(np.sum(lam > 0) - np.sum(lam < 0))


def _sigma_min(path: SymplecticPath, t: float) -> float:
    M = path(t)
    return float(np.linalg.svd(M - np.eye(M.shape[0]), compute_uv=False)[-1])


def _golden_min(f, a: float, b: float, tol: float) -> float:
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _bracket_minima(f, a: float, b: float, tol: float, depth: int = 2, probes: int = 17) -> list[float]:
    """All local minima of f in [a, b], resolving minima closer than the grid step."""
    if depth == 0:
        return [_golden_min(f, a, b, tol)]
    s = np.linspace(a, b, probes)
    v = np.array([f(x) for x in s])
    out = []
    for i in range(probes):
        if (i == 0 or v[i] <= v[i - 1]) and (i == probes - 1 or v[i] <= v[i + 1]):
            out.extend(_bracket_minima(f, s[max(i - 1, 0)], s[min(i + 1, probes - 1)], tol, depth - 1, probes))
    return out


def find_crossings(path: SymplecticPath, cfg: Config = DEFAULT) -> list[tuple[float, int]]:
    """Interior crossings (t, signature of the crossing form) on (0, 1]."""
    W = omega_matrix(path.n)
    if path.evaluator is not None and len(path.times) - 1 < cfg.path_samples:
        path = path.resample(cfg.path_samples)
    t = path.times
    h = float(np.min(np.diff(t)))
    eye = np.eye(2 * path.n)
    sig = np.array([np.linalg.svd(M - eye, compute_uv=False)[-1] for M in path.mats])

    candidates = []
    K = len(t) - 1
    for k in range(1, K + 1):
        left = sig[k] <= sig[k - 1]
        right = k == K or sig[k] <= sig[k + 1]
        if left and right:
            candidates.append(k)

    f = lambda s: _sigma_min(path, s)
    minima: list[float] = []
    for k in candidates:
        minima.extend(_bracket_minima(f, t[k - 1], t[min(k + 1, K)], cfg.crossing_bisect_tol))
    minima = sorted(set(minima))

    found: list[tuple[float, int]] = []
    for ts in minima:
        M = path(ts)
        dM = path.derivative(ts, h)
        s_all = np.linalg.svd(M - eye, compute_uv=True)
        _, s, Vt = s_all
        scale = max(1.0, float(np.linalg.norm(dM, 2)))
        if s[-1] > 1e-6 * scale * max(h, 1e-3):
            continue
        if ts >= 1.0 - cfg.crossing_bisect_tol:
            raise DegeneratePath("crossing at the endpoint t = 1")
        thresh = max(cfg.kernel_rel_tol * max(np.linalg.norm(M - eye, 2), 1.0), 1e3 * s[-1])
        V = Vt[s <= thresh].T
        if any(abs(ts - t0) < cfg.crossing_separation for t0, _ in found):
            if any(abs(ts - t0) < 1e-9 for t0, _ in found):
                continue
            raise ResolutionTooCoarse(f"two crossings within {cfg.crossing_separation:g} near t={ts:.9f}")
        Q = V.T @ W @ dM @ V
        found.append((float(ts), _signature(Q, f"at t={ts:.6f}")))
    found.sort()
    for (t1, _), (t2, _) in zip(found, found[1:]):
        if t2 - t1 < cfg.crossing_separation:
            raise ResolutionTooCoarse(f"two crossings within {cfg.crossing_separation:g}")
    return found


def cz_index(path: SymplecticPath, cfg: Config = DEFAULT) -> CZResult:
    """Conley-Zehnder index by crossing-form summation."""
    if np.max(np.abs(path.mats[0] - np.eye(2 * path.n))) > 1e-9:
        raise DegeneratePath("path does not start at the identity")
    if not nondegeneracy_check(path, cfg.nondegeneracy_tol):
        raise DegeneratePath("det(Psi(1) - I) vanishes")
    W = omega_matrix(path.n)
    h0 = min(float(path.times[1]), 1e-4) if path.evaluator is not None else float(path.times[1])
    Q0 = W @ path.derivative(0.0, h0)
    try:
        start = _signature(Q0, "at t=0")
    except ResolutionTooCoarse as exc:
        raise DegeneratePath(f"crossing form at t=0 is degenerate ({exc})") from None
    if start % 2:
        raise DegeneratePath("odd signature at t=0")
    eye = np.eye(2 * path.n)
    parity = 1 if np.linalg.det(path.endpoint() - eye) > 0 else -1
    for refine in (1, 4, 16):
        crossings = find_crossings(path, cfg.replace(path_samples=refine * cfg.path_samples))
        index = start // 2 + sum(s for _, s in crossings)
        # sign det(Psi(1) - I) = (-1)^(n - index)
        if (-1) ** ((path.n - index) % 2) == parity:
            break
    else:
        raise ResolutionTooCoarse("crossing count disagrees with sign det(Psi(1) - I) after refinement")
    return CZResult(int(index), Method.CROSSING_FORM, [(0.0, start)] + crossings)


def loop_shift(loop: SymplecticPath, path: SymplecticPath) -> SymplecticPath:
    """Pointwise product t -> loop(t) path(t)."""
    if loop.n != path.n:
        raise DimensionMismatch(f"loop has n={loop.n}, path has n={path.n}")
    eye = np.eye(2 * loop.n)
    if np.max(np.abs(loop.mats[0] - eye)) > 1e-9 or not loop.is_closed():
        raise NotALoop("shifting loop must start and end at the identity")
    if len(loop.times) == len(path.times) and np.allclose(loop.times, path.times):
        times = path.times
        mats = loop.mats @ path.mats
    else:
        times = np.union1d(loop.times, path.times)
        mats = np.array([loop(t) @ path(t) for t in times])
    ev = None
    if loop.evaluator is not None or path.evaluator is not None:
        ev = lambda t, a=loop, b=path: a(t) @ b(t)
    return SymplecticPath(times, mats, ev)


def loop_power(loop: SymplecticPath, k: int) -> SymplecticPath:
    """Pointwise k-th power of a loop (negative k uses the pointwise inverse)."""
    base = loop if k >= 0 else loop.inverse()
    d = 2 * loop.n
    power = lambda M: np.linalg.matrix_power(M, abs(k)) if k else np.eye(d)
    ev = None if base.evaluator is None else (lambda t, e=base.evaluator: power(e(t)))
    return SymplecticPath(base.times, np.array([power(M) for M in base.mats]), ev)
