"""Windings of unitary loops, transition loops of TS^2 and index arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .config import DEFAULT, Config
from .errors import EmptyWindow, NotALoop, ResolutionTooCoarse
from .linalg import SymplecticPath, UnitaryLoop, to_complex, unitary_part


def _winding_of_dets(dets: np.ndarray, cfg: Config) -> int:
    if abs(dets[-1] - dets[0]) > cfg.loop_closure_tol * max(1.0, abs(dets[0])):
        raise NotALoop("determinant loop is not closed")
    steps = np.angle(dets[1:] / dets[:-1])
    if np.any(np.abs(steps) >= math.pi / 2):
        raise ResolutionTooCoarse("argument jump of at least pi/2 between samples")
    turns = float(np.sum(steps)) / (2 * math.pi)
    k = round(turns)
    if abs(turns - k) >= cfg.wind_residual:
        raise ResolutionTooCoarse(f"winding {turns:.4f} is not near an integer")
    return int(k)


def wind(loop: UnitaryLoop, cfg: Config = DEFAULT) -> int:
    """Degree of t -> det_C U(t) as a map S^1 -> S^1."""
    return _winding_of_dets(np.linalg.det(loop.mats), cfg)


def wind_sp(loop: SymplecticPath, cfg: Config = DEFAULT) -> int:
    """Winding of a loop in Sp(2n) after retraction onto U(n)."""
    if not loop.is_closed(cfg.loop_closure_tol):
        raise NotALoop("symplectic loop is not closed")
    dets = np.array([np.linalg.det(to_complex(unitary_part(M))) for M in loop.mats])
    return _winding_of_dets(dets, cfg)


def unitary_loop_to_symplectic(loop: UnitaryLoop) -> SymplecticPath:
    from .linalg import to_real

    return SymplecticPath(loop.times, np.array([to_real(U) for U in loop.mats]))


# ---------------------------------------------------------------- TS^2 frames


def _frame_from_chart(jac: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Orthonormal frame (e1, e2 = x cross e1) from chart coordinate vectors."""
    e1 = jac[:, 0] / np.linalg.norm(jac[:, 0])
    e2 = np.cross(point, e1)
    if np.dot(e2, jac[:, 1]) <= 0:
        raise ValueError("chart is orientation reversing")
    return np.column_stack([e1, e2])


def north_chart_frame(x: np.ndarray) -> np.ndarray:
    """Frame of the trivialization over the northern cap.

    Built from stereographic projection from the south pole,
    u = (x, y) / (1 + z), which is orientation preserving for the outward
    normal.
    """
    x = np.asarray(x, dtype=float)
    u = x[:2] / (1.0 + x[2])
    r2 = u @ u
    d = 1.0 + r2
    # derivative of (2u1, 2u2, 1 - r2) / d
    jac = np.empty((3, 2))
    for j in range(2):
        dnum = np.array([2.0 * (j == 0), 2.0 * (j == 1), -2.0 * u[j]])
        num = np.array([2 * u[0], 2 * u[1], 1 - r2])
        jac[:, j] = dnum / d - num * 2 * u[j] / d**2
    return _frame_from_chart(jac, x)


def south_chart_frame(x: np.ndarray) -> np.ndarray:
    """Frame of the trivialization over the southern cap.

    Stereographic projection from the north pole with the second coordinate
    flipped, v = (x, -y) / (1 - z), so the chart is orientation preserving.
    """
    x = np.asarray(x, dtype=float)
    v = np.array([x[0], -x[1]]) / (1.0 - x[2])
    r2 = v @ v
    d = 1.0 + r2
    num = np.array([2 * v[0], -2 * v[1], r2 - 1])
    jac = np.empty((3, 2))
    for j in range(2):
        dnum = np.array([2.0 * (j == 0), -2.0 * (j == 1), 2.0 * v[j]])
        jac[:, j] = dnum / d - num * 2 * v[j] / d**2
    return _frame_from_chart(jac, x)


@dataclass(frozen=True)
class TransitionLoop:
    loop: SymplecticPath
    source: str
    target: str

    def marked(self) -> SymplecticPath:
        """Same loop right-multiplied by its initial value inverse, so it starts at I."""
        M0inv = np.linalg.inv(self.loop.mats[0])
        ev = None
        if self.loop.evaluator is not None:
            ev = lambda t, e=self.loop.evaluator: e(t) @ M0inv
        return SymplecticPath(self.loop.times, self.loop.mats @ M0inv, ev)


def sphere_transition_loop(samples: int, reverse: bool = False) -> TransitionLoop:
    """Transition loop Phi_+ o Phi_-^{-1} of TS^2 along the equator.

    The equator is traversed as the boundary of the northern cap
    (counterclockwise seen from the north pole) unless ``reverse``.
    """
    if samples < 16:
        raise ResolutionTooCoarse(f"need at least 16 samples, got {samples}")
    sign = -1.0 if reverse else 1.0

    def transition(s: float) -> np.ndarray:
        theta = sign * 2 * math.pi * s
        x = np.array([math.cos(theta), math.sin(theta), 0.0])
        return north_chart_frame(x).T @ south_chart_frame(x)

    t = np.linspace(0.0, 1.0, samples + 1)
    mats = np.array([transition(s) for s in t])
    mats[-1] = mats[0]
    return TransitionLoop(SymplecticPath(t, mats, evaluator=transition), source="south-cap", target="north-cap")


# ---------------------------------------------------------- index arithmetic


@dataclass(frozen=True)
class CappingClass:
    """Class of the sphere w # w-bar' as a multiple k of the positive generator."""

    manifold: str
    k: int
    omega_A: float = 0.0
    c1_A: int = 0

    def __post_init__(self):
        if self.manifold in ("r2n", "torus2n") and self.k != 0:
            raise ValueError(f"{self.manifold} has trivial pi_2; k must be 0")

    @classmethod
    def sphere(cls, k: int) -> "CappingClass":
        return cls("sphere", k, 4 * math.pi, 2)

    @property
    def c1(self) -> int:
        return self.k * self.c1_A

    @property
    def omega(self) -> float:
        return self.k * self.omega_A


def recapping_index(mu: int, cap_change: CappingClass) -> int:
    """Index after recapping: mu + 2 c1 of the difference sphere."""
    return int(mu) + 2 * cap_change.c1


def cz_constraint_window(mu_capped: int, n: int) -> range:
    """Integers c with mu_capped - 2c inside the undertwisted window [-n, n]."""
    if n < 0:
        raise EmptyWindow("negative half-dimension")
    lo = math.ceil((mu_capped - n) / 2)
    hi = math.floor((mu_capped + n) / 2)
    if lo > hi:
        raise EmptyWindow(f"no integer c with {mu_capped - n} <= 2c <= {mu_capped + n}")
    return range(lo, hi + 1)


def very_strongly_semipositive_test(classes: Iterable[tuple[float, int]], n: int) -> bool:
    """False iff some spherical class has omega > 0 and -n <= c1 < 0."""
    return not any(om > 0 and -n <= c1 < 0 for om, c1 in classes)
