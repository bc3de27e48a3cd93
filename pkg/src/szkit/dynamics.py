"""Hamiltonian vector fields, flows, linearized flows and periodic orbits.

Conventions: on R^{2n} and T^{2n}, X_H = -J0 grad H = (dH/dp, -dH/dq), so
omega0(X_H, v) = dH(v).  On the sphere, X_H(x) = grad H(x) x x for the
ambient gradient, so omega_x(X_H, v) = x . (X_H x v) = dH(v) for tangent v.
Linearized flows are expressed in the global frame on flat models and, on
the sphere, in the frame transported radially from a center point (the
trivialization of the canonical small disc).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from .config import DEFAULT, Config
from .cz import cz_index
from .errors import (
    DegenerateHessian,
    DiameterExceedsInjectivity,
    IntegrationFailure,
    NoAdmissibleEpsilon,
    NotACriticalPoint,
)
from .geometry import (
    FlatTorus,
    Loop,
    ManifoldModel,
    RoundSphere,
    canonical_disc,
    center_of_mass,
    disc_areas,
)
from .hamiltonian import ConstTerm, Hamiltonian
from .linalg import SymplecticPath, matrix_exponential


def _skew(v: np.ndarray) -> np.ndarray:
    """Batched cross-product matrices, skew(v) w = v x w."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1], out[..., 0, 2] = -v[..., 2], v[..., 1]
    out[..., 1, 0], out[..., 1, 2] = v[..., 2], -v[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -v[..., 1], v[..., 0]
    return out


def vector_field(H, t: float, x) -> np.ndarray:
    """Hamiltonian vector field X_H(t, x), vectorized over leading axes of x."""
    x = np.asarray(x, dtype=float)
    g = H.gradient(t, x)
    if isinstance(H.manifold, RoundSphere):
        return np.cross(g, x)
    n = H.manifold.n
    return np.concatenate([g[..., n:], -g[..., :n]], axis=-1)


def vector_field_jacobian(H, t: float, x) -> np.ndarray:
    """Derivative of the (ambient) vector field at x."""
    x = np.asarray(x, dtype=float)
    Hs = H.hessian(t, x)
    if isinstance(H.manifold, RoundSphere):
        g = H.gradient(t, x)
        return -_skew(x) @ Hs + _skew(g)
    n = H.manifold.n
    return np.concatenate([Hs[..., n:, :], -Hs[..., :n, :]], axis=-2)


# ------------------------------------------------------------------ flows


def _steps(t0: float, t1: float, step: float, multiple: int = 1) -> tuple[int, float]:
    if not 0 < step <= 1e-2:
        raise ValueError(f"ODE step must lie in (0, 1e-2], got {step}")
    span = t1 - t0
    N = max(1, math.ceil(abs(span) / step - 1e-9))
    N = multiple * math.ceil(N / multiple)
    return N, span / N


def _check_state(M: ManifoldModel, x: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise IntegrationFailure("non-finite state during integration")
    if isinstance(M, RoundSphere):
        nrm = np.linalg.norm(x, axis=-1, keepdims=True)
        if np.any(np.abs(nrm - 1.0) > 1e-6):
            raise IntegrationFailure("trajectory left the sphere")
        x = x / nrm
    return x


def _rk4(H, x, t0, t1, step, M=None, record_every: int = 0, multiple: int = 1):
    """Classical RK4 for x' = X_H and optionally M' = DX_H M, batched over x."""
    N, h = _steps(t0, t1, step, multiple)
    x = np.array(x, dtype=float)
    rec_x, rec_M, rec_t = [], [], []
    if record_every:
        rec_x.append(x.copy())
        rec_t.append(t0)
        if M is not None:
            rec_M.append(M.copy())

    def f(t, y):
        return vector_field(H, t, y)

    def fm(t, y, m):
        return vector_field_jacobian(H, t, y) @ m

    t = t0
    for k in range(N):
        if M is None:
            k1 = f(t, x)
            k2 = f(t + h / 2, x + h / 2 * k1)
            k3 = f(t + h / 2, x + h / 2 * k2)
            k4 = f(t + h, x + h * k3)
        else:
            k1, m1 = f(t, x), fm(t, x, M)
            y2 = x + h / 2 * k1
            k2, m2 = f(t + h / 2, y2), fm(t + h / 2, y2, M + h / 2 * m1)
            y3 = x + h / 2 * k2
            k3, m3 = f(t + h / 2, y3), fm(t + h / 2, y3, M + h / 2 * m2)
            y4 = x + h * k3
            k4, m4 = f(t + h, y4), fm(t + h, y4, M + h * m3)
            M = M + h / 6 * (m1 + 2 * m2 + 2 * m3 + m4)
        x = _check_state(H.manifold, x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
        t = t0 + (k + 1) * h
        if record_every and (k + 1) % record_every == 0:
            rec_x.append(x.copy())
            rec_t.append(t)
            if M is not None:
                rec_M.append(M.copy())
    if M is not None and not np.all(np.isfinite(M)):
        raise IntegrationFailure("non-finite linearized flow")
    return x, M, np.array(rec_t), rec_x, rec_M


@dataclass(frozen=True)
class FlowResult:
    point: np.ndarray
    times: np.ndarray
    path: np.ndarray


def flow(H, p, t0: float, t1: float, step: float = DEFAULT.ode_step) -> FlowResult:
    """phi_H from time t0 to t1 applied to p (batched over leading axes)."""
    p = H.manifold.check_point(p)
    x, _, ts, rec, _ = _rk4(H, p, t0, t1, step, record_every=1)
    return FlowResult(x, ts, np.array(rec))


def flow_map(H, p, t0: float, t1: float, step: float = DEFAULT.ode_step) -> np.ndarray:
    """Endpoint of the flow only (no trajectory storage)."""
    if t0 == t1:
        return np.array(p, dtype=float)
    x, *_ = _rk4(H, np.asarray(p, dtype=float), t0, t1, step)
    return x


def flow_with_derivative(H, p, t0: float, t1: float, step: float = DEFAULT.ode_step):
    """(phi(p), D phi(p)) in ambient coordinates, batched over leading axes of p."""
    p = np.asarray(p, dtype=float)
    d = p.shape[-1]
    M0 = np.broadcast_to(np.eye(d), p.shape[:-1] + (d, d)).copy()
    if t0 == t1:
        return p.copy(), M0
    x, M, *_ = _rk4(H, p, t0, t1, step, M=M0)
    return x, M


def _frames(model: ManifoldModel, center, pts) -> np.ndarray:
    """Symplectic frames (ambient x 2n) at each point."""
    if isinstance(model, RoundSphere):
        return np.array([model.transported_frame(center, y) for y in np.atleast_2d(pts)])
    d = model.dim
    return np.broadcast_to(np.eye(d), (len(np.atleast_2d(pts)), d, d))


def linearized_flow(
    H,
    p,
    T: float = 1.0,
    step: float = DEFAULT.ode_step,
    center=None,
    cfg: Config = DEFAULT,
) -> SymplecticPath:
    """The path s -> d phi_H^{sT}(p), s in [0, 1], in the disc frame.

    ``center`` fixes the sphere trivialization (frames transported radially
    from it); it defaults to p, which is the natural choice for a constant
    orbit.
    """
    M = H.manifold
    p = M.check_point(np.asarray(p, dtype=float))
    d = M.dim
    x, D, ts, xs, Ds = _rk4(H, p, 0.0, T, step, M=np.eye(d), record_every=1)
    xs = np.array(xs)
    Ds = np.array(Ds)
    c = p if center is None else np.asarray(center, dtype=float)
    E = _frames(M, c, xs)
    mats = np.einsum("kai,kab,bj->kij", E, Ds, E[0])
    path = SymplecticPath(ts / T, mats, generator="linearized flow")
    res = path.max_symplectic_residual()
    if res > max(1e-8, 100 * cfg.symplectic_tol):
        raise IntegrationFailure(f"linearized flow symplectic residual {res:.2e}")
    return path


# ------------------------------------------------------- periodic orbits


@dataclass(frozen=True)
class PeriodicOrbit:
    period: float
    point: np.ndarray
    samples: np.ndarray
    monodromy: np.ndarray
    residual: float
    diameter: float
    winding: Optional[tuple] = None
    _fine: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def is_constant(self) -> bool:
        return self.diameter < 1e-7

    def loop(self, model: ManifoldModel) -> Loop:
        return Loop(model, self.samples)

    def to_json(self) -> dict:
        return {
            "period": self.period,
            "point": self.point.tolist(),
            "residual": self.residual,
            "diameter": self.diameter,
            "winding": None if self.winding is None else list(self.winding),
            "monodromy": self.monodromy.tolist(),
        }


class OrbitList(list):
    """List of periodic orbits that also records how many seeds were dropped."""

    def __init__(self, orbits=(), dropped: int = 0, seeds: int = 0):
        super().__init__(orbits)
        self.dropped = dropped
        self.seeds = seeds


def seed_grid(model: ManifoldModel, grid: int, box: float = 1.0) -> np.ndarray:
    """Deterministic seed points: a cube grid (flat models) or a Fibonacci lattice (sphere)."""
    if isinstance(model, RoundSphere):
        N = 2 * grid * grid
        i = np.arange(N) + 0.5
        z = 1 - 2 * i / N
        phi = math.pi * (1 + math.sqrt(5)) * i
        s = np.sqrt(1 - z * z)
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    if isinstance(model, FlatTorus):
        g = np.arange(grid) / grid
    else:
        g = np.linspace(-box, box, grid)
    mesh = np.meshgrid(*([g] * model.dim), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, model.dim)


def _newton_step(model, P, X, D, lam: float, max_step: float) -> np.ndarray:
    F = X - P
    d = model.dim
    if isinstance(model, RoundSphere):
        E = np.array([model.reference_frame(p) for p in P])
        Jm = (D - np.eye(3)) @ E
    else:
        E = None
        Jm = D - np.eye(d)
    JT = np.swapaxes(Jm, -1, -2)
    A = JT @ Jm + lam * np.eye(Jm.shape[-1])
    delta = -np.linalg.solve(A, (JT @ F[..., None]))[..., 0]
    nrm = np.linalg.norm(delta, axis=-1, keepdims=True)
    delta = np.where(nrm > max_step, delta * max_step / np.maximum(nrm, 1e-300), delta)
    if E is not None:
        Pn = P + np.einsum("kij,kj->ki", E, delta)
        return Pn / np.linalg.norm(Pn, axis=-1, keepdims=True)
    return P + delta


def _dedup_radius(fine: np.ndarray) -> float:
    steps = np.linalg.norm(np.diff(fine, axis=0), axis=-1)
    sag = np.linalg.norm(fine[2:] - 2 * fine[1:-1] + fine[:-2], axis=-1) if len(fine) > 2 else np.zeros(1)
    return 0.5 * float(np.max(steps, initial=0.0)) + float(np.max(sag, initial=0.0)) / 4


def _unit_cube(pts):
    return FlatTorus().wrap(pts)


def _tree(model, pts):
    if isinstance(model, FlatTorus):
        return cKDTree(_unit_cube(pts), boxsize=1.0)
    return cKDTree(pts)


def find_periodic_orbits(
    H,
    T_range: tuple[float, float],
    grid: int = 16,
    T_samples: int = 3,
    step: Optional[float] = None,
    box: float = 1.0,
    samples: int = 64,
    cfg: Config = DEFAULT,
) -> OrbitList:
    """Periodic orbits x = phi_H^T(x) with T in T_range, by damped Newton from seeds.

    For each of ``T_samples`` equally spaced periods, every grid seed is
    refined by Newton steps on F(p) = phi^T(p) - p with the Tikhonov
    regularized Jacobian d phi^T - I.  On the torus only contractible orbits
    are sought (zero lift displacement).  Orbits are deduplicated by the
    Hausdorff distance of their sampled images, with the threshold widened
    by the sampling resolution of the images.
    """
    model = H.manifold
    step = cfg.ode_step if step is None else step
    lo, hi = map(float, T_range)
    if not 0 < lo <= hi:
        raise ValueError("period window must satisfy 0 < T_min <= T_max")
    periods = np.linspace(lo, hi, T_samples) if T_samples > 1 and hi > lo else np.array([lo])
    seeds = seed_grid(model, grid, box)
    max_step = 0.1 if math.isinf(model.inj) else model.inj / 4

    found: list[PeriodicOrbit] = []
    trees: list = []
    radii: list[float] = []
    dropped = 0
    for T in periods:
        P = seeds.copy()
        done = np.zeros(len(P), dtype=bool)
        for _ in range(cfg.newton_max_iter + 1):
            act = ~done
            if not act.any():
                break
            try:
                X, D = flow_with_derivative(H, P[act], 0.0, T, step)
            except IntegrationFailure:
                break
            res = np.linalg.norm(X - P[act], axis=-1)
            idx = np.flatnonzero(act)
            done[idx[res < cfg.orbit_residual]] = True
            keep = res >= cfg.orbit_residual
            if not keep.any():
                break
            P[idx[keep]] = _newton_step(model, P[idx[keep]], X[keep], D[keep], cfg.tikhonov, max_step)
        good = np.flatnonzero(done)
        dropped += len(P) - len(good)
        if len(good) == 0:
            continue
        P = P[good]
        N, _ = _steps(0.0, T, step, samples)
        xT, DT, _, rec, _ = _rk4(H, P, 0.0, T, step, M=np.broadcast_to(np.eye(model.dim), (len(P), model.dim, model.dim)).copy(), record_every=1, multiple=samples)
        fine = np.stack(rec, axis=1)  # (B, N+1, d)
        for b in range(len(P)):
            res = float(np.linalg.norm(xT[b] - P[b]))
            if res >= cfg.orbit_residual or not np.all(np.isfinite(fine[b])):
                dropped += 1
                continue
            curve = fine[b, :-1]
            r_b = cfg.dedup_tol + _dedup_radius(fine[b])
            duplicate = False
            for j, orb in enumerate(found):
                tol = max(r_b, radii[j])
                d1, _ = trees[j].query(_unit_cube(curve) if isinstance(model, FlatTorus) else curve, distance_upper_bound=tol)
                if np.all(np.isfinite(d1)):
                    d2, _ = _tree(model, curve).query(_unit_cube(orb._fine) if isinstance(model, FlatTorus) else orb._fine)
                    if np.max(d2) <= tol:
                        duplicate = True
                        break
            if duplicate:
                continue
            found.append(_make_orbit(model, T, P[b], curve, DT[b], res, samples))
            trees.append(_tree(model, curve))
            radii.append(r_b)
    found.sort(key=lambda o: tuple(np.round(model.wrap(o.point), 12)))
    return OrbitList(found, dropped, len(seeds) * len(periods))


def _make_orbit(model, T, p, curve, D, res, samples) -> PeriodicOrbit:
    stride = len(curve) // samples
    pts = curve[::stride][:samples]
    diam = Loop(model, pts).diameter() if samples > 1 else 0.0
    winding = None
    if isinstance(model, FlatTorus):
        winding = tuple(int(v) for v in np.zeros(model.dim))
    if isinstance(model, RoundSphere):
        E = model.reference_frame(p)
        mono = E.T @ D @ E
    else:
        mono = D
    return PeriodicOrbit(float(T), model.wrap(p) if isinstance(model, FlatTorus) else p.copy(), pts, mono, res, diam, winding, curve)


# ---------------------------------------------------------------- twist


class Twist(str, Enum):
    UNDER = "UnderTwisted"
    GENERIC_UNDER = "GenericallyUnderTwisted"
    OVER = "OverTwisted"


@dataclass(frozen=True)
class TwistReport:
    classification: Twist
    witnesses: list
    det_times: np.ndarray
    det_values: np.ndarray

    @property
    def under_twisted(self) -> bool:
        return self.classification is not Twist.OVER

    @property
    def generic(self) -> bool:
        return self.classification is Twist.GENERIC_UNDER

    def to_json(self) -> dict:
        return {
            "classification": self.classification.value,
            "witnesses": [{"t": t, "period": per} for t, per in self.witnesses],
            "det_min_abs": float(np.min(np.abs(self.det_values))) if len(self.det_values) else None,
        }


def _frame_at(model, p) -> np.ndarray:
    if isinstance(model, RoundSphere):
        return model.reference_frame(p)
    return np.eye(model.dim)


def linearization(H, t: float, p) -> np.ndarray:
    """Matrix of D X_H(t, p) at a fixed point, in the symplectic frame at p."""
    E = _frame_at(H.manifold, p)
    return E.T @ vector_field_jacobian(H, t, np.asarray(p, dtype=float)) @ E


def classify_twist(
    H,
    p,
    T: float = 1.0,
    track_samples: int = 400,
    step: float = DEFAULT.ode_step,
    cfg: Config = DEFAULT,
) -> TwistReport:
    """Under/over-twistedness of a fixed critical point for time horizon T.

    Over-twisted iff the linearized flow has a nonconstant trajectory
    returning to its start at some time t in (0, T], i.e. a kernel vector of
    d phi^t - I that is not fixed by the whole flow.  Vectors fixed for all
    t are fixed points of the linearized flow; they keep p under-twisted but
    not generically so.  For autonomous H this is the eigenvalue test: a
    purely imaginary pair +-i theta with 2 pi / |theta| <= T.
    """
    p = H.manifold.check_point(np.asarray(p, dtype=float))
    ts = np.linspace(0.0, T, 33)
    for t in ts:
        if np.linalg.norm(vector_field(H, t, p)) > 1e-9:
            raise NotACriticalPoint(f"X_H(t, p) != 0 at t = {t:.4f}")
    d2 = 2 * H.manifold.n
    eye = np.eye(d2)
    witnesses = []
    det_t = np.linspace(0.0, T, track_samples + 1)[1:]
    if H.is_autonomous:
        A = linearization(H, 0.0, p)
        scale = max(1.0, float(np.max(np.abs(A))))
        lam = np.linalg.eigvals(A)
        for mu in lam:
            if abs(mu.real) <= 1e-9 * scale and mu.imag > 1e-10 * scale:
                per = 2 * math.pi / mu.imag
                witnesses.append((per, per))
        det_v = np.array([np.linalg.det(matrix_exponential(A, t) - eye) for t in det_t])
        over = any(per <= T * (1 + 1e-12) for _, per in witnesses)
        fixed = bool(np.any(np.abs(lam) <= 1e-10 * scale))
        det_zero = over or fixed or np.min(np.abs(det_v)) <= cfg.nondegeneracy_tol
    else:
        path = linearized_flow(H, p, T, step)
        sig = np.array([np.linalg.svd(M - eye, compute_uv=False)[-1] for M in path.mats[1:]])
        det_v = np.array([np.linalg.det(M - eye) for M in path.mats[1:]])
        det_t = path.times[1:] * T
        # refine every local minimum of sigma_min between samples on the interpolated path
        smin = lambda s: float(np.linalg.svd(path(s) - eye, compute_uv=False)[-1])
        zeros = []
        for k in range(len(sig)):
            if (k == 0 or sig[k] <= sig[k - 1]) and (k == len(sig) - 1 or sig[k] <= sig[k + 1]):
                a, b = path.times[k] if k else 0.5 * path.times[1], path.times[min(k + 2, len(path.times) - 1)]
                opt = minimize_scalar(smin, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
                if opt.fun < 1e-6:
                    zeros.append(float(opt.x))
        over = False
        for s0 in zeros:
            _, _, Vt = np.linalg.svd(path(s0) - eye)
            v = Vt[-1]
            # a kernel vector fixed for every t is a fixed point, not a closed trajectory
            moving = any(np.linalg.norm(path(s) @ v - v) > 1e-6 for s in np.linspace(0.0, 1.0, 65))
            witnesses.append((s0 * T, s0 * T if moving else 0.0))
            over = over or moving
        det_zero = bool(zeros)
    if over:
        cls = Twist.OVER
    elif det_zero:
        cls = Twist.UNDER
    else:
        cls = Twist.GENERIC_UNDER
    return TwistReport(cls, witnesses, det_t, det_v)


# ------------------------------------------------ critical points & grids


@dataclass(frozen=True)
class CriticalPoint:
    point: np.ndarray
    value: float
    hessian: np.ndarray  # in the symplectic frame at the point
    morse_index: int


def riemannian_hessian(H, t: float, x) -> np.ndarray:
    """Hessian of H_t at x in the frame at x (intrinsic on the sphere)."""
    x = np.asarray(x, dtype=float)
    Hs = H.hessian(t, x)
    if isinstance(H.manifold, RoundSphere):
        E = H.manifold.reference_frame(x)
        g = H.gradient(t, x)
        return E.T @ (Hs - np.dot(x, g) * np.eye(3)) @ E
    return Hs


def critical_points(
    H,
    t: float = 0.0,
    grid: int = 24,
    box: float = 1.0,
    cfg: Config = DEFAULT,
    allow_degenerate: bool = False,
) -> list[CriticalPoint]:
    """Nondegenerate critical points of H_t by Newton iteration from grid seeds."""
    model = H.manifold
    seeds = seed_grid(model, grid, box)
    out: list[CriticalPoint] = []
    for x in seeds:
        for _ in range(60):
            g = H.gradient(t, x)
            if isinstance(model, RoundSphere):
                E = model.reference_frame(x)
                gr = E.T @ g
                Hr = riemannian_hessian(H, t, x)
                try:
                    dx = E @ np.linalg.solve(Hr, -gr)
                except np.linalg.LinAlgError:
                    break
                nrm = np.linalg.norm(dx)
                if nrm > 0.3:
                    dx *= 0.3 / nrm
                x = model.exp(x, dx)
                x = x / np.linalg.norm(x)
                if nrm < 1e-14:
                    break
            else:
                try:
                    dx = np.linalg.solve(H.hessian(t, x), -g)
                except np.linalg.LinAlgError:
                    break
                nrm = np.linalg.norm(dx)
                lim = 0.1 if isinstance(model, FlatTorus) else max(0.5, box)
                if nrm > lim:
                    dx *= lim / nrm
                x = x + dx
                if nrm < 1e-14:
                    break
        grad = H.gradient(t, x)
        if isinstance(model, RoundSphere):
            grad = model.tangent_projection(x, grad)
        if not np.all(np.isfinite(x)) or np.linalg.norm(grad) > cfg.critical_tol:
            continue
        if isinstance(model, FlatTorus):
            x = model.wrap(x)
            x = np.where(np.abs(x - 1.0) < 1e-12, 0.0, x)
            x = np.where(np.abs(x) < 1e-15, 0.0, x)
        if any(model.distance(c.point, x) < 1e-7 for c in out):
            continue
        Hr = riemannian_hessian(H, t, x)
        lam = np.linalg.eigvalsh(0.5 * (Hr + Hr.T))
        scale = max(1.0, float(np.max(np.abs(lam))))
        if np.any(np.abs(lam) <= cfg.eig_eps * scale):
            if not allow_degenerate:
                raise DegenerateHessian(f"degenerate critical point at {x}")
        out.append(CriticalPoint(x, float(H.value(t, x)), Hr, int(np.sum(lam < 0))))
    out.sort(key=lambda c: (c.value, tuple(np.round(c.point, 10))))
    return out


def sample_grid(model: ManifoldModel, grid: int, box: float = 2.0) -> np.ndarray:
    """Dense evaluation grid used for extrema and inequality checks."""
    if isinstance(model, RoundSphere):
        return seed_grid(model, grid)
    if isinstance(model, FlatTorus):
        g = np.arange(grid) / grid
    else:
        g = np.linspace(-box, box, grid)
    return np.stack(np.meshgrid(*([g] * model.dim), indexing="ij"), axis=-1).reshape(-1, model.dim)


def _polish_extremum(H, t: float, x, sign: float, iters: int = 30) -> np.ndarray:
    """Newton polish of a local max (sign=+1) or min (sign=-1) of H_t near x."""
    model = H.manifold
    x = np.array(x, dtype=float)
    v0 = float(H.value(t, x))
    for _ in range(iters):
        g = H.gradient(t, x)
        if isinstance(model, RoundSphere):
            E = model.reference_frame(x)
            Hr = riemannian_hessian(H, t, x)
            gr = E.T @ g
        else:
            E = None
            Hr = H.hessian(t, x)
            gr = g
        lam = np.linalg.eigvalsh(0.5 * (Hr + Hr.T))
        # only a definite Hessian of the right sign gives a reliable Newton step
        if (sign > 0 and lam[-1] >= 0) or (sign < 0 and lam[0] <= 0):
            break
        try:
            dx = np.linalg.solve(Hr, -gr)
        except np.linalg.LinAlgError:
            break
        if np.linalg.norm(dx) > 0.05:
            break
        if E is not None:
            xn = model.exp(x, E @ dx)
            xn = xn / np.linalg.norm(xn)
        else:
            xn = x + dx
        vn = float(H.value(t, xn))
        if sign * (vn - v0) < -1e-15 * max(1.0, abs(v0)):
            break
        x, v0 = xn, vn
        if np.linalg.norm(dx) < 1e-14:
            break
    return x


def is_quasi_autonomous(H, grid: int = 48, t_samples: int = 33, box: float = 2.0):
    """(quasi-autonomous?, x_minus, x_plus) from grid argmin/argmax stability over time."""
    model = H.manifold
    X = sample_grid(model, grid, box)
    spacing = 2.0 / grid if isinstance(model, FlatTorus) else (2 * box / (grid - 1) if not isinstance(model, RoundSphere) else 4.0 / grid)
    tol = 1.5 * spacing
    mins, maxs = [], []
    for t in np.linspace(0.0, 1.0, t_samples):
        v = H.value(t, X)
        if np.ptp(v) <= 1e-12:
            continue
        mins.append(_polish_extremum(H, t, X[np.argmin(v)], -1.0))
        maxs.append(_polish_extremum(H, t, X[np.argmax(v)], +1.0))
    if not mins:
        x0 = X[0]
        return True, x0, x0
    ok = all(model.distance(m, mins[0]) <= tol for m in mins) and all(
        model.distance(m, maxs[0]) <= tol for m in maxs
    )
    xm, xp = mins[0], maxs[0]
    if isinstance(model, FlatTorus):
        xm, xp = model.wrap(xm), model.wrap(xp)
    return bool(ok), xm, xp


def comparison_hamiltonian(
    H: Hamiltonian,
    f: Hamiltonian,
    eps_grid: Sequence[float],
    grid: int = 64,
    t_samples: int = 17,
    tol: float = 1e-12,
):
    """Largest eps in eps_grid with G^H = H(t, x_minus) + eps f <= H, equality only at x_minus.

    Returns (eps, G^H).  Checked on a dense spatial grid and time samples;
    "only at x_minus" means H - G^H > tol at grid points more than two grid
    spacings from x_minus.
    """
    model = H.manifold
    X = sample_grid(model, grid)
    fv = f.value(0.0, X)
    xm_f = _polish_extremum(f, 0.0, X[np.argmin(fv)], -1.0)
    if abs(float(f.value(0.0, xm_f))) > 1e-9 or np.min(fv) < -1e-9:
        raise NoAdmissibleEpsilon("f must have minimum value 0")
    spacing = 1.0 / grid if isinstance(model, FlatTorus) else 4.0 / grid
    ok, xm, _ = is_quasi_autonomous(H, grid=min(grid, 48))
    if not ok or model.distance(xm, xm_f) > 2 * spacing:
        raise NoAdmissibleEpsilon("H is not quasi-autonomous with minimum at the minimum of f")
    xm = xm_f
    far = model.distance(X, xm) > 2 * spacing
    best = None
    for eps in sorted(eps_grid):
        good = True
        for t in np.linspace(0.0, 1.0, t_samples):
            gap = H.value(t, X) - float(H.value(t, xm)) - eps * fv
            if np.min(gap) < -tol or (np.any(far) and np.min(gap[far]) <= tol):
                good = False
                break
        if good:
            best = eps
    if best is None:
        raise NoAdmissibleEpsilon("no eps on the grid satisfies G^H <= H with equality only at x_minus")
    base = tuple(ConstTerm(float(term.f(xm)), profile=term.profile) for term in H.terms)
    G = Hamiltonian(model, base + f.scaled(best).terms)
    return best, G


# ------------------------------------------------- undertwisted certificate


@dataclass(frozen=True)
class UndertwistCertificate:
    index: int
    area: float
    eps: float
    n: int
    certified: bool
    capping: str = "canonical-disc"

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "area": self.area,
            "eps": self.eps,
            "window": [-self.n, self.n],
            "certified": self.certified,
            "capping": self.capping,
        }


def orbit_index(H, orbit: PeriodicOrbit, step: float = DEFAULT.ode_step, cfg: Config = DEFAULT) -> int:
    """Conley-Zehnder index of the orbit in the trivialization of its canonical disc."""
    model = H.manifold
    center = None
    if isinstance(model, RoundSphere):
        center = center_of_mass(orbit.loop(model), cfg).point
    path = linearized_flow(H, orbit.point, orbit.period, step, center=center, cfg=cfg)
    return cz_index(path, cfg).index


def undertwist_certificate(
    H,
    orbit: PeriodicOrbit,
    eps: float,
    radial_samples: int = 64,
    step: float = DEFAULT.ode_step,
    cfg: Config = DEFAULT,
) -> UndertwistCertificate:
    """Check -n <= mu([z, w_z]) <= n and int w_z^* omega >= -eps for the canonical disc w_z."""
    model = H.manifold
    if orbit.diameter >= model.inj / 2:
        raise DiameterExceedsInjectivity(f"orbit diameter {orbit.diameter:.4g} >= inj/2")
    if orbit.is_constant:
        area = 0.0
    else:
        area = disc_areas(canonical_disc(orbit.loop(model), radial_samples, cfg)).symplectic
    mu = orbit_index(H, orbit, step, cfg)
    n = model.n
    return UndertwistCertificate(mu, float(area), float(eps), n, bool(-n <= mu <= n and area >= -eps))


def constant_orbit(H, p, T: float = 1.0, step: float = DEFAULT.ode_step) -> PeriodicOrbit:
    """The constant periodic orbit at a fixed point p."""
    model = H.manifold
    p = model.check_point(np.asarray(p, dtype=float))
    x, D = flow_with_derivative(H, p, 0.0, T, step)
    E = _frame_at(model, p)
    pts = np.broadcast_to(p, (64, model.dim)).copy()
    winding = tuple([0] * model.dim) if isinstance(model, FlatTorus) else None
    return PeriodicOrbit(T, p, pts, E.T @ D @ E, float(np.linalg.norm(x - p)), 0.0, winding, pts)
