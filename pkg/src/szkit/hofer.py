"""Hofer semi-norms, Hamiltonian path algebra, actions and action spectra.

E^+(H) = int max_x H_t dt, E^-(H) = int -min_x H_t dt and ||H|| = E^- + E^+.
The inverse path is generated by Hbar(t, x) = -H(t, phi_H^t x) and the path
phi_H^{-1} o phi_{H'} by (H' - H)(t, phi_H^t x).  Both are flow-backed
evaluators: their values are computed by integrating the flow of H.

Actions follow A_H([z, w]) = -int w^* omega - int_0^1 H(t, z(t)) dt, so
recapping by a sphere of area a shifts the action by -a.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.optimize import brentq

from .config import DEFAULT, Config
from .dynamics import (
    PeriodicOrbit,
    _polish_extremum,
    flow_map,
    flow_with_derivative,
    sample_grid,
)
from .errors import InvalidMargin, NoConvergence, Unbounded
from .geometry import EuclideanR2n, Loop, canonical_disc, disc_areas
from .hamiltonian import (
    ConstTerm,
    GaussianTerm,
    Hamiltonian,
    LinearTerm,
    QuadraticTerm,
    TimeReparameterized,
)


@dataclass(frozen=True)
class HoferData:
    E_minus: float
    E_plus: float

    @property
    def norm(self) -> float:
        return self.E_minus + self.E_plus

    def to_json(self) -> dict:
        return {"E_minus": self.E_minus, "E_plus": self.E_plus, "norm": self.norm}


# ------------------------------------------------------- path algebra


class FlowPullback:
    """K(t, x) = sign * F(t, phi_G^t(x)) for a Hamiltonian G and an evaluator F.

    Images of the evaluation grid under phi_G^t are cached and advanced
    incrementally from the nearest cached time.
    """

    def __init__(self, G, F, sign: float = 1.0, step: float = DEFAULT.ode_step):
        if G.manifold != F.manifold:
            raise ValueError("evaluators live on different models")
        self.G = G
        self.F = F
        self.sign = float(sign)
        self.step = step
        self._grid = None
        self._cache: dict[float, np.ndarray] = {}

    @property
    def manifold(self):
        return self.F.manifold

    @property
    def is_autonomous(self) -> bool:
        return False

    def _phi(self, t: float, x) -> np.ndarray:
        return flow_map(self.G, x, 0.0, float(t), self.step)

    def value(self, t: float, x) -> np.ndarray:
        return self.sign * self.F.value(t, self._phi(t, x))

    def gradient(self, t: float, x) -> np.ndarray:
        y, D = flow_with_derivative(self.G, x, 0.0, float(t), self.step)
        g = self.F.gradient(t, y)
        return self.sign * np.einsum("...ji,...j->...i", D, g)

    def grid_image(self, t: float, grid: np.ndarray) -> np.ndarray:
        """phi_G^t applied to a fixed grid, advanced from the nearest cached time."""
        if self._grid is None or self._grid.shape != grid.shape or not np.array_equal(self._grid, grid):
            self._grid = grid.copy()
            self._cache = {0.0: grid.copy()}
        t = float(t)
        if t not in self._cache:
            t0 = min(self._cache, key=lambda s: abs(s - t))
            self._cache[t] = flow_map(self.G, self._cache[t0], t0, t, self.step)
        return self._cache[t]


def inverse_ham(H, step: float = DEFAULT.ode_step) -> FlowPullback:
    """Hbar(t, x) = -H(t, phi_H^t x), generating (phi_H^t)^{-1}."""
    return FlowPullback(H, H, -1.0, step)


class Difference:
    """Pointwise difference A - B of two evaluators."""

    def __init__(self, A, B):
        self.A = A
        self.B = B

    @property
    def manifold(self):
        return self.A.manifold

    @property
    def is_autonomous(self) -> bool:
        return getattr(self.A, "is_autonomous", False) and getattr(self.B, "is_autonomous", False)

    def value(self, t, x):
        return self.A.value(t, x) - self.B.value(t, x)

    def gradient(self, t, x):
        return self.A.gradient(t, x) - self.B.gradient(t, x)

    def hessian(self, t, x):
        return self.A.hessian(t, x) - self.B.hessian(t, x)


def _difference(A, B):
    if isinstance(A, Hamiltonian) and isinstance(B, Hamiltonian):
        return A + B.scaled(-1.0)
    return Difference(A, B)


def compose_ham(H, H2, step: float = DEFAULT.ode_step) -> FlowPullback:
    """(Hbar # H')(t, x) = (H' - H)(t, phi_H^t x), generating phi_H^{-1} o phi_{H'}."""
    return FlowPullback(H, _difference(H2, H), 1.0, step)


# ------------------------------------------------------------ norms


def _bounded_box(H) -> tuple[float, Optional[float]]:
    """Half-width of the r2n search box and the value of H_t at infinity (if it decays)."""
    terms = getattr(H, "terms", None)
    if terms is None:
        return 2.0, None
    box = 1.0
    decays = True
    for term in terms:
        if isinstance(term, (QuadraticTerm, LinearTerm)):
            coeffs = term.S if isinstance(term, QuadraticTerm) else term.c
            if np.any(coeffs != 0):
                raise Unbounded(f"{term.kind} term is unbounded on r2n")
        elif isinstance(term, GaussianTerm):
            box = max(box, float(np.max(np.abs(term.center))) + 6 * term.sigma)
        elif not isinstance(term, ConstTerm):
            decays = False
    return box, (0.0 if decays else None)


def _structured_base(H):
    """Innermost structured Hamiltonian of an evaluator chain (for the r2n checks)."""
    while not isinstance(H, Hamiltonian):
        H = getattr(H, "base", None) or getattr(H, "F", None) or getattr(H, "A", None)
        if H is None:
            return None
    return H


class _UpperEnvelope:
    """t -> max_x c K(t, x) as a union of smoothly tracked local-maximum branches.

    A branch is a polished local maximizer followed in t by Newton polish
    (``None`` stands for the value 0 at infinity on r2n).  For a flow
    pullback the maximization runs over image points y = phi^t(x), so
    branches live in image coordinates.
    """

    def __init__(self, K, c: float, X: np.ndarray, at_infinity: bool):
        if isinstance(K, FlowPullback):
            self.F, self.c = K.F, c * K.sign
            self.image = lambda t: K.grid_image(t, X)
        else:
            self.F, self.c = K, c
            self.image = lambda t: X
        self.at_infinity = at_infinity
        self.polish = hasattr(self.F, "hessian")

    def _val(self, t: float, y) -> float:
        return 0.0 if y is None else self.c * float(self.F.value(t, y))

    def _polished(self, t: float, y):
        if y is None or not self.polish:
            return y
        z = _polish_extremum(self.F, t, y, self.c)
        return z if self._val(t, z) >= self._val(t, y) else y

    def top(self, t: float):
        """(value, branch point) of the global maximum at time t."""
        Y = self.image(t)
        v = self.c * self.F.value(t, Y)
        y = self._polished(t, Y[int(np.argmax(v))])
        val = max(float(np.max(v)), self._val(t, y))
        if self.at_infinity and val < 0.0:
            return 0.0, None
        return val, y

    def track(self, ts, y) -> np.ndarray:
        """Values of the branch through y at increasing times ts."""
        out = np.empty(len(ts))
        for i, t in enumerate(ts):
            y = self._polished(t, y)
            out[i] = self._val(t, y)
        return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _gauss(env: _UpperEnvelope, a: float, b: float, y) -> float:
    if b <= a:
        return 0.0
    ts = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
    return 0.5 * (b - a) * float(_GL_W @ env.track(ts, y))


def _panel(env: _UpperEnvelope, a: float, b: float, top_a, top_b, depth: int) -> float:
    """Integral of the upper envelope over [a, b] given the global maxima at both ends."""
    (va, ya), (vb, yb) = top_a, top_b
    scale = 1e-11 * max(1.0, abs(va), abs(vb))
    # same branch: tracking from a reproduces the global value at b
    if abs(env.track([b], ya)[0] - vb) <= scale and abs(env.track([a], yb)[0] - va) <= scale:
        mid = 0.5 * (a + b)
        if depth == 0 or abs(env.track([mid], ya)[0] - env.top(mid)[0]) <= scale:
            return _gauss(env, a, b, ya)
    # two branches exchange the maximum once: locate the switch time
    g = lambda t: env.track([t], ya)[0] - env.track([t], yb)[0]
    ga, gb = g(a), g(b)
    if ga >= -scale and gb <= scale and ga - gb > scale:
        ts = brentq(g, a, b, xtol=1e-14) if ga > 0 > gb else (a if ga <= 0 else b)
        mid = 0.5 * (a + b)
        if depth == 0 or abs(max(env.track([mid], ya)[0], env.track([mid], yb)[0]) - env.top(mid)[0]) <= scale:
            return _gauss(env, a, ts, ya) + _gauss(env, ts, b, yb)
    if depth == 0:
        raise NoConvergence(f"could not resolve the maximizer branches on [{a:.6g}, {b:.6g}]")
    mid = 0.5 * (a + b)
    top_m = env.top(mid)
    return _panel(env, a, mid, top_a, top_m, depth - 1) + _panel(env, mid, b, top_m, top_b, depth - 1)


def _envelope_integral(env: _UpperEnvelope, panels: int) -> float:
    ts = np.linspace(0.0, 1.0, panels + 1)
    tops = [env.top(t) for t in ts]
    return sum(_panel(env, ts[i], ts[i + 1], tops[i], tops[i + 1], 8) for i in range(panels))


def hofer_norms(H, grid: int = 64, cfg: Config = DEFAULT, panels: int = 32) -> HoferData:
    """E^-(H), E^+(H) by integrating the tracked spatial extrema in t.

    max_x H_t is piecewise smooth in t with kinks where the maximizer jumps
    between branches.  Each of ``panels`` time panels is integrated by
    Gauss-Legendre along the tracked maximizer, split at switch times found
    by root finding, and bisected when a branch appears inside a panel.
    """
    model = H.manifold
    at_inf = False
    box = 2.0
    if isinstance(model, EuclideanR2n):
        base = _structured_base(H)
        if base is None:
            raise Unbounded("cannot certify boundedness of this evaluator on r2n")
        box, inf_val = _bounded_box(base)
        at_inf = inf_val is not None
    X = sample_grid(model, grid, box)
    if isinstance(H, Hamiltonian) and not H.terms:
        return HoferData(0.0, 0.0)
    upper = _UpperEnvelope(H, +1.0, X, at_inf)
    lower = _UpperEnvelope(H, -1.0, X, at_inf)
    if getattr(H, "is_autonomous", False):
        return HoferData(lower.top(0.0)[0], upper.top(0.0)[0])
    return HoferData(_envelope_integral(lower, panels), _envelope_integral(upper, panels))


def hofer_distance(H, H2, grid: int = 64, step: float = DEFAULT.ode_step, cfg: Config = DEFAULT) -> float:
    """||Hbar # H'||."""
    return hofer_norms(compose_ham(H, H2, step), grid, cfg).norm


# ------------------------------------------------- reparameterization


def _smoothstep(s):
    return s**3 * (10 - 15 * s + 6 * s * s)


def _smoothstep_integral(s):
    return s**4 * (2.5 - 3 * s + s * s)


@dataclass(frozen=True)
class BoundaryFlatProfile:
    """zeta with zeta' = c b(t), b = 0 near both ends, a quintic ramp, 1 in the middle."""

    margin: float

    @property
    def c(self) -> float:
        return 1.0 / (1.0 - 3.0 * self.margin)

    def _b(self, t: float) -> float:
        m = self.margin
        u = min(t, 1.0 - t)
        if u <= m:
            return 0.0
        if u <= 2 * m:
            return float(_smoothstep((u - m) / m))
        return 1.0

    def _B(self, t: float) -> float:
        m = self.margin
        if t > 0.5:
            return (1.0 - 3.0 * m) - self._B(1.0 - t)
        if t <= m:
            return 0.0
        if t <= 2 * m:
            return m * float(_smoothstep_integral((t - m) / m))
        return 0.5 * m + (t - 2 * m)

    def zeta(self, t: float) -> float:
        return self.c * self._B(float(t))

    def dzeta(self, t: float) -> float:
        return self.c * self._b(float(t))


def reparam_boundary_flat(H, margin: float) -> TimeReparameterized:
    """H^zeta(t, x) = zeta'(t) H(zeta(t), x) with zeta' = 0 near t = 0 and t = 1."""
    if not 0 < margin < 0.25:
        raise InvalidMargin(f"margin must lie in (0, 1/4), got {margin}")
    prof = BoundaryFlatProfile(float(margin))
    return TimeReparameterized(H, prof.zeta, prof.dzeta)


# ------------------------------------------------------------- actions


@dataclass(frozen=True)
class CappedLoop:
    """A 1-periodic loop (or orbit) with the canonical small disc recapped by k sphere generators."""

    orbit: object
    k: int = 0
    manifold: object = None

    def __post_init__(self):
        model = self.model
        if model.area == 0 and self.k != 0:
            raise ValueError(f"{model.kind} has trivial pi_2; only k = 0 is allowed")

    @property
    def model(self):
        if self.manifold is not None:
            return self.manifold
        if isinstance(self.orbit, Loop):
            return self.orbit.manifold
        raise ValueError("a manifold is required for an orbit capping")

    def loop(self) -> Loop:
        if isinstance(self.orbit, Loop):
            return self.orbit
        return self.orbit.loop(self.model)


def gamma_equivalent(c1_diff: int, omega_diff: float) -> bool:
    """Cappings are equivalent iff the difference sphere has c1 = 0 and omega = 0."""
    return int(c1_diff) == 0 and abs(float(omega_diff)) <= 1e-10


def _hamiltonian_integral(H, cl: CappedLoop) -> float:
    orb = cl.orbit
    if isinstance(orb, PeriodicOrbit) and orb.is_constant:
        p = orb.point
        val, _ = integrate.quad(lambda t: float(H.value(t, p)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
        return float(val)
    if isinstance(orb, PeriodicOrbit) and orb._fine is not None:
        pts = orb._fine
    else:
        pts = cl.loop().points
    K = len(pts)
    ts = np.arange(K) / K
    vals = np.array([float(H.value(t, x)) for t, x in zip(ts, pts)])
    return float(np.mean(vals))


def action_value(H, cl: CappedLoop, radial_samples: int = 128, cfg: Config = DEFAULT) -> float:
    """A_H([z, w]) = -(canonical disc area + k omega(A)) - int_0^1 H(t, z(t)) dt."""
    model = cl.model
    orb = cl.orbit
    if isinstance(orb, PeriodicOrbit) and orb.is_constant:
        area = 0.0
    else:
        area = disc_areas(canonical_disc(cl.loop(), radial_samples, cfg)).symplectic
    return float(-(area + cl.k * model.area) - _hamiltonian_integral(H, cl))


@dataclass(frozen=True)
class SpectrumReport:
    entries: list  # (orbit id, k, action)
    bases: dict  # orbit id -> action of the canonical capping
    period_area: float
    coset_ok: bool
    notes: str = "Spec(H) has measure zero; entries are a finite sample of it"

    @property
    def values(self) -> list[float]:
        return sorted(v for _, _, v in self.entries)

    def to_json(self) -> dict:
        return {
            "entries": [{"orbit": i, "k": k, "action": v} for i, k, v in sorted(self.entries, key=lambda e: (e[2], e[0], e[1]))],
            "cosets": [
                {"orbit": i, "base": b, "period_group": "trivial" if self.period_area == 0 else f"{self.period_area!r}*Z"}
                for i, b in sorted(self.bases.items())
            ],
            "coset_ok": self.coset_ok,
            "notes": self.notes,
        }


def action_spectrum(
    H,
    orbits: Sequence[PeriodicOrbit],
    k_range: tuple[int, int] = (0, 0),
    radial_samples: int = 128,
    cfg: Config = DEFAULT,
) -> SpectrumReport:
    """Action values of the given 1-periodic orbits over cappings k in k_range."""
    model = H.manifold
    ks = range(k_range[0], k_range[1] + 1) if model.area else range(0, 1)
    entries = []
    bases = {}
    ok = True
    for i, orb in enumerate(orbits):
        base = action_value(H, CappedLoop(orb, 0, model), radial_samples, cfg)
        bases[i] = base
        for k in ks:
            v = base if k == 0 else action_value(H, CappedLoop(orb, k, model), radial_samples, cfg)
            entries.append((i, k, v))
            ok = ok and abs((v - base) + k * model.area) <= 1e-9
    return SpectrumReport(entries, bases, model.area, ok)
