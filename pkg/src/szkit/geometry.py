"""Model phase spaces, Riemannian center of mass and small bounding discs.

Three models are provided:

* ``EuclideanR2n(n)``: R^{2n} with omega0, J0 and the flat metric;
* ``FlatTorus(n)``: R^{2n} / Z^{2n}.  Points are stored as lifts in R^{2n};
  ``wrap`` reduces them to the unit cube.  ``exp`` returns lifts so that
  sampled curves and discs stay continuous;
* ``RoundSphere()``: the unit sphere in R^3 with the area form
  omega_x(u, v) = x . (u x v), J_x v = x x v and the round metric.
  Its total area is 4 pi and c1 = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .config import DEFAULT, Config
from .errors import (
    DiameterExceedsInjectivity,
    NoConvergence,
    OutsideInjectivity,
    ResolutionTooCoarse,
)
from .linalg import J0, omega0


class ManifoldModel:
    """Common interface of the model phase spaces."""

    kind: str
    n: int
    dim: int  # ambient coordinate dimension of a point
    inj: float
    area: float = 0.0  # generator of the period group (0 when trivial)
    c1_generator: int = 0

    @property
    def gamma_omega(self) -> str:
        return "trivial" if self.area == 0 else f"{self.area!r}*Z"

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"{self.kind} points have {self.dim} coordinates, got {x.shape[-1]}")
        return x

    def wrap(self, x):
        return np.asarray(x, dtype=float)

    def distance(self, x, y) -> np.ndarray:
        return np.linalg.norm(self.log(x, y, check=False), axis=-1)

    def omega(self, x, u, v) -> np.ndarray:
        return omega0(u, v)

    def J(self, x, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v @ J0(self.n).T

    def exp_radial_derivative(self, x, xi, r) -> np.ndarray:
        """d/dr exp_x(r xi)."""
        xi = np.asarray(xi, dtype=float)
        return np.zeros_like(np.asarray(r, dtype=float)[..., None] * xi) + xi

    def to_json(self) -> dict:
        return {"manifold": self.kind, "n": self.n}


@dataclass(frozen=True)
class EuclideanR2n(ManifoldModel):
    n: int = 1
    kind: str = field(default="r2n", init=False)
    inj: float = field(default=math.inf, init=False)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def exp(self, x, v) -> np.ndarray:
        return np.asarray(x, dtype=float) + np.asarray(v, dtype=float)

    def log(self, x, y, check: bool = True) -> np.ndarray:
        return np.asarray(y, dtype=float) - np.asarray(x, dtype=float)


@dataclass(frozen=True)
class FlatTorus(ManifoldModel):
    n: int = 1
    kind: str = field(default="torus2n", init=False)
    inj: float = field(default=0.5, init=False)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def wrap(self, x):
        w = np.mod(np.asarray(x, dtype=float), 1.0)
        return np.where(w >= 1.0, 0.0, w)

    def exp(self, x, v) -> np.ndarray:
        return np.asarray(x, dtype=float) + np.asarray(v, dtype=float)

    def log(self, x, y, check: bool = True) -> np.ndarray:
        d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        d = d - np.round(d)
        if check and np.any(np.linalg.norm(d, axis=-1) >= self.inj):
            raise OutsideInjectivity("points are at least 1/2 apart on the torus")
        return d


@dataclass(frozen=True)
class RoundSphere(ManifoldModel):
    n: int = field(default=1, init=False)
    kind: str = field(default="sphere", init=False)
    inj: float = field(default=math.pi, init=False)
    area: float = field(default=4 * math.pi, init=False)
    c1_generator: int = field(default=2, init=False)
    dim: int = field(default=3, init=False)

    def check_point(self, x) -> np.ndarray:
        x = super().check_point(x)
        if np.any(np.abs(np.linalg.norm(x, axis=-1) - 1.0) > 1e-8):
            raise ValueError("sphere points must be unit vectors")
        return x

    def wrap(self, x):
        x = np.asarray(x, dtype=float)
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def exp(self, x, v) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        a = np.linalg.norm(v, axis=-1, keepdims=True)
        safe = np.where(a > 0, a, 1.0)
        return np.cos(a) * x + np.where(a > 0, np.sin(a) / safe, 1.0) * v

    def log(self, x, y, check: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = np.cross(x, y)
        s = np.linalg.norm(c, axis=-1, keepdims=True)
        cosang = np.sum(x * y, axis=-1, keepdims=True)
        theta = np.arctan2(s, cosang)
        if check and np.any((theta >= self.inj - 1e-9) | ((s < 1e-15) & (cosang < 0))):
            raise OutsideInjectivity("antipodal points have no unique geodesic")
        w = y - cosang * x
        wn = np.linalg.norm(w, axis=-1, keepdims=True)
        return np.where(wn > 0, theta / np.where(wn > 0, wn, 1.0), 0.0) * w

    def distance(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.arctan2(np.linalg.norm(np.cross(x, y), axis=-1), np.sum(x * y, axis=-1))

    def omega(self, x, u, v) -> np.ndarray:
        return np.sum(np.asarray(x) * np.cross(u, v), axis=-1)

    def J(self, x, v) -> np.ndarray:
        return np.cross(x, v)

    def exp_radial_derivative(self, x, xi, r) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        r = np.asarray(r, dtype=float)[..., None]
        a = np.linalg.norm(xi, axis=-1, keepdims=True)
        return -a * np.sin(r * a) * x + np.cos(r * a) * xi

    def tangent_projection(self, x, v) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return v - np.sum(x * v, axis=-1, keepdims=True) * x

    def reference_frame(self, c) -> np.ndarray:
        """Unitary frame (e1, e2 = c x e1) at c, returned as a 3 x 2 matrix.

        e1 is the normalized projection of e_x onto the tangent plane, or of
        e_y when c is (nearly) parallel to e_x.
        """
        c = np.asarray(c, dtype=float)
        for axis in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
            e1 = axis - np.dot(axis, c) * c
            if np.linalg.norm(e1) > 0.5:
                break
        e1 = e1 / np.linalg.norm(e1)
        return np.column_stack([e1, np.cross(c, e1)])

    def rotation(self, c, y) -> np.ndarray:
        """Rotation taking c to y about the axis c x y (identity if y = c)."""
        c = np.asarray(c, dtype=float)
        y = np.asarray(y, dtype=float)
        axis = np.cross(c, y)
        s = np.linalg.norm(axis)
        co = float(np.dot(c, y))
        if s < 1e-15:
            if co > 0:
                return np.eye(3)
            raise OutsideInjectivity("cannot transport a frame to the antipode")
        k = axis / s
        K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        return np.eye(3) + s * K + (1 - co) * K @ K

    def transported_frame(self, c, y) -> np.ndarray:
        """Reference frame at c carried to y along the minimal geodesic."""
        return self.rotation(c, y) @ self.reference_frame(c)


def model_from_json(data: dict) -> ManifoldModel:
    kind = data.get("manifold")
    if kind == "r2n":
        return EuclideanR2n(int(data.get("n", 1)))
    if kind == "torus2n":
        return FlatTorus(int(data.get("n", 1)))
    if kind == "sphere":
        return RoundSphere()
    raise ValueError(f"unknown manifold {kind!r}")


# ------------------------------------------------------------------- loops


@dataclass(frozen=True)
class Loop:
    """Closed curve sampled at t_k = k / K, k = 0..K-1 (the endpoint is implicit)."""

    manifold: ManifoldModel
    points: np.ndarray

    def __post_init__(self):
        pts = self.manifold.check_point(np.atleast_2d(np.asarray(self.points, dtype=float)))
        if pts.ndim != 2 or len(pts) < 1:
            raise ValueError("loop needs a (K, d) sample array")
        if len(pts) > 1:
            steps = self.manifold.distance(pts, np.roll(pts, -1, axis=0))
            if np.max(steps) >= self.manifold.inj / 4:
                raise ResolutionTooCoarse("consecutive loop samples are at least inj/4 apart")
        object.__setattr__(self, "points", pts)

    @property
    def K(self) -> int:
        return len(self.points)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.K) / self.K

    def diameter(self) -> float:
        pts = self.points
        if self.K == 1:
            return 0.0
        d = self.manifold.distance(pts[:, None, :], pts[None, :, :])
        return float(np.max(d))

    def rotated(self, shift: int) -> "Loop":
        """Same loop with its parameter origin moved by ``shift`` samples."""
        return Loop(self.manifold, np.roll(self.points, -shift, axis=0))

    def to_json(self) -> dict:
        return {**self.manifold.to_json(), "points": self.points.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "Loop":
        return cls(model_from_json(data), np.asarray(data["points"], dtype=float))


@dataclass(frozen=True)
class CenterOfMass:
    point: np.ndarray
    lift: np.ndarray
    iterations: int

    @property
    def max_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.lift, axis=-1)))


def center_of_mass(z: Loop, cfg: Config = DEFAULT) -> CenterOfMass:
    """Karcher mean x_z of the loop samples and the lift xi_z with z = exp_{x_z}(xi_z)."""
    M = z.manifold
    if z.diameter() >= M.inj:
        raise DiameterExceedsInjectivity(f"loop diameter {z.diameter():.6g} >= inj {M.inj:.6g}")
    x = z.points[0].copy()
    for it in range(1, cfg.karcher_max_iter + 1):
        xi = M.log(x, z.points)
        step = xi.mean(axis=0)
        x = M.exp(x, step)
        if isinstance(M, RoundSphere):
            x = x / np.linalg.norm(x)
        if np.linalg.norm(step) < cfg.karcher_step_tol:
            xi = M.log(x, z.points)
            return CenterOfMass(x, xi, it)
    raise NoConvergence(f"Karcher iteration did not converge in {cfg.karcher_max_iter} steps")


# ------------------------------------------------------------------- discs


@dataclass(frozen=True)
class SmallDisc:
    """Polar-grid samples w[i, k] = exp_{x_z}(r_i xi_z(t_k))."""

    loop: Loop
    center: CenterOfMass
    radii: np.ndarray
    samples: np.ndarray

    @property
    def manifold(self) -> ManifoldModel:
        return self.loop.manifold

    def to_json(self) -> dict:
        return {
            **self.manifold.to_json(),
            "center": self.center.point.tolist(),
            "radii": self.radii.tolist(),
            "samples": self.samples.tolist(),
        }


def canonical_disc(z: Loop, radial_samples: int = 64, cfg: Config = DEFAULT) -> SmallDisc:
    """Canonical small bounding disc of a loop, sampled on a polar grid.

    ``radial_samples`` is the number of radial intervals; it is rounded up
    to an even number for Simpson quadrature.
    """
    if radial_samples < 2:
        raise ResolutionTooCoarse("need at least two radial intervals")
    radial_samples += radial_samples % 2
    com = center_of_mass(z, cfg)
    if com.max_radius >= z.manifold.inj / 2:
        raise DiameterExceedsInjectivity(f"max |xi_z| = {com.max_radius:.6g} is not below inj/2")
    r = np.linspace(0.0, 1.0, radial_samples + 1)
    # the r = 1 row is exp(xi_z), equal to z up to lattice translations
    w = z.manifold.exp(com.point, r[:, None, None] * com.lift[None, :, :])
    return SmallDisc(z, com, r, w)


@dataclass(frozen=True)
class DiscAreas:
    symplectic: float
    riemannian: float
    error: float

    def __iter__(self):
        return iter((self.symplectic, self.riemannian))


def _spectral_dt(w: np.ndarray) -> np.ndarray:
    """Derivative along the periodic t axis (axis 1) by FFT."""
    K = w.shape[1]
    freq = np.fft.fftfreq(K, d=1.0 / K)
    if K % 2 == 0:
        freq[K // 2] = 0.0
    W = np.fft.fft(w, axis=1)
    return np.real(np.fft.ifft(2j * np.pi * freq[None, :, None] * W, axis=1))


def _simpson_trap(f: np.ndarray, r: np.ndarray) -> tuple[float, float]:
    h = r[1] - r[0]
    trap = h * (f[0] / 2 + f[1:-1].sum() + f[-1] / 2)
    simp = h / 3 * (f[0] + f[-1] + 4 * f[1:-1:2].sum() + 2 * f[2:-1:2].sum())
    return float(simp), float(trap)


def disc_areas(w: SmallDisc) -> DiscAreas:
    """Symplectic area of w and its Riemannian area, with a quadrature error estimate.

    Partials: d/dr analytically through the exponential map, d/dt
    spectrally.  The t-integral is the periodic rectangle rule (spectrally
    accurate), the r-integral is composite Simpson; the error estimate is
    the Simpson/trapezoid discrepancy.
    """
    M = w.manifold
    K = w.samples.shape[1]
    if K < 8 or len(w.radii) < 3:
        raise ResolutionTooCoarse("disc grid too small for quadrature")
    a = M.exp_radial_derivative(w.center.point, w.center.lift[None, :, :], w.radii[:, None])
    b = _spectral_dt(w.samples)
    sym = M.omega(w.samples, a, b)
    aa = np.sum(a * a, axis=-1)
    bb = np.sum(b * b, axis=-1)
    ab = np.sum(a * b, axis=-1)
    riem = np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))
    s_simp, s_trap = _simpson_trap(sym.mean(axis=1), w.radii)
    r_simp, r_trap = _simpson_trap(riem.mean(axis=1), w.radii)
    err = max(abs(s_simp - s_trap), abs(r_simp - r_trap), 1e-14 * max(1.0, abs(r_simp)))
    return DiscAreas(s_simp, r_simp, err)


def empirical_area_constant(w: SmallDisc) -> float:
    """Smallest C with Area_g(w) <= 2 pi C max|xi_z| for this disc."""
    rmax = w.center.max_radius
    if rmax == 0:
        return 0.0
    return disc_areas(w).riemannian / (2 * math.pi * rmax)
