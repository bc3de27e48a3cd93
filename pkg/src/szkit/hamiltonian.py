"""Structured time-dependent Hamiltonians on the model phase spaces.

A Hamiltonian is a finite sum of terms a_j(t) f_j(x), where each a_j is a
trigonometric polynomial on [0, 1] and each f_j has closed-form value,
gradient and Hessian.  On the sphere, gradients and Hessians are those of
the ambient extension to R^3.

Every evaluator (structured or derived) exposes ``manifold``,
``value(t, x)``, ``gradient(t, x)`` and, when available, ``hessian(t, x)``,
vectorized over leading axes of ``x`` for a scalar ``t``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .geometry import EuclideanR2n, FlatTorus, ManifoldModel, RoundSphere, model_from_json
from .linalg import is_symmetric

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class TimeProfile:
    """a(t) = const + sum_k cos[k-1] cos(2 pi k t) + sin[k-1] sin(2 pi k t)."""

    const: float = 1.0
    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cos", tuple(float(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(float(s) for s in self.sin))
        object.__setattr__(self, "const", float(self.const))

    @property
    def is_constant(self) -> bool:
        return not any(self.cos) and not any(self.sin)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.const)
        for k, c in enumerate(self.cos, start=1):
            out = out + c * np.cos(TWO_PI * k * t)
        for k, s in enumerate(self.sin, start=1):
            out = out + s * np.sin(TWO_PI * k * t)
        return out if out.ndim else float(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for k, c in enumerate(self.cos, start=1):
            out = out - TWO_PI * k * c * np.sin(TWO_PI * k * t)
        for k, s in enumerate(self.sin, start=1):
            out = out + TWO_PI * k * s * np.cos(TWO_PI * k * t)
        return out if out.ndim else float(out)

    def to_json(self) -> dict:
        return {"const": self.const, "cos": list(self.cos), "sin": list(self.sin)}

    @classmethod
    def from_json(cls, data: dict | None) -> "TimeProfile":
        if data is None:
            return cls()
        return cls(float(data.get("const", 0.0)), tuple(data.get("cos", ())), tuple(data.get("sin", ())))


# ------------------------------------------------------------------- terms


@dataclass(frozen=True)
class Term:
    profile: TimeProfile = field(default_factory=TimeProfile, kw_only=True)
    kind = "term"

    def f(self, x):
        raise NotImplementedError

    def df(self, x):
        raise NotImplementedError

    def d2f(self, x):
        raise NotImplementedError

    def mean(self, model: ManifoldModel) -> float:
        """Average of f over the compact model."""
        raise ValueError(f"{self.kind} term has no mean on {model.kind}")

    def check(self, model: ManifoldModel) -> None:
        pass

    def params(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params(), "time_profile": self.profile.to_json()}


def _arr(a) -> np.ndarray:
    return np.asarray(a, dtype=float)


@dataclass(frozen=True)
class ConstTerm(Term):
    value: float = 0.0
    kind = "const"

    def f(self, x):
        return np.full(np.shape(x)[:-1], self.value)

    def df(self, x):
        return np.zeros(np.shape(x))

    def d2f(self, x):
        d = np.shape(x)[-1]
        return np.zeros(np.shape(x)[:-1] + (d, d))

    def mean(self, model):
        return self.value

    def params(self):
        return {"value": self.value}


@dataclass(frozen=True)
class QuadraticTerm(Term):
    """f(x) = x^T S x / 2."""

    S: np.ndarray = None
    kind = "quadratic"

    def __post_init__(self):
        S = _arr(self.S)
        if not is_symmetric(S, 1e-12 * max(1.0, float(np.max(np.abs(S), initial=0)))):
            raise ValueError("quadratic term needs a symmetric matrix")
        object.__setattr__(self, "S", S)

    def f(self, x):
        x = _arr(x)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.S, x)

    def df(self, x):
        return _arr(x) @ self.S.T

    def d2f(self, x):
        return np.broadcast_to(self.S, np.shape(x)[:-1] + self.S.shape).copy()

    def check(self, model):
        if not isinstance(model, EuclideanR2n) or self.S.shape != (model.dim, model.dim):
            raise ValueError("quadratic terms live on r2n with a 2n x 2n matrix")

    def params(self):
        return {"S": self.S.tolist()}


@dataclass(frozen=True)
class LinearTerm(Term):
    """f(x) = c . x (on the torus only X_f is well defined)."""

    c: np.ndarray = None
    kind = "linear"

    def __post_init__(self):
        object.__setattr__(self, "c", _arr(self.c))

    def f(self, x):
        return _arr(x) @ self.c

    def df(self, x):
        return np.zeros(np.shape(x)) + self.c

    def d2f(self, x):
        d = np.shape(x)[-1]
        return np.zeros(np.shape(x)[:-1] + (d, d))

    def check(self, model):
        if isinstance(model, RoundSphere) or self.c.shape != (model.dim,):
            raise ValueError("linear terms live on r2n or torus2n with a 2n vector")

    def params(self):
        return {"c": self.c.tolist()}


@dataclass(frozen=True)
class GaussianTerm(Term):
    """f(x) = A exp(-|x - c|^2 / (2 sigma^2))."""

    center: np.ndarray = None
    amplitude: float = 1.0
    sigma: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "center", _arr(self.center))
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def f(self, x):
        d = _arr(x) - self.center
        return self.amplitude * np.exp(-np.sum(d * d, axis=-1) / (2 * self.sigma**2))

    def df(self, x):
        d = _arr(x) - self.center
        return -(self.f(x) / self.sigma**2)[..., None] * d

    def d2f(self, x):
        d = _arr(x) - self.center
        s2 = self.sigma**2
        eye = np.eye(d.shape[-1])
        return self.f(x)[..., None, None] * (d[..., :, None] * d[..., None, :] / s2**2 - eye / s2)

    def check(self, model):
        if not isinstance(model, EuclideanR2n) or self.center.shape != (model.dim,):
            raise ValueError("gaussian terms live on r2n with a 2n center")

    def params(self):
        return {"center": self.center.tolist(), "amplitude": self.amplitude, "sigma": self.sigma}


@dataclass(frozen=True)
class TrigTerm(Term):
    """f(x) = a cos(2 pi k.x) + b sin(2 pi k.x) with an integer wave vector k."""

    k: np.ndarray = None
    cos: float = 0.0
    sin: float = 0.0
    kind = "trig"

    def __post_init__(self):
        k = np.asarray(self.k)
        if not np.all(np.equal(np.round(k), k)):
            raise ValueError("wave vector must be integral")
        object.__setattr__(self, "k", k.astype(float))

    def _phase(self, x):
        return TWO_PI * (_arr(x) @ self.k)

    def f(self, x):
        ph = self._phase(x)
        return self.cos * np.cos(ph) + self.sin * np.sin(ph)

    def df(self, x):
        ph = self._phase(x)
        return (TWO_PI * (-self.cos * np.sin(ph) + self.sin * np.cos(ph)))[..., None] * self.k

    def d2f(self, x):
        return -(TWO_PI**2) * self.f(x)[..., None, None] * np.outer(self.k, self.k)

    def mean(self, model):
        return self.cos if not np.any(self.k) else 0.0

    def check(self, model):
        if isinstance(model, RoundSphere) or self.k.shape != (model.dim,):
            raise ValueError("trig terms live on r2n or torus2n with a 2n wave vector")

    def params(self):
        return {"k": [int(v) for v in self.k], "cos": self.cos, "sin": self.sin}


@dataclass(frozen=True)
class AmbientTerm(Term):
    """f(x) = l . x + x^T Q x restricted to the unit sphere."""

    linear: np.ndarray = None
    quadratic: np.ndarray = None
    kind = "ambient"

    def __post_init__(self):
        lin = np.zeros(3) if self.linear is None else _arr(self.linear)
        Q = np.zeros((3, 3)) if self.quadratic is None else _arr(self.quadratic)
        if lin.shape != (3,) or Q.shape != (3, 3) or not is_symmetric(Q, 1e-12):
            raise ValueError("ambient terms need a 3-vector and a symmetric 3 x 3 matrix")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", Q)

    def f(self, x):
        x = _arr(x)
        return x @ self.linear + np.einsum("...i,ij,...j->...", x, self.quadratic, x)

    def df(self, x):
        return self.linear + 2 * _arr(x) @ self.quadratic

    def d2f(self, x):
        return np.broadcast_to(2 * self.quadratic, np.shape(x)[:-1] + (3, 3)).copy()

    def mean(self, model):
        return float(np.trace(self.quadratic)) / 3.0

    def check(self, model):
        if not isinstance(model, RoundSphere):
            raise ValueError("ambient terms live on the sphere")

    def params(self):
        return {"linear": self.linear.tolist(), "quadratic": self.quadratic.tolist()}


TERM_KINDS = {
    cls.kind: cls for cls in (ConstTerm, QuadraticTerm, LinearTerm, GaussianTerm, TrigTerm, AmbientTerm)
}


def term_from_json(data: dict) -> Term:
    kind = data.get("kind")
    if kind not in TERM_KINDS:
        raise ValueError(f"unknown term kind {kind!r}")
    params = dict(data.get("params", {}))
    return TERM_KINDS[kind](**params, profile=TimeProfile.from_json(data.get("time_profile")))


# -------------------------------------------------------------- Hamiltonian


@dataclass(frozen=True)
class Hamiltonian:
    manifold: ManifoldModel
    terms: tuple = ()
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            term.check(self.manifold)

    @property
    def is_autonomous(self) -> bool:
        return all(term.profile.is_constant for term in self.terms)

    def _sum(self, t: float, x, attr: str, extra: tuple = ()):
        x = _arr(x)
        out = np.zeros(x.shape[:-1] + extra)
        for term in self.terms:
            out = out + term.profile(float(t)) * getattr(term, attr)(x)
        return out

    def value(self, t: float, x) -> np.ndarray:
        return self._sum(t, x, "f")

    def gradient(self, t: float, x) -> np.ndarray:
        return self._sum(t, x, "df", (self.manifold.dim,))

    def hessian(self, t: float, x) -> np.ndarray:
        d = self.manifold.dim
        return self._sum(t, x, "d2f", (d, d))

    def mean_value(self, t: float) -> float:
        """Average of H_t over the compact model (exact, from the term data)."""
        if isinstance(self.manifold, EuclideanR2n):
            raise ValueError("r2n is not compact; Hamiltonians there are not normalized")
        return float(sum(term.profile(float(t)) * term.mean(self.manifold) for term in self.terms))

    def normalize(self) -> "Hamiltonian":
        """Subtract the spatial mean, term by term, so that int_M H_t = 0 for all t."""
        if isinstance(self.manifold, EuclideanR2n):
            return self
        extra = []
        for term in self.terms:
            m = term.mean(self.manifold)
            if m != 0.0:
                extra.append(ConstTerm(-m, profile=term.profile))
        return Hamiltonian(self.manifold, self.terms + tuple(extra), normalized=True)

    def scaled(self, c: float) -> "Hamiltonian":
        terms = []
        for term in self.terms:
            p = term.profile
            prof = TimeProfile(c * p.const, tuple(c * v for v in p.cos), tuple(c * v for v in p.sin))
            terms.append(_with_profile(term, prof))
        return Hamiltonian(self.manifold, terms, self.normalized)

    def __add__(self, other: "Hamiltonian") -> "Hamiltonian":
        if other.manifold != self.manifold:
            raise ValueError("cannot add Hamiltonians on different models")
        return Hamiltonian(self.manifold, self.terms + other.terms, self.normalized and other.normalized)

    def to_json(self) -> dict:
        return {
            **self.manifold.to_json(),
            "terms": [term.to_json() for term in self.terms],
            "normalized": self.normalized,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Hamiltonian":
        model = model_from_json(data)
        H = cls(model, tuple(term_from_json(t) for t in data.get("terms", [])))
        if data.get("normalized", False) and not isinstance(model, EuclideanR2n):
            ts = np.linspace(0.0, 1.0, 17)
            if max(abs(H.mean_value(t)) for t in ts) < 1e-12:
                return cls(model, H.terms, normalized=True)
            H = H.normalize()
        return H

    @classmethod
    def load(cls, path: str | Path) -> "Hamiltonian":
        return cls.from_json(json.loads(Path(path).read_text()))

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))


def _with_profile(term: Term, profile: TimeProfile) -> Term:
    import dataclasses

    return dataclasses.replace(term, profile=profile)


def zero_hamiltonian(model: ManifoldModel) -> Hamiltonian:
    return Hamiltonian(model, ())


def harmonic_oscillator(a: float, n: int = 1) -> Hamiltonian:
    """H = (a/2)|z|^2 on R^{2n}."""
    return Hamiltonian(EuclideanR2n(n), (QuadraticTerm(a * np.eye(2 * n)),))


def height_function(a: float = 1.0) -> Hamiltonian:
    """H = a z on the round sphere."""
    return Hamiltonian(RoundSphere(), (AmbientTerm(linear=[0.0, 0.0, a]),))


def trig_hamiltonian(n: int, waves: Sequence[tuple], profile: TimeProfile | None = None) -> Hamiltonian:
    """Sum of trig terms (k, cos, sin) on the torus sharing one time profile."""
    prof = profile or TimeProfile()
    terms = tuple(TrigTerm(np.asarray(k), c, s, profile=prof) for k, c, s in waves)
    return Hamiltonian(FlatTorus(n), terms)


# ------------------------------------------------------- derived evaluators


@dataclass(frozen=True)
class TimeReparameterized:
    """H^zeta(t, x) = zeta'(t) H(zeta(t), x)."""

    base: object
    zeta: Callable[[float], float]
    dzeta: Callable[[float], float]

    @property
    def manifold(self) -> ManifoldModel:
        return self.base.manifold

    @property
    def is_autonomous(self) -> bool:
        return False

    def value(self, t, x):
        return self.dzeta(t) * self.base.value(self.zeta(t), x)

    def gradient(self, t, x):
        return self.dzeta(t) * self.base.gradient(self.zeta(t), x)

    def hessian(self, t, x):
        return self.dzeta(t) * self.base.hessian(self.zeta(t), x)


def sphere_average(H, t: float, n_theta: int = 64, n_phi: int = 128) -> float:
    """Quadrature of H_t over the unit sphere divided by 4 pi (Gauss-Legendre in cos theta)."""
    u, wu = np.polynomial.legendre.leggauss(n_theta)
    phi = np.arange(n_phi) * TWO_PI / n_phi
    s = np.sqrt(1 - u**2)
    X = np.stack(
        [s[:, None] * np.cos(phi)[None, :], s[:, None] * np.sin(phi)[None, :], np.broadcast_to(u[:, None], (n_theta, n_phi))],
        axis=-1,
    )
    vals = H.value(t, X)
    return float(np.sum(wu[:, None] * vals) / (2 * n_phi))


def torus_average(H, t: float, n_grid: int = 32) -> float:
    """Periodic rectangle-rule average of H_t over T^{2n} (exact for low wave numbers)."""
    d = H.manifold.dim
    g = np.arange(n_grid) / n_grid
    X = np.stack(np.meshgrid(*([g] * d), indexing="ij"), axis=-1)
    return float(np.mean(H.value(t, X)))
