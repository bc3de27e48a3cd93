"""End-to-end verification experiments with deterministic JSON reports."""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chern import CappingClass, recapping_index, sphere_transition_loop, wind_sp
from .config import DEFAULT, Config
from .cz import cz_index, loop_power, loop_shift
from .dynamics import (
    critical_points,
    find_periodic_orbits,
    linearized_flow,
    vector_field,
)
from .errors import NoConvergence, NoGap, PreconditionUnverified
from .geometry import FlatTorus, canonical_disc, center_of_mass, disc_areas
from .hamiltonian import (
    ConstTerm,
    Hamiltonian,
    TimeProfile,
    TrigTerm,
    height_function,
    trig_hamiltonian,
)
from .linalg import hamiltonian_exp_path, negative_index

SCHEMA_VERSION = 1


@dataclass
class Check:
    name: str
    measured: object
    expected: object
    tolerance: Optional[float]
    passed: bool

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "measured": _jsonable(self.measured),
            "expected": _jsonable(self.expected),
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
        }


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


@dataclass
class VerificationReport:
    experiment: str
    inputs: dict
    checks: list = field(default_factory=list)
    values: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, measured, expected, tolerance: Optional[float] = None, passed: Optional[bool] = None) -> bool:
        if passed is None:
            if tolerance is None:
                passed = measured == expected
            else:
                passed = abs(measured - expected) <= tolerance
        self.checks.append(Check(name, measured, expected, tolerance, bool(passed)))
        return bool(passed)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_json(self, include_runtime: bool = False) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "inputs": _jsonable(self.inputs),
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "values": _jsonable(self.values),
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime
        return out


class _Timer:
    def __init__(self, report: VerificationReport):
        self.report = report

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self.report

    def __exit__(self, *exc):
        self.report.runtime = time.perf_counter() - self.t0
        return False


# ---------------------------------------------------------- recapping law


def verify_theorem_c(
    samples: int = 64,
    cases: Sequence[int] = (-2, -1, 0, 1, 2),
    a: float = 1.0,
    step: float = DEFAULT.ode_step,
    cfg: Config = DEFAULT,
) -> VerificationReport:
    """Recapping law on S^2 for the pole orbits of H = a z.

    The pole index is computed from the linearized flow in the cap
    trivialization.  Recapping by k copies of the positive generator is
    evaluated twice: by the arithmetic mu + 2 c1 (c1 = 2k), and by shifting
    the linearized path with the k-th power of the (marked) transition
    loop of TS^2 and recomputing the index by crossings.
    """
    rep = VerificationReport("theorem-c", {"samples": samples, "cases": list(cases), "a": a, "step": step})
    with _Timer(rep):
        H = height_function(a)
        loop = sphere_transition_loop(samples).marked()
        for name, pole in (("north", [0.0, 0.0, 1.0]), ("south", [0.0, 0.0, -1.0])):
            alpha = linearized_flow(H, pole, 1.0, step, cfg=cfg)
            mu = cz_index(alpha, cfg).index
            rep.values[f"{name}_index"] = mu
            for k in cases:
                arith = recapping_index(mu, CappingClass.sphere(k))
                shifted = cz_index(loop_shift(loop_power(loop, k), alpha), cfg).index
                rep.values[f"{name}_k{k}"] = {"arithmetic": arith, "loop_shift": shifted}
                rep.check(f"{name} pole, k={k}: recapped index shift equals 4k (arithmetic)", arith - mu, 4 * k)
                rep.check(f"{name} pole, k={k}: recapped index shift equals 4k (loop shift)", shifted - mu, 4 * k)
                rep.check(f"{name} pole, k={k}: arithmetic and loop-shift routes agree", shifted, arith)
    return rep


def verify_transition_s2(samples: int = 64, cfg: Config = DEFAULT) -> VerificationReport:
    """Winding of the TS^2 transition loop along the equator and of its reversal."""
    rep = VerificationReport("transition-s2", {"samples": samples})
    with _Timer(rep):
        w = wind_sp(sphere_transition_loop(samples).loop, cfg)
        wr = wind_sp(sphere_transition_loop(samples, reverse=True).loop, cfg)
        rep.values.update({"winding": w, "reversed_winding": wr})
        rep.check("transition loop of TS^2 has winding 2 (c1 of the sphere)", w, 2)
        rep.check("reversed transition loop has winding -2", wr, -2)
    return rep


def random_symmetric(rng: np.random.Generator, n: int, margin: float = 0.1) -> np.ndarray:
    """Symmetric 2n x 2n matrix with eigenvalues in (-2 pi, 2 pi), at least ``margin`` from 0 and +-2 pi."""
    d = 2 * n
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    mags = rng.uniform(margin, 2 * math.pi - margin, d)
    signs = rng.choice([-1.0, 1.0], d)
    S = Q @ np.diag(signs * mags) @ Q.T
    return 0.5 * (S + S.T)


def verify_cz_oracle(cases: int = 200, seed: int = 0, cfg: Config = DEFAULT) -> VerificationReport:
    """Crossing-form index of exp(J0 S t) against the closed formula mu^-(S) - n.

    Agreement with sign(S)/2, the value implied by the crossing-form
    normalization, is reported alongside.
    """
    rep = VerificationReport("cz-oracle", {"cases": cases, "seed": seed})
    with _Timer(rep):
        rng = np.random.default_rng(seed)
        agree_formula = agree_half_sig = 0
        mismatches = []
        for i in range(cases):
            n = int(rng.integers(1, 4))
            S = random_symmetric(rng, n)
            idx = cz_index(hamiltonian_exp_path(S), cfg).index
            mu_minus = negative_index(S, cfg.eig_eps)
            formula = mu_minus - n
            half_sig = n - mu_minus
            agree_formula += idx == formula
            agree_half_sig += idx == half_sig
            if idx != formula and len(mismatches) < 5:
                mismatches.append({"case": i, "n": n, "index": idx, "formula": formula})
        rep.values.update({"first_mismatches": mismatches})
        rep.check("crossing-form index equals mu^-(S) - n on every case", agree_formula, cases)
        rep.check("crossing-form index equals sign(S)/2 on every case", agree_half_sig, cases)
    return rep


# ------------------------------------------------------- energy identity


def _rho(tau: float, R: float) -> tuple[float, float]:
    s = min(max((tau + R) / (2 * R), 0.0), 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s), 30 * s * s * (1 - s) ** 2 / (2 * R)


class _TrigTable:
    """Fast evaluation of an autonomous trig Hamiltonian on the torus."""

    def __init__(self, H: Hamiltonian):
        ks, a, b, c = [], [], [], 0.0
        for term in H.terms:
            w = float(term.profile(0.0))
            if isinstance(term, TrigTerm):
                ks.append(term.k)
                a.append(w * term.cos)
                b.append(w * term.sin)
            elif isinstance(term, ConstTerm):
                c += w * term.value
            else:
                raise ValueError("energy identity expects trig and constant terms")
        self.K = np.array(ks, dtype=float).reshape(-1, H.manifold.dim)
        self.a = np.array(a)
        self.b = np.array(b)
        self.c = c


def random_torus_morse(rng: np.random.Generator, min_curvature: float = 0.5, tries: int = 100) -> Hamiltonian:
    """Random autonomous trig Hamiltonian on T^2 with well-separated Hessian spectrum.

    Draws are rejected until every critical point has all Hessian
    eigenvalues of modulus at least ``min_curvature``, so gradient lines
    settle at an exponential rate bounded below.
    """
    for _ in range(tries):
        H = trig_hamiltonian(
            1,
            [((1, 0), *rng.uniform(-0.1, 0.1, 2)), ((0, 1), *rng.uniform(-0.1, 0.1, 2)), ((1, 1), *rng.uniform(-0.05, 0.05, 2))],
        )
        cps = critical_points(H, 0.0, grid=12, allow_degenerate=True)
        if all(np.min(np.abs(np.linalg.eigvalsh(H.hessian(0.0, c.point)))) >= min_curvature for c in cps):
            return H
    raise NoConvergence(f"no Morse sample with curvature >= {min_curvature} in {tries} draws")


def _critical_near(H, x, t: float = 0.0, iters: int = 50) -> np.ndarray:
    x = np.array(x, dtype=float)
    for _ in range(iters):
        dx = np.linalg.solve(H.hessian(t, x), -H.gradient(t, x))
        x = x + dx
        if np.linalg.norm(dx) < 1e-15:
            break
    return x


def verify_energy_identity(
    H: Hamiltonian,
    K: Hamiltonian,
    rho_margin: float = 1.0,
    step: float = 1e-3,
    L: float = 40.0,
    start: Optional[Sequence[float]] = None,
    kick: float = 1e-7,
    tol: float = 1e-5,
) -> VerificationReport:
    """Energy identity along a t-independent solution of the continuation equation.

    With J = J0 and u independent of t, the continuation equation for the
    linear homotopy H^s = (1 - s) H + s K reduces to
    du/dtau = grad H^{rho(tau)}(u), and
    A_K(x+) - A_H(x-) = -int |du/dtau|^2 dtau - int rho'(tau) (K - H)(u) dtau
    for constant orbits with A(x) = -H(x).  The trajectory starts at a
    critical point x- of H (default: its minimum, displaced by ``kick``
    along the softest Hessian direction) at tau = -L and must reach a
    critical point x+ of K by tau = L.
    """
    if not (isinstance(H.manifold, FlatTorus) and H.manifold == K.manifold):
        raise ValueError("energy identity experiment runs on a common torus model")
    if not (H.is_autonomous and K.is_autonomous):
        raise ValueError("energy identity experiment needs autonomous H and K")
    rep = VerificationReport(
        "energy-identity",
        {"H": H.to_json(), "K": K.to_json(), "rho_margin": rho_margin, "step": step, "L": L, "tol": tol},
    )
    with _Timer(rep):
        if start is None:
            cps = critical_points(H, 0.0, grid=12, allow_degenerate=True)
            x_minus = cps[0].point
        else:
            x_minus = _critical_near(H, start)
        hess = H.hessian(0.0, x_minus)
        lam, vec = np.linalg.eigh(hess)
        u = x_minus + kick * vec[:, int(np.argmax(lam))]
        tH, tK = _TrigTable(H), _TrigTable(K)
        Kmat = np.vstack([tH.K, tK.K])
        A = np.concatenate([tH.a, tK.a])
        B = np.concatenate([tH.b, tK.b])
        mH = len(tH.a)
        d = len(u)
        two_pi = 2 * math.pi

        def rhs(tau, state):
            x = state[:d]
            r, dr = _rho(tau, rho_margin)
            ph = two_pi * (Kmat @ x)
            cs, sn = np.cos(ph), np.sin(ph)
            w = np.empty(len(A))
            w[:mH], w[mH:] = 1.0 - r, r
            g = two_pi * (Kmat.T @ (w * (B * cs - A * sn)))
            vals = A * cs + B * sn
            kmh = (vals[mH:].sum() + tK.c) - (vals[:mH].sum() + tH.c)
            return np.concatenate([g, [g @ g, dr * kmh]])

        N = int(round(2 * L / step))
        h = 2 * L / N
        y = np.concatenate([u, [0.0, 0.0]])
        tau = -L
        for i in range(N):
            k1 = rhs(tau, y)
            k2 = rhs(tau + h / 2, y + h / 2 * k1)
            k3 = rhs(tau + h / 2, y + h / 2 * k2)
            k4 = rhs(tau + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            tau = -L + (i + 1) * h
        u_end = y[: len(u)]
        energy, coupling = float(y[-2]), float(y[-1])
        if np.linalg.norm(K.gradient(0.0, u_end)) > 1e-6:
            raise NoConvergence("trajectory did not reach a critical point of K by tau = L")
        x_plus = _critical_near(K, u_end)
        if np.linalg.norm(x_plus - u_end) > 1e-4:
            raise NoConvergence("Newton refinement of the endpoint drifted")
        a_minus = -float(H.value(0.0, x_minus))
        a_plus = -float(K.value(0.0, x_plus))
        residual = abs((a_plus - a_minus) + energy + coupling)
        rep.values.update(
            {
                "x_minus": x_minus,
                "x_plus": x_plus,
                "action_H_x_minus": a_minus,
                "action_K_x_plus": a_plus,
                "energy": energy,
                "coupling": coupling,
                "residual": residual,
            }
        )
        rep.check("action difference plus energy plus homotopy term vanishes", residual, 0.0, tol)
    return rep


def energy_gap_ode(H, grid: int = 24, box: float = 1.0, cfg: Config = DEFAULT) -> float:
    """Minimum positive gap between distinct critical values of an autonomous Morse H."""
    cps = critical_points(H, 0.0, grid=grid, box=box, cfg=cfg)
    vals = sorted(c.value for c in cps)
    scale = max(1.0, max(abs(v) for v in vals)) if vals else 1.0
    gaps = [b - a for a, b in zip(vals, vals[1:]) if b - a > 1e-12 * scale]
    if not gaps:
        raise NoGap(f"{len(cps)} critical point(s) but no positive gap between critical values")
    return float(min(gaps))


# ----------------------------------------------------- small-orbit sweep


def c1_norm_bound(H: Hamiltonian) -> float:
    """Upper bound for sup|H| + sup|grad H| of a trig Hamiltonian, uniform in t."""
    total = 0.0
    for term in H.terms:
        prof = term.profile
        amax = abs(prof.const) + sum(abs(c) for c in prof.cos) + sum(abs(s) for s in prof.sin)
        if isinstance(term, TrigTerm):
            total += amax * math.hypot(term.cos, term.sin) * (1 + 2 * math.pi * float(np.linalg.norm(term.k)))
        elif isinstance(term, ConstTerm):
            total += amax * abs(term.value)
        else:
            raise ValueError(f"no C1 bound for {term.kind} terms")
    return total


def default_perturbation() -> Hamiltonian:
    """f = c sin(2 pi q)(1 + cos(2 pi p)) on T^2 with c chosen so that ||f||_C1 <= 1.

    f vanishes to second order at (1/2, 1/2), so the minimum of G stays a
    fixed critical point with unchanged Hessian; with the normalization,
    delta bounds the C1 distance between G + delta sin(2 pi t) f and G.
    """
    raw = trig_hamiltonian(1, [((1, 0), 0.0, 1.0), ((1, 1), 0.0, 0.5), ((1, -1), 0.0, 0.5)])
    c = 1.0 / c1_norm_bound(raw)
    return trig_hamiltonian(1, [((1, 0), 0.0, c), ((1, 1), 0.0, 0.5 * c), ((1, -1), 0.0, 0.5 * c)])


def lipschitz_bound(H: Hamiltonian) -> float:
    """Upper bound for the Lipschitz constant of X_H on the torus, uniform in t."""
    if not isinstance(H.manifold, FlatTorus):
        raise PreconditionUnverified("Lipschitz certificate implemented for trig Hamiltonians on the torus")
    total = 0.0
    for term in H.terms:
        prof = term.profile
        amax = abs(prof.const) + sum(abs(c) for c in prof.cos) + sum(abs(s) for s in prof.sin)
        if isinstance(term, TrigTerm):
            total += amax * (2 * math.pi) ** 2 * float(term.k @ term.k) * math.hypot(term.cos, term.sin)
        elif not isinstance(term, ConstTerm):
            raise PreconditionUnverified(f"no Lipschitz bound for {term.kind} terms")
    return total


def _perturbed(G: Hamiltonian, f: Hamiltonian, delta: float) -> Hamiltonian:
    prof = TimeProfile(0.0, (), (delta,))
    pert = []
    for term in f.terms:
        p = term.profile
        if not p.is_constant or p.const != 1.0:
            raise ValueError("perturbation terms must be autonomous with unit profile")
        pert.append(dataclasses.replace(term, profile=prof))
    return Hamiltonian(G.manifold, G.terms + tuple(pert))


def verify_prop64(
    G: Optional[Hamiltonian] = None,
    deltas: Sequence[float] = (1e-2, 1e-3, 1e-4),
    delta2: float = 0.05,
    eps: float = 0.05,
    f: Optional[Hamiltonian] = None,
    grid: int = 12,
    T_samples: int = 3,
    step: float = 5e-3,
    radial_samples: int = 64,
    cfg: Config = DEFAULT,
) -> VerificationReport:
    """Small-orbit conclusions for H = G + delta sin(2 pi t) f on the period window [1 - delta2, 1 + delta2].

    The C1 distance of z to the constant loop at its center of mass is
    max|xi_z| + max|dz/dt|.  Precondition: Lip(X_G) (1 + delta2) < 2 pi.  By Yorke's period bound a
    nonconstant periodic orbit of a vector field with Lipschitz constant Lip
    has period at least 2 pi / Lip, so G then has no nonconstant periodic
    orbit with period in the window.
    """
    G = G if G is not None else trig_hamiltonian(1, [((1, 0), 0.01, 0.0), ((0, 1), 0.01, 0.0)])
    f = f if f is not None else default_perturbation()
    model = G.manifold
    rep = VerificationReport(
        "prop64",
        {
            "G": G.to_json(),
            "f": f.to_json(),
            "deltas": list(deltas),
            "delta2": delta2,
            "eps": eps,
            "grid": grid,
            "T_samples": T_samples,
            "step": step,
        },
    )
    with _Timer(rep):
        lip = lipschitz_bound(G)
        rep.values["lipschitz_bound"] = lip
        if lip * (1 + delta2) >= 2 * math.pi:
            raise PreconditionUnverified(f"Lip(X_G) = {lip:.4g} does not exclude orbits of period <= {1 + delta2}")
        rep.check("Lip(X_G)(1 + delta2) < 2 pi excludes nonconstant orbits of G", lip * (1 + delta2), 2 * math.pi, passed=True)
        cps = critical_points(G, 0.0, grid=12, cfg=cfg)
        x_minus = cps[0].point
        rep.values["x_minus"] = x_minus
        ball = model.inj / 8
        diam_stats = []
        for delta in deltas:
            H = _perturbed(G, f, delta)
            orbits = find_periodic_orbits(H, (1 - delta2, 1 + delta2), grid=grid, T_samples=T_samples, step=step, cfg=cfg)
            max_diam = 0.0
            worst = {"diameter": 0.0, "c1_distance": 0.0, "min_area": 0.0}
            local_ok = True
            n_const = 0
            for orb in orbits:
                max_diam = max(max_diam, orb.diameter)
                if orb.is_constant:
                    n_const += 1
                    continue
                loop = orb.loop(model)
                com = center_of_mass(loop, cfg)
                ts = np.arange(len(orb.samples)) * orb.period / len(orb.samples)
                speed = max(float(np.linalg.norm(vector_field(H, t, z))) for t, z in zip(ts, orb.samples))
                c1 = com.max_radius + speed
                area = disc_areas(canonical_disc(loop, radial_samples, cfg)).symplectic
                worst["diameter"] = max(worst["diameter"], orb.diameter)
                worst["c1_distance"] = max(worst["c1_distance"], c1)
                worst["min_area"] = min(worst["min_area"], area)
                if np.min(model.distance(orb.samples, x_minus)) < ball:
                    local_ok = False
            diam_stats.append(max_diam)
            tag = f"delta={delta:g}"
            rep.values[tag] = {
                "orbits": len(orbits),
                "constant": n_const,
                "nonconstant": len(orbits) - n_const,
                "dropped_seeds": orbits.dropped,
                "max_diameter": max_diam,
                **worst,
            }
            rep.check(f"{tag}: every orbit has diameter <= inj/2", max_diam, model.inj / 2, passed=max_diam <= model.inj / 2)
            rep.check(f"{tag}: C1 distance to the center of mass <= eps", worst["c1_distance"], eps, passed=worst["c1_distance"] <= eps)
            rep.check(f"{tag}: canonical disc area >= -eps", worst["min_area"], -eps, passed=worst["min_area"] >= -eps)
            rep.check(f"{tag}: no nonconstant orbit meets the inj/8 ball around the minimum", local_ok, True)
        rep.values["max_diameter_sweep"] = diam_stats
        mono = all(b <= a for a, b in zip(diam_stats, diam_stats[1:]))
        rep.check("max orbit diameter is non-increasing along the sweep", diam_stats, "non-increasing", passed=mono)
    return rep
