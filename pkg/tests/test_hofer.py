import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq, minimize

from szkit.dynamics import constant_orbit, flow_map
from szkit.errors import InvalidMargin, Unbounded
from szkit.geometry import EuclideanR2n, FlatTorus, Loop
from szkit.hamiltonian import GaussianTerm, Hamiltonian, TimeProfile, harmonic_oscillator, height_function, trig_hamiltonian
from szkit.hofer import (
    BoundaryFlatProfile,
    CappedLoop,
    action_value,
    compose_ham,
    gamma_equivalent,
    hofer_distance,
    hofer_norms,
    inverse_ham,
    reparam_boundary_flat,
)

TWO_PI = 2 * math.pi


def abs_integral(prof: TimeProfile) -> float:
    """Exact int_0^1 |a(t)| dt: roots by bracketing, then the antiderivative piecewise."""

    def A(t):
        out = prof.const * t
        for k, c in enumerate(prof.cos, start=1):
            out += c * math.sin(TWO_PI * k * t) / (TWO_PI * k)
        for k, s in enumerate(prof.sin, start=1):
            out -= s * (math.cos(TWO_PI * k * t) - 1) / (TWO_PI * k)
        return out

    ts = np.linspace(0, 1, 4001)
    v = prof(ts)
    cuts = [0.0]
    for i in range(len(ts) - 1):
        if v[i] == 0.0:
            cuts.append(ts[i])
        elif v[i] * v[i + 1] < 0:
            cuts.append(brentq(prof, ts[i], ts[i + 1], xtol=1e-15))
    cuts.append(1.0)
    return sum(abs(A(b) - A(a)) for a, b in zip(cuts, cuts[1:]))


def torus_osc(H):
    """max - min of an autonomous torus Hamiltonian: dense grid plus local polish."""
    g = np.linspace(0, 1, 257)[:-1]
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    v = H.value(0.0, X)
    f = lambda x: float(H.value(0.0, x))
    lo = minimize(f, X[np.argmin(v)], method="BFGS", options={"gtol": 1e-12}).fun
    hi = -minimize(lambda x: -f(x), X[np.argmax(v)], method="BFGS", options={"gtol": 1e-12}).fun
    return hi - lo


def test_abs_integral_oracle():
    assert abs_integral(TimeProfile(0.0, (1.0,))) == pytest.approx(2 / math.pi, abs=1e-14)
    assert abs_integral(TimeProfile(2.0, (1.0,))) == pytest.approx(2.0, abs=1e-14)


def test_constant_profile_norms():
    H = trig_hamiltonian(1, [((1, 0), 1.0, 0.0), ((0, 1), 1.0, 0.0)])
    d = hofer_norms(H)
    assert (d.E_minus, d.E_plus, d.norm) == pytest.approx((2.0, 2.0, 4.0), abs=1e-12)


@settings(max_examples=10)
@given(seed=st.integers(0, 10_000))
def test_product_norm_oracle(seed):
    rng = np.random.default_rng(seed)
    prof = TimeProfile(rng.uniform(-1, 1), tuple(rng.uniform(-1, 1, 2)), tuple(rng.uniform(-1, 1, 1)))
    waves = [((1, 0), *rng.uniform(-1, 1, 2)), ((1, 1), *rng.uniform(-1, 1, 2))]
    f = trig_hamiltonian(1, waves)
    H = trig_hamiltonian(1, waves, prof)
    assert hofer_norms(H).norm == pytest.approx(torus_osc(f) * abs_integral(prof), abs=1e-8)


def test_sphere_and_gaussian_norms():
    prof = TimeProfile(0.0, (1.0,))
    H = Hamiltonian(height_function().manifold, tuple(t.__class__(linear=t.linear, quadratic=t.quadratic, profile=prof) for t in height_function().terms))
    assert hofer_norms(H).norm == pytest.approx(2 * 2 / math.pi, abs=1e-9)
    g = Hamiltonian(EuclideanR2n(1), (GaussianTerm(np.array([0.3, -0.2]), 1.5, 0.4),))
    d = hofer_norms(g)
    # max 1.5 at the center, infimum 0 at infinity
    assert (d.E_minus, d.E_plus) == pytest.approx((0.0, 1.5), abs=1e-12)


def test_unbounded_on_r2n():
    with pytest.raises(Unbounded):
        hofer_norms(harmonic_oscillator(1.0))


def test_inverse_generates_the_inverse_flow():
    H = trig_hamiltonian(1, [((1, 0), 0.3, 0.1), ((1, 1), 0.2, 0.0)], TimeProfile(1.0, (0.5,)))
    # the pullback integrates phi_H^t afresh at each evaluation, so both flows use h = 1e-2 (RK4 error ~1e-5)
    Hbar = inverse_ham(H, step=1e-2)
    x = np.array([0.2, 0.7])
    y = flow_map(H, x, 0.0, 1.0, 1e-3)
    back = flow_map(Hbar, y, 0.0, 1.0, 1e-2)
    assert np.allclose(back, x, atol=1e-4)


def test_inverse_swaps_semi_norms():
    G = trig_hamiltonian(1, [((1, 0), 0.01, 0.0), ((0, 1), 0.02, 0.01)], TimeProfile(1.0, (0.3,), (0.2,)))
    a, b = hofer_norms(G, grid=32), hofer_norms(inverse_ham(G), grid=32)
    assert a.E_plus == pytest.approx(b.E_minus, abs=1e-6)
    assert a.E_minus == pytest.approx(b.E_plus, abs=1e-6)


def test_distance_axioms():
    F = trig_hamiltonian(1, [((1, 0), 0.02, 0.0)], TimeProfile(1.0, (0.5,)))
    G = trig_hamiltonian(1, [((0, 1), 0.01, 0.01)], TimeProfile(0.5, (), (1.0,)))
    K = trig_hamiltonian(1, [((1, 1), 0.015, 0.0)])
    zero = Hamiltonian(FlatTorus(1), ())
    dFG, dGF = hofer_distance(F, G, grid=24), hofer_distance(G, F, grid=24)
    assert hofer_distance(G, G, grid=24) == pytest.approx(0.0, abs=1e-12)
    assert dFG == pytest.approx(dGF, abs=1e-6)
    assert hofer_distance(zero, G, grid=24) == pytest.approx(hofer_norms(G, grid=24).norm, abs=1e-9)
    assert dFG <= hofer_distance(F, K, grid=24) + hofer_distance(K, G, grid=24) + 1e-6


def test_composition_generates_the_relative_flow():
    F = trig_hamiltonian(1, [((1, 0), 0.3, 0.0)], TimeProfile(1.0, (0.5,)))
    G = trig_hamiltonian(1, [((0, 1), 0.2, 0.1)])
    x = np.array([0.3, 0.4])
    K = compose_ham(F, G, step=1e-2)
    # phi_K^1 = phi_F^{-1} o phi_G^1, so phi_F^1(phi_K^1(x)) = phi_G^1(x)
    y = flow_map(F, flow_map(K, x, 0.0, 1.0, 1e-2), 0.0, 1.0, 1e-3)
    assert np.allclose(y, flow_map(G, x, 0.0, 1.0, 1e-3), atol=1e-4)


@given(margin=st.floats(0.01, 0.24), t=st.floats(0, 1))
def test_boundary_flat_profile(margin, t):
    p = BoundaryFlatProfile(margin)
    assert p.zeta(0.0) == 0.0
    assert p.zeta(1.0) == pytest.approx(1.0, abs=1e-14)
    assert p.dzeta(min(t, margin)) == pytest.approx(0.0, abs=1e-12)
    assert p.dzeta(1 - min(t, margin)) == pytest.approx(0.0, abs=1e-12)
    h = 1e-7
    if h < t < 1 - h:
        assert (p.zeta(t + h) - p.zeta(t - h)) / (2 * h) == pytest.approx(p.dzeta(t), abs=1e-5)


def test_reparameterization_preserves_the_time_one_map():
    H = trig_hamiltonian(1, [((1, 0), 0.3, 0.0), ((1, 1), 0.1, 0.2)], TimeProfile(1.0, (0.5,)))
    R = reparam_boundary_flat(H, 0.1)
    x = np.array([0.1, 0.8])
    assert np.allclose(flow_map(R, x, 0.0, 1.0, 5e-4), flow_map(H, x, 0.0, 1.0, 5e-4), atol=1e-9)
    assert hofer_norms(R, grid=32).norm == pytest.approx(hofer_norms(H, grid=32).norm, abs=1e-7)
    for bad in (0.0, 0.25, -0.1):
        with pytest.raises(InvalidMargin):
            reparam_boundary_flat(H, bad)


def test_action_of_constant_and_circle_loops():
    H = height_function(2.0)
    north = constant_orbit(H, np.array([0.0, 0.0, 1.0]))
    assert action_value(H, CappedLoop(north, 0, H.manifold)) == pytest.approx(-2.0, abs=1e-12)
    assert action_value(H, CappedLoop(north, 1, H.manifold)) == pytest.approx(-2.0 - 4 * math.pi, abs=1e-12)
    # a circle of radius r with H = 0 has action -pi r^2
    t = np.arange(128) / 128
    loop = Loop(EuclideanR2n(1), np.stack([0.5 * np.cos(TWO_PI * t), 0.5 * np.sin(TWO_PI * t)], 1))
    zero = Hamiltonian(EuclideanR2n(1), ())
    assert action_value(zero, CappedLoop(loop)) == pytest.approx(-math.pi / 4, abs=1e-10)
    with pytest.raises(ValueError):
        CappedLoop(loop, 1)


def test_gamma_equivalence():
    assert gamma_equivalent(0, 0.0)
    assert not gamma_equivalent(2, 4 * math.pi)
    assert not gamma_equivalent(0, 1.0)
