import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from szkit.errors import DiameterExceedsInjectivity, OutsideInjectivity, ResolutionTooCoarse
from szkit.geometry import (
    EuclideanR2n,
    FlatTorus,
    Loop,
    RoundSphere,
    canonical_disc,
    center_of_mass,
    disc_areas,
    empirical_area_constant,
    model_from_json,
)

SPHERE = RoundSphere()


def fourier_curve(rng, K, d, radius, modes=3):
    t = np.arange(K) / K
    c = rng.normal(size=(modes, 2, d)) / (1 + np.arange(modes))[:, None, None] ** 2
    curve = sum(c[m, 0] * np.cos(2 * math.pi * (m + 1) * t)[:, None] + c[m, 1] * np.sin(2 * math.pi * (m + 1) * t)[:, None] for m in range(modes))
    return radius * curve / np.max(np.linalg.norm(curve, axis=1))


def random_loop(rng, model, K=128, radius=0.1):
    if isinstance(model, RoundSphere):
        base = rng.normal(size=3)
        base /= np.linalg.norm(base)
        F = SPHERE.reference_frame(base)
        v = fourier_curve(rng, K, 2, radius) @ F.T
        return Loop(model, SPHERE.exp(base, v))
    base = rng.uniform(0, 1, model.dim)
    pts = base + fourier_curve(rng, K, model.dim, radius)
    return Loop(model, pts)


def latitude_circle(theta, K=256):
    t = np.arange(K) / K
    return np.stack([math.sin(theta) * np.cos(2 * math.pi * t), math.sin(theta) * np.sin(2 * math.pi * t), np.full(K, math.cos(theta))], 1)


# cap area 2 pi (1 - cos theta), theta = 0.3 (frozen closed form)
CAP_AREA_03 = 0.2806291152930482


def test_cap_constant():
    assert CAP_AREA_03 == pytest.approx(2 * math.pi * (1 - math.cos(0.3)), abs=1e-15)


def test_planar_circle_areas():
    K, r = 200, 0.3
    t = np.arange(K) / K
    loop = Loop(EuclideanR2n(1), np.stack([r * np.cos(2 * math.pi * t), r * np.sin(2 * math.pi * t)], 1))
    a = disc_areas(canonical_disc(loop, 200))
    assert a.symplectic == pytest.approx(math.pi * r * r, abs=1e-10)
    assert a.riemannian == pytest.approx(math.pi * r * r, abs=1e-10)
    s, g = a
    assert (s, g) == (a.symplectic, a.riemannian)


def test_clockwise_circle_has_negative_area():
    K, r = 128, 0.2
    t = -np.arange(K) / K
    loop = Loop(EuclideanR2n(1), np.stack([r * np.cos(2 * math.pi * t), r * np.sin(2 * math.pi * t)], 1))
    a = disc_areas(canonical_disc(loop, 64))
    assert a.symplectic == pytest.approx(-math.pi * r * r, abs=1e-10)
    assert a.riemannian == pytest.approx(math.pi * r * r, abs=1e-10)


def test_spherical_cap():
    loop = Loop(SPHERE, latitude_circle(0.3))
    disc = canonical_disc(loop, 64)
    assert np.allclose(disc.center.point, [0, 0, 1], atol=1e-12)
    a = disc_areas(disc)
    assert a.symplectic == pytest.approx(CAP_AREA_03, abs=1e-5)
    assert a.riemannian == pytest.approx(CAP_AREA_03, abs=1e-5)


def test_torus_loop_across_the_seam():
    K, r = 128, 0.1
    t = np.arange(K) / K
    pts = np.stack([0.98 + r * np.cos(2 * math.pi * t), 0.01 + r * np.sin(2 * math.pi * t)], 1)
    a = disc_areas(canonical_disc(Loop(FlatTorus(1), FlatTorus(1).wrap(pts)), 64))
    assert a.symplectic == pytest.approx(math.pi * r * r, abs=1e-10)


@pytest.mark.parametrize("model", [EuclideanR2n(1), EuclideanR2n(2), FlatTorus(1), SPHERE])
@given(seed=st.integers(0, 10_000), radius=st.floats(0.01, 0.2))
def test_disc_area_inequality(model, seed, radius):
    rng = np.random.default_rng(seed)
    disc = canonical_disc(random_loop(rng, model, radius=radius), 64)
    a = disc_areas(disc)
    assert abs(a.symplectic) <= a.riemannian + 10 * a.error
    assert empirical_area_constant(disc) >= 0.0


@pytest.mark.parametrize("model", [EuclideanR2n(1), FlatTorus(1), SPHERE])
@given(seed=st.integers(0, 10_000), shift=st.integers(1, 127))
def test_reparameterization_invariance(model, seed, shift):
    rng = np.random.default_rng(seed)
    z = random_loop(rng, model)
    c1, c2 = center_of_mass(z), center_of_mass(z.rotated(shift))
    assert model.distance(c1.point, c2.point) < 1e-8
    a1, a2 = disc_areas(canonical_disc(z, 32)), disc_areas(canonical_disc(z.rotated(shift), 32))
    assert a1.symplectic == pytest.approx(a2.symplectic, abs=1e-10)


@given(seed=st.integers(0, 10_000))
def test_center_of_mass_rotation_equivariance(seed):
    rng = np.random.default_rng(seed)
    z = random_loop(rng, SPHERE, radius=0.3)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    Q *= np.sign(np.linalg.det(Q))
    c = center_of_mass(z).point
    cr = center_of_mass(Loop(SPHERE, z.points @ Q.T)).point
    assert np.allclose(cr, Q @ c, atol=1e-8)


@given(seed=st.integers(0, 10_000))
def test_center_of_mass_translation_equivariance(seed):
    rng = np.random.default_rng(seed)
    T = FlatTorus(1)
    z = random_loop(rng, T, radius=0.15)
    v = rng.uniform(-1, 1, 2)
    c = center_of_mass(z).point
    cv = center_of_mass(Loop(T, T.wrap(z.points + v))).point
    assert T.distance(cv, c + v) < 1e-8


@given(seed=st.integers(0, 10_000))
def test_center_of_mass_is_karcher_critical(seed):
    rng = np.random.default_rng(seed)
    z = random_loop(rng, SPHERE, radius=0.5)
    com = center_of_mass(z)
    assert np.linalg.norm(com.lift.mean(axis=0)) < 1e-9
    assert np.allclose(SPHERE.exp(com.point, com.lift), z.points, atol=1e-9)


@given(seed=st.integers(0, 10_000))
def test_sphere_exp_log_inverse(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=3)
    x /= np.linalg.norm(x)
    v = SPHERE.tangent_projection(x, rng.normal(size=3))
    v *= rng.uniform(0, 3.0) / np.linalg.norm(v)
    y = SPHERE.exp(x, v)
    assert np.linalg.norm(y) == pytest.approx(1.0)
    assert np.allclose(SPHERE.log(x, y), v, atol=1e-8)
    assert SPHERE.distance(x, y) == pytest.approx(np.linalg.norm(v), abs=1e-10)


def test_sphere_log_antipode():
    with pytest.raises(OutsideInjectivity):
        SPHERE.log(np.array([0, 0, 1.0]), np.array([0, 0, -1.0]))
    assert SPHERE.distance(np.array([0, 0, 1.0]), np.array([0, 0, -1.0])) == pytest.approx(math.pi)


def test_torus_log_shortest_representative():
    T = FlatTorus(1)
    assert np.allclose(T.log(np.array([0.95, 0.5]), np.array([0.05, 0.5])), [0.1, 0.0])
    with pytest.raises(OutsideInjectivity):
        T.log(np.array([0.0, 0.0]), np.array([0.5, 0.5]))
    assert np.all(T.wrap(np.array([1.0, -1e-20])) < 1.0)


def test_sphere_structure_is_compatible():
    x = np.array([0.0, 0.0, 1.0])
    u = np.array([1.0, 0.0, 0.0])
    assert SPHERE.omega(x, u, SPHERE.J(x, u)) == pytest.approx(1.0)
    F = SPHERE.reference_frame(np.array([1.0, 0.0, 0.0]))
    assert np.allclose(F.T @ F, np.eye(2))


def test_loop_errors():
    with pytest.raises(ResolutionTooCoarse):
        Loop(FlatTorus(1), np.array([[0.0, 0.0], [0.2, 0.0]]))
    t = np.arange(64) / 64
    big = np.stack([0.45 * np.cos(2 * math.pi * t), 0.45 * np.sin(2 * math.pi * t)], 1)
    with pytest.raises(DiameterExceedsInjectivity):
        canonical_disc(Loop(FlatTorus(1), FlatTorus(1).wrap(big)), 16)


def test_loop_json_roundtrip():
    z = Loop(SPHERE, latitude_circle(0.4, 32))
    w = Loop.from_json(z.to_json())
    assert np.allclose(w.points, z.points)
    assert model_from_json({"manifold": "torus2n", "n": 2}) == FlatTorus(2)
    with pytest.raises(ValueError):
        model_from_json({"manifold": "klein"})
