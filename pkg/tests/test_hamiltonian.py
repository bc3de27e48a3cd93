
import numpy as np
import pytest
from hypothesis import given, strategies as st

from szkit.geometry import EuclideanR2n, FlatTorus, RoundSphere
from szkit.hamiltonian import (
    AmbientTerm,
    ConstTerm,
    GaussianTerm,
    Hamiltonian,
    LinearTerm,
    QuadraticTerm,
    TimeProfile,
    TimeReparameterized,
    TrigTerm,
    harmonic_oscillator,
    height_function,
    sphere_average,
    torus_average,
    trig_hamiltonian,
)


def random_torus_ham(rng, n=1):
    waves = []
    for _ in range(3):
        k = rng.integers(-2, 3, 2 * n)
        waves.append((k, *rng.normal(size=2)))
    prof = TimeProfile(rng.normal(), (rng.normal(),), (rng.normal(),))
    return trig_hamiltonian(n, waves, prof) + Hamiltonian(FlatTorus(n), (ConstTerm(rng.normal(), profile=TimeProfile(0.0, (1.0,))),))


def random_sphere_ham(rng):
    A = rng.normal(size=(3, 3))
    return Hamiltonian(RoundSphere(), (AmbientTerm(rng.normal(size=3), A + A.T, profile=TimeProfile(1.0, (), (0.5,))),))


def random_r2n_ham(rng, n=1):
    A = rng.normal(size=(2 * n, 2 * n))
    return Hamiltonian(
        EuclideanR2n(n),
        (
            QuadraticTerm(A + A.T),
            LinearTerm(rng.normal(size=2 * n), profile=TimeProfile(0.0, (1.0,))),
            GaussianTerm(rng.normal(size=2 * n), 0.7, 0.8),
            TrigTerm(rng.integers(-1, 2, 2 * n), 0.2, 0.1),
        ),
    )


BUILDERS = {"torus": random_torus_ham, "sphere": random_sphere_ham, "r2n": random_r2n_ham}


def random_point(rng, model):
    x = rng.normal(size=model.dim)
    return x / np.linalg.norm(x) if isinstance(model, RoundSphere) else x


@pytest.mark.parametrize("kind", sorted(BUILDERS))
@given(seed=st.integers(0, 10_000), t=st.floats(0, 1))
def test_gradient_and_hessian_match_finite_differences(kind, seed, t):
    rng = np.random.default_rng(seed)
    H = BUILDERS[kind](rng)
    x = random_point(rng, H.manifold)
    h = 1e-6
    eye = np.eye(H.manifold.dim)
    fd = np.array([(H.value(t, x + h * e) - H.value(t, x - h * e)) / (2 * h) for e in eye])
    assert np.allclose(H.gradient(t, x), fd, atol=1e-6 * (1 + np.abs(fd).max()))
    fd2 = np.array([(H.gradient(t, x + h * e) - H.gradient(t, x - h * e)) / (2 * h) for e in eye])
    assert np.allclose(H.hessian(t, x), fd2, atol=1e-5 * (1 + np.abs(fd2).max()))


@given(seed=st.integers(0, 10_000), t=st.floats(0, 1))
def test_torus_normalization(seed, t):
    H = random_torus_ham(np.random.default_rng(seed)).normalize()
    assert H.mean_value(t) == pytest.approx(0.0, abs=1e-12)
    assert torus_average(H, t) == pytest.approx(0.0, abs=1e-12)


@given(seed=st.integers(0, 10_000), t=st.floats(0, 1))
def test_sphere_normalization(seed, t):
    H = random_sphere_ham(np.random.default_rng(seed))
    assert H.mean_value(t) == pytest.approx(sphere_average(H, t), abs=1e-12)
    assert sphere_average(H.normalize(), t) == pytest.approx(0.0, abs=1e-12)


def test_r2n_is_not_normalized():
    H = harmonic_oscillator(1.0)
    assert H.normalize() is H
    with pytest.raises(ValueError):
        H.mean_value(0.0)


@given(seed=st.integers(0, 10_000))
def test_json_roundtrip_and_idempotent_normalization(seed):
    rng = np.random.default_rng(seed)
    for H in (random_torus_ham(rng), random_sphere_ham(rng), random_r2n_ham(rng)):
        G = Hamiltonian.from_json(H.to_json())
        x = random_point(rng, H.manifold)
        assert G.value(0.3, x) == pytest.approx(H.value(0.3, x), abs=1e-14)
    N = random_torus_ham(rng).normalize()
    again = Hamiltonian.from_json(N.to_json())
    assert len(again.terms) == len(N.terms)
    raw = random_torus_ham(rng).to_json()
    raw["normalized"] = True
    assert Hamiltonian.from_json(raw).mean_value(0.1) == pytest.approx(0.0, abs=1e-12)


def test_file_roundtrip(tmp_path):
    H = height_function(2.0)
    H.dump(tmp_path / "h.json")
    G = Hamiltonian.load(tmp_path / "h.json")
    assert G.value(0.0, np.array([0.0, 0.0, 1.0])) == 2.0


@given(t=st.floats(0, 1), c=st.lists(st.floats(-2, 2), max_size=3), s=st.lists(st.floats(-2, 2), max_size=3))
def test_time_profile_derivative(t, c, s):
    p = TimeProfile(0.3, tuple(c), tuple(s))
    h = 1e-6
    assert p.derivative(t) == pytest.approx((p(t + h) - p(t - h)) / (2 * h), abs=1e-6)
    assert TimeProfile.from_json(p.to_json()) == p


def test_term_placement_is_checked():
    with pytest.raises(ValueError):
        Hamiltonian(FlatTorus(1), (QuadraticTerm(np.eye(2)),))
    with pytest.raises(ValueError):
        Hamiltonian(RoundSphere(), (TrigTerm(np.array([1, 0, 0]), 1.0),))
    with pytest.raises(ValueError):
        TrigTerm(np.array([0.5, 0.0]), 1.0)
    with pytest.raises(ValueError):
        QuadraticTerm(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        height_function() + harmonic_oscillator(1.0)


def test_scaling_and_sum():
    H = height_function(1.0)
    x = np.array([0.6, 0.0, 0.8])
    assert H.scaled(3.0).value(0.2, x) == pytest.approx(2.4)
    assert (H + H).value(0.2, x) == pytest.approx(1.6)


def test_time_reparameterization():
    H = trig_hamiltonian(1, [((1, 0), 1.0, 0.0)], TimeProfile(0.0, (1.0,)))
    R = TimeReparameterized(H, lambda t: t * t, lambda t: 2 * t)
    x = np.array([0.1, 0.2])
    assert R.value(0.5, x) == pytest.approx(1.0 * H.value(0.25, x))
    assert not R.is_autonomous
