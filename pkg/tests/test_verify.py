import json
import math

import numpy as np
import pytest

from szkit.geometry import FlatTorus
from szkit.hamiltonian import Hamiltonian, trig_hamiltonian
from szkit.verify import (
    VerificationReport,
    c1_norm_bound,
    default_perturbation,
    energy_gap_ode,
    lipschitz_bound,
    verify_cz_oracle,
    verify_energy_identity,
    verify_theorem_c,
    verify_transition_s2,
)

G = trig_hamiltonian(1, [((1, 0), 0.01, 0.0), ((0, 1), 0.01, 0.0)])


def test_report_json_is_stable_and_excludes_runtime():
    rep = VerificationReport("demo", {"a": np.float64(1.5)})
    rep.check("exact", 3, 3)
    rep.check("close", 1.0 + 1e-9, 1.0, 1e-8)
    rep.check("forced", np.array([1, 2]), "anything", passed=False)
    rep.runtime = 12.3
    doc = rep.to_json()
    assert "runtime_seconds" not in doc
    assert json.dumps(doc, sort_keys=True) == json.dumps(rep.to_json(), sort_keys=True)
    assert rep.failures() == ["forced"] and not rep.passed
    assert rep.to_json(include_runtime=True)["runtime_seconds"] == 12.3


def test_recapping_shift_routes_agree():
    rep = verify_theorem_c(64)
    assert rep.passed, rep.failures()


def test_transition_winding_report():
    rep = verify_transition_s2(64)
    assert rep.passed
    assert rep.values["winding"] == 2


def test_cz_oracle_normalization():
    rep = verify_cz_oracle(40, seed=3)
    status = {c.name: c.passed for c in rep.checks}
    # the crossing-form index is half the signature of S ...
    assert any(passed for name, passed in status.items() if "sign(S)/2" in name)
    # ... which is n - mu^-(S), the negative of mu^-(S) - n
    assert not any(passed for name, passed in status.items() if "mu^-(S)-n" in name)


def test_energy_gap():
    assert energy_gap_ode(G) == pytest.approx(0.02, abs=1e-12)
    # critical values -2, 0, 0, 2
    assert energy_gap_ode(trig_hamiltonian(1, [((1, 0), 1.0, 0.0), ((0, 1), -1.0, 0.0)])) == pytest.approx(2.0, abs=1e-12)


def test_energy_identity_same_hamiltonian():
    H = trig_hamiltonian(1, [((1, 0), 0.1, 0.02), ((0, 1), 0.07, -0.03), ((1, 1), 0.02, 0.01)])
    rep = verify_energy_identity(H, H)
    assert rep.passed
    v = rep.values
    assert v["coupling"] == 0.0
    assert v["energy"] == pytest.approx(v["action_H_x_minus"] - v["action_K_x_plus"], abs=1e-6)


def test_perturbation_bounds():
    f = default_perturbation()
    assert c1_norm_bound(f) <= 1.0 + 1e-12
    g = np.linspace(0, 1, 65)[:-1]
    X = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    for t in (0.0, 0.3):
        assert np.max(np.abs(f.value(t, X))) + np.max(np.linalg.norm(f.gradient(t, X), axis=-1)) <= 1.0
    lip = lipschitz_bound(G)
    assert lip * 1.05 < 2 * math.pi
    # the Hessian norm of G never exceeds the bound
    assert max(np.linalg.norm(G.hessian(0.0, x), 2) for x in X[::37]) <= lip


def test_energy_identity_rejects_other_models():
    from szkit.hamiltonian import height_function

    with pytest.raises(ValueError):
        verify_energy_identity(height_function(), height_function())
    with pytest.raises(ValueError):
        verify_energy_identity(G, Hamiltonian(FlatTorus(2), ()))
