import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("szkit", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("szkit")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_symmetric(rng, n, lo=0.1, hi=2 * np.pi - 0.1):
    """Symmetric 2n x 2n matrix with |eigenvalues| in [lo, hi]."""
    Q, _ = np.linalg.qr(rng.normal(size=(2 * n, 2 * n)))
    lam = rng.uniform(lo, hi, 2 * n) * rng.choice([-1.0, 1.0], 2 * n)
    return Q @ np.diag(lam) @ Q.T


def winding_loop(rng, n, k, samples=200):
    """Symplectic loop with Maslov winding k: conjugated diagonal unitary loop."""
    from szkit.chern import unitary_loop_to_symplectic
    from szkit.linalg import UnitaryLoop

    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    V, _ = np.linalg.qr(Z)
    ks = np.zeros(n, dtype=int)
    ks[0] = k
    if n > 1:
        s = int(rng.integers(-1, 2))
        ks[0], ks[1] = k - s, s

    def U(t):
        return V @ np.diag(np.exp(2j * np.pi * ks * t)) @ V.conj().T

    return unitary_loop_to_symplectic(UnitaryLoop.from_function(U, samples))


ACCEPTANCE: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, summary: str) -> None:
    """Print and remember the one-line verdict of an acceptance criterion."""
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {summary}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
