import numpy as np
import pytest

from lamfem.materials import J2Plastic, LinearElastic, NeoHookean

# acceptance lines collected by test_acceptance.py and printed in the summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key, ok, detail in sorted(ACCEPTANCE, key=lambda r: int(r[0][2:])):
        terminalreporter.write_line(f"{key:<5} {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


@pytest.fixture
def neo():
    return NeoHookean(mu=1.0, lam=1.5)


@pytest.fixture
def stiff_neo():
    return NeoHookean(mu=10.0, lam=15.0)


@pytest.fixture
def j2():
    return J2Plastic(mu=26.3, lam=51.1, sigma0=0.1, H=0.5)


@pytest.fixture
def soft_elastic():
    return LinearElastic(1.0, 0.3)


@pytest.fixture
def stiff_elastic():
    return LinearElastic(10.0, 0.2)


def random_F(rng, n, scale=0.1):
    """Deformation gradients near identity with positive determinant."""
    return np.eye(3) + scale * rng.uniform(-1.0, 1.0, size=(n, 3, 3))


def random_unit(rng, n, planar=False):
    v = rng.normal(size=(n, 3))
    if planar:
        v[:, 2] = 0.0
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def central_difference(func, x, step):
    """Jacobian ``d func / d x`` (flattened output by flattened input)."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(func(x))
    J = np.empty((f0.size, x.size))
    for k in range(x.size):
        d = np.zeros(x.size)
        d[k] = step
        d = d.reshape(x.shape)
        J[:, k] = (np.ravel(func(x + d)) - np.ravel(func(x - d))) / (2.0 * step)
    return J
