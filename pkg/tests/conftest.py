import numpy as np
import pytest

from risklqr import CostSpec, FiniteDiscrete, Gaussian, GaussianMixture, SystemModel
from risklqr.experiments import bernoulli_shock, double_integrator_setup, scalar_shock_plant

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def shock():
    model, cost = scalar_shock_plant(N=10)
    return model, cost, bernoulli_shock(4.0)


@pytest.fixture
def wind():
    return double_integrator_setup(N=50, x0=[1.0, 0.0, -1.0, 0.0])


def random_psd(rng, n, rank=None, floor=0.0):
    G = rng.standard_normal((n, rank or n))
    return G @ G.T + floor * np.eye(n)


def random_noise(rng, n):
    kind = rng.integers(3)
    if kind == 0:
        return Gaussian(rng.standard_normal(n), random_psd(rng, n) * 0.3)
    if kind == 1:
        w = rng.dirichlet(np.ones(3))
        return GaussianMixture(w, [Gaussian(rng.standard_normal(n) * 2, random_psd(rng, n) * 0.2)
                                   for _ in range(3)])
    m = rng.integers(2, 6)
    return FiniteDiscrete(rng.standard_normal((m, n)) * 1.5, rng.dirichlet(np.ones(m)))


def random_problem(rng, n=None, N=None):
    """Random stabilizable plant with PD costs and a random noise descriptor."""
    n = n or int(rng.integers(1, 5))
    p = int(rng.integers(1, n + 1))
    A = rng.standard_normal((n, n))
    A *= rng.uniform(0.5, 1.3) / max(1e-9, np.max(np.abs(np.linalg.eigvals(A))))
    B = rng.standard_normal((n, p))
    model = SystemModel(A, B, rng.standard_normal(n), N or int(rng.integers(1, 51)))
    Qc = random_psd(rng, n) if rng.random() < 0.5 else None
    cost = CostSpec(random_psd(rng, n, floor=0.1), random_psd(rng, p, floor=0.5), Qc)
    return model, cost, random_noise(rng, n)
