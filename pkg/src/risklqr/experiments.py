"""Reference plants: the scalar shock example and the planar double integrator."""

from __future__ import annotations

import numpy as np

from .model import CostSpec, FiniteDiscrete, Gaussian, GaussianMixture, LinearMap, SystemModel


def bernoulli_shock(beta: float = 4.0) -> FiniteDiscrete:
    """Scalar shock noise: ``beta`` with probability ``1/beta``, else 0."""
    return FiniteDiscrete(atoms=[[beta], [0.0]], probs=[1.0 / beta, 1.0 - 1.0 / beta])


def scalar_shock_plant(N=None, R: float = 1e-8, x0: float = 0.0):
    """``x+ = x + u + w`` with unit state penalty and a vanishing input penalty."""
    model = SystemModel(A=[[1.0]], B=[[1.0]], x0=[x0], N=N)
    cost = CostSpec(Q=[[1.0]], R=[[R]])
    return model, cost


def double_integrator(Ts: float = 0.5):
    A = np.array([[1, Ts, 0, 0],
                  [0, 1, 0, 0],
                  [0, 0, 1, Ts],
                  [0, 0, 0, 1]], dtype=float)
    B = np.array([[Ts ** 2 / 2, 0],
                  [Ts, 0],
                  [0, Ts ** 2 / 2],
                  [0, Ts]], dtype=float)
    return A, B


def wind_disturbance(second_param: str = "variance") -> GaussianMixture:
    """Two-axis wind force.

    The dominant axis is a 0.8/0.2 mixture of ``N(30, 30)`` and ``N(80, 60)``;
    the weak axis is ``N(0, 5)``, independent of it. ``second_param`` says how
    the second argument of each ``N(., .)`` is read: ``"variance"`` or ``"std"``.
    """
    if second_param == "variance":
        sq = lambda v: v  # noqa: E731
    elif second_param == "std":
        sq = lambda v: v * v  # noqa: E731
    else:
        raise ValueError(f"second_param must be 'variance' or 'std', got {second_param!r}")
    return GaussianMixture(
        weights=[0.8, 0.2],
        components=[Gaussian([30.0, 0.0], np.diag([sq(30.0), sq(5.0)])),
                    Gaussian([80.0, 0.0], np.diag([sq(60.0), sq(5.0)]))])


def double_integrator_setup(N=None, second_param: str = "variance", x0=None, Ts: float = 0.5):
    """Plant, cost and process noise ``w = B (d - E d)`` of the wind experiment."""
    A, B = double_integrator(Ts)
    model = SystemModel(A, B, np.zeros(4) if x0 is None else x0, N)
    cost = CostSpec(Q=np.diag([1.0, 0.1, 2.0, 0.1]), R=np.eye(2))
    noise = LinearMap(B, wind_disturbance(second_param), center=True)
    return model, cost, noise
