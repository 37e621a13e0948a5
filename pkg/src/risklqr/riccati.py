"""Risk-aware Riccati recursions for a fixed multiplier ``mu``.

For ``mu >= 0`` the Lagrangian of the risk-constrained problem is a
generalized LQR with inflated state penalty ``Q + 4 mu Qc W Qc`` and a linear
state term ``4 mu M3' Qc x``. Its minimizer is the affine law
``u_t = K_t x_t + l_t + h_t`` and its cost-to-go is
``x' V_t x + 4 mu M3' S_t' x + 2 wbar' T_t' x + c_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ConvergenceError, DimensionError, InvalidInput, NumericalError
from .model import CostSpec, SystemModel, spectral_radius, symmetrize
from .moments import NoiseStats


@dataclass
class AffinePolicy:
    """Stage-stacked affine policy and value-function terms.

    ``K`` is ``(N, p, n)``, ``l`` and ``h`` are ``(N, p)``; ``V``, ``S``,
    ``T`` are ``(N+1, n, n)`` and ``c`` is ``(N+1,)``, index ``t`` being the
    stage.
    """

    K: np.ndarray
    l: np.ndarray
    h: np.ndarray
    V: np.ndarray
    S: np.ndarray
    T: np.ndarray
    c: np.ndarray
    mu: float
    steady: bool = False

    @property
    def N(self) -> int:
        return self.K.shape[0]

    @property
    def offsets(self) -> np.ndarray:
        return self.l + self.h

    def control(self, t: int, x: np.ndarray) -> np.ndarray:
        return self.K[t] @ x + self.l[t] + self.h[t]

    def copy(self) -> "AffinePolicy":
        return AffinePolicy(self.K.copy(), self.l.copy(), self.h.copy(), self.V.copy(),
                            self.S.copy(), self.T.copy(), self.c.copy(), self.mu, self.steady)


@dataclass
class SteadyStatePolicy:
    V: np.ndarray
    K: np.ndarray
    S: np.ndarray
    T: np.ndarray
    l: np.ndarray
    h: np.ndarray
    mu: float
    stage_constant: float
    iterations: int
    residual: float
    residual_trace: list = field(default_factory=list)

    @property
    def offset(self) -> np.ndarray:
        return self.l + self.h

    def to_affine(self, N: int) -> AffinePolicy:
        """Apply the stationary law at every one of ``N`` stages.

        ``c`` holds ``(N - t)`` times the stationary per-stage constant.
        """
        rep = lambda M, k: np.repeat(M[None], k, axis=0)  # noqa: E731
        c = self.stage_constant * np.arange(N, -1, -1, dtype=float)
        return AffinePolicy(rep(self.K, N), rep(self.l, N), rep(self.h, N),
                            rep(self.V, N + 1), rep(self.S, N + 1), rep(self.T, N + 1),
                            c, self.mu, steady=True)


def inflated_penalty(Q, W, mu: float, Qc=None) -> np.ndarray:
    """``Q + 4 mu Qc W Qc`` (``Qc`` defaults to ``Q``), symmetrized."""
    if mu < 0 or not np.isfinite(mu):
        raise InvalidInput(f"multiplier must be finite and >= 0, got {mu}")
    Q = np.asarray(Q, dtype=float)
    Qc = Q if Qc is None else np.asarray(Qc, dtype=float)
    return symmetrize(Q + 4.0 * mu * Qc @ np.asarray(W, dtype=float) @ Qc)


def _check(model: SystemModel, cost: CostSpec, stats: NoiseStats, mu: float):
    n, p = model.n, model.p
    if cost.Q.shape != (n, n) or cost.R.shape != (p, p) or stats.dim != n:
        raise DimensionError("model, cost and noise dimensions disagree")
    if not np.allclose(stats.qc_used, cost.Qc, rtol=1e-12, atol=1e-14):
        raise InvalidInput("noise statistics were computed under a different Qc")
    if mu < 0 or not np.isfinite(mu):
        raise InvalidInput(f"multiplier must be finite and >= 0, got {mu}")


def _gain(A, B, R, V):
    """Cholesky factor of ``B'VB + R`` and ``K = -(B'VB + R)^{-1} B'VA``."""
    H = symmetrize(B.T @ V @ B + R)
    try:
        chol = cho_factor(H)
    except LinAlgError as exc:
        raise NumericalError("B'VB + R is not numerically positive definite") from exc
    return H, chol, -cho_solve(chol, B.T @ V @ A)


def _riccati_update(A, B, Qmu, V, K):
    return symmetrize(A.T @ V @ A + Qmu + A.T @ V @ B @ K)


def backward_pass(model: SystemModel, cost: CostSpec, stats: NoiseStats,
                  mu: float) -> AffinePolicy:
    """Finite-horizon risk-aware Riccati pass from ``V_N = Q_mu``.

    The constant term uses ``S_t`` where the printed recursion has ``S_N``;
    only the former reproduces the direct Lagrangian value of the returned
    policy when both the noise mean and ``mu M3`` are nonzero.
    """
    _check(model, cost, stats, mu)
    N = model.require_horizon()
    A, B, R = model.A, model.B, cost.R
    n, p = model.n, model.p
    Qc, W, wbar, M3 = cost.Qc, stats.cov, stats.mean, stats.m3
    Qmu = inflated_penalty(cost.Q, W, mu, Qc)

    K = np.zeros((N, p, n))
    l = np.zeros((N, p))
    h = np.zeros((N, p))
    V = np.zeros((N + 1, n, n))
    S = np.zeros((N + 1, n, n))
    T = np.zeros((N + 1, n, n))
    c = np.zeros(N + 1)
    V[N], S[N] = Qmu, Qc

    for t in range(N, 0, -1):
        Vt, St, Tt = V[t], S[t], T[t]
        H, chol, Kt = _gain(A, B, R, Vt)
        Phi = A + B @ Kt
        K[t - 1] = Kt
        V[t - 1] = _riccati_update(A, B, Qmu, Vt, Kt)
        S[t - 1] = Phi.T @ St + Qc
        T[t - 1] = Phi.T @ (Tt + Vt)
        l[t - 1] = -2.0 * mu * cho_solve(chol, B.T @ St @ M3)
        h[t - 1] = -cho_solve(chol, B.T @ (Vt + Tt) @ wbar)
        g = l[t - 1] + h[t - 1]
        c[t - 1] = (c[t] + float(np.sum(W * Vt)) + wbar @ (2.0 * Tt.T + Vt) @ wbar
                    + 4.0 * mu * M3 @ St.T @ wbar - g @ H @ g)
    return AffinePolicy(K, l, h, V, S, T, c, float(mu))


def steady_state(model: SystemModel, cost: CostSpec, stats: NoiseStats, mu: float,
                 tol: float = 1e-12, max_iter: int = 100000) -> SteadyStatePolicy:
    """Stationary limit of the risk-aware recursion by value iteration.

    Raises
    ------
    ConvergenceError
        The fixed-point gap did not fall below ``tol * (1 + |V|_max)``.
    NumericalError
        The converged closed loop is not stable, or a linear solve is unreliable.
    """
    _check(model, cost, stats, mu)
    A, B, R = model.A, model.B, cost.R
    n = model.n
    Qc, W, wbar, M3 = cost.Qc, stats.cov, stats.mean, stats.m3
    Qmu = inflated_penalty(cost.Q, W, mu, Qc)

    V = Qmu
    trace = []
    for it in range(1, max_iter + 1):
        _, _, K = _gain(A, B, R, V)
        V_next = _riccati_update(A, B, Qmu, V, K)
        gap = float(np.max(np.abs(V_next - V)))
        trace.append(gap)
        done = gap <= tol * (1.0 + float(np.max(np.abs(V))))
        V = V_next
        if done:
            break
    else:
        raise ConvergenceError(
            f"Riccati iteration did not converge in {max_iter} steps "
            f"(last gap {trace[-1]:.3e})", trace)

    H, chol, K = _gain(A, B, R, V)
    Phi = A + B @ K
    rho = spectral_radius(Phi)
    if rho >= 1.0:
        raise NumericalError(f"converged closed loop is unstable (spectral radius {rho:.6f})")
    I_Phi = np.eye(n) - Phi.T
    S = _guarded_solve(I_Phi, Qc)
    T = _guarded_solve(I_Phi, Phi.T @ V)
    l = -2.0 * mu * cho_solve(chol, B.T @ S @ M3)
    h = -cho_solve(chol, B.T @ (V + T) @ wbar)
    g = l + h
    stage_constant = (float(np.sum(W * V)) + wbar @ (2.0 * T.T + V) @ wbar
                      + 4.0 * mu * M3 @ S.T @ wbar - g @ H @ g)
    return SteadyStatePolicy(V, K, S, T, l, h, float(mu), float(stage_constant),
                             len(trace), trace[-1], trace)


def _guarded_solve(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    X = np.linalg.solve(M, rhs)
    resid = np.max(np.abs(M @ X - rhs)) / max(1.0, float(np.max(np.abs(rhs))))
    if resid > 1e-8:
        raise NumericalError(f"linear solve residual {resid:.3e} exceeds 1e-8")
    return X


def lagrangian_offset(model: SystemModel, cost: CostSpec, stats: NoiseStats,
                      mu: float, eps_bar: float) -> float:
    """The policy-independent part ``-mu (eps_bar + 4 x0'Qc W Qc x0 + 4 M3'Qc x0)``."""
    x0, Qc = model.x0, cost.Qc
    return -mu * (eps_bar + 4.0 * x0 @ Qc @ stats.cov @ Qc @ x0 + 4.0 * stats.m3 @ Qc @ x0)


def dual_value(model: SystemModel, cost: CostSpec, stats: NoiseStats, mu: float,
               eps_bar: float, policy: Optional[AffinePolicy] = None) -> float:
    """Dual function: optimal cost-to-go at ``x0`` plus the constant part of the Lagrangian."""
    if policy is None:
        policy = backward_pass(model, cost, stats, mu)
    elif policy.mu != mu or policy.steady:
        raise InvalidInput("dual_value needs the finite-horizon policy synthesized at mu")
    x0 = model.x0
    value = (x0 @ policy.V[0] @ x0 + 4.0 * mu * stats.m3 @ policy.S[0].T @ x0
             + 2.0 * stats.mean @ policy.T[0].T @ x0 + policy.c[0])
    return float(value + lagrangian_offset(model, cost, stats, mu, eps_bar))
