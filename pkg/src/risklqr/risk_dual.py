"""Risk functional, LQR cost, the dual bisection and its KKT certificate."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, InvalidInput, NumericalError
from .model import CostSpec, SystemModel
from .moments import NoiseStats
from .riccati import AffinePolicy, backward_pass, dual_value, lagrangian_offset


class Status(str, enum.Enum):
    OPTIMAL_INTERIOR = "optimal_interior"
    OPTIMAL_ACTIVE = "optimal_active"
    INFEASIBLE = "infeasible"


@dataclass
class RiskEvaluation:
    jr: float
    method: str
    P0: Optional[np.ndarray] = None
    z0: Optional[np.ndarray] = None
    r0: Optional[float] = None


@dataclass
class KktReport:
    stationarity_gap: float
    primal_feasibility: float
    complementary_slackness: float
    passed: bool

    def to_dict(self) -> dict:
        return {"stationarity_gap": self.stationarity_gap,
                "primal_feasibility": self.primal_feasibility,
                "complementary_slackness": self.complementary_slackness,
                "passed": self.passed}


@dataclass
class Solution:
    mu_star: float
    policy: AffinePolicy
    j: float
    jr: float
    eps_bar: float
    status: Status
    kkt: Optional[KktReport] = None
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"status": self.status.value, "mu_star": self.mu_star, "J": self.j,
                "J_R": self.jr, "eps_bar": self.eps_bar,
                "kkt": None if self.kkt is None else self.kkt.to_dict(),
                "trace": [{"mu": m, "J_R": r} for m, r in self.trace]}


def epsilon_bar(epsilon: float, N: int, stats: NoiseStats, Qc=None) -> float:
    """Budget of the quadratic risk functional: ``eps - N m4 + 4 N Tr((W Qc)^2)``.

    May be negative.
    """
    if epsilon < 0 or N < 1:
        raise InvalidInput("need epsilon >= 0 and N >= 1")
    if Qc is not None and not np.allclose(Qc, stats.qc_used):
        raise InvalidInput("Qc differs from the one the statistics were computed under")
    return float(epsilon - N * stats.m4 + 4 * N * stats.trace_wqc_sq())


def _check_horizon(policy: AffinePolicy, model: SystemModel):
    N = model.require_horizon()
    if policy.N != N:
        raise DimensionError(f"policy covers {policy.N} stages, model horizon is {N}")
    if policy.K.shape[1:] != (model.p, model.n):
        raise DimensionError("policy gains do not match the plant dimensions")


def moment_propagation(policy: AffinePolicy, model: SystemModel, stats: NoiseStats):
    """Closed-loop state means and covariances, each stacked over ``t = 0..N``."""
    _check_horizon(policy, model)
    A, B, N, n = model.A, model.B, policy.N, model.n
    means = np.zeros((N + 1, n))
    covs = np.zeros((N + 1, n, n))
    means[0] = model.x0
    for t in range(N):
        Phi = A + B @ policy.K[t]
        means[t + 1] = Phi @ means[t] + B @ (policy.l[t] + policy.h[t]) + stats.mean
        covs[t + 1] = Phi @ covs[t] @ Phi.T + stats.cov
    return means, covs


def risk_value(policy: AffinePolicy, model: SystemModel, stats: NoiseStats, Qc=None,
               method: str = "recursion") -> RiskEvaluation:
    """Expected quadratic risk functional summed over ``t = 1..N``.

    ``method="recursion"`` runs the backward ``(P, z, r)`` recursion and then
    removes the deterministic ``t = 0`` terms it includes;
    ``method="moment_propagation"`` sums the functional over propagated
    closed-loop moments.
    """
    _check_horizon(policy, model)
    Qc = stats.qc_used if Qc is None else np.asarray(Qc, dtype=float)
    A, B, x0 = model.A, model.B, model.x0
    W, wbar, M3 = stats.cov, stats.mean, stats.m3
    QWQ4 = 4.0 * Qc @ W @ Qc
    QM4 = 4.0 * Qc @ M3

    if method == "moment_propagation":
        means, covs = moment_propagation(policy, model, stats)
        jr = sum(float(np.sum(QWQ4 * covs[t]) + means[t] @ QWQ4 @ means[t] + QM4 @ means[t])
                 for t in range(1, policy.N + 1))
        return RiskEvaluation(jr, method)
    if method != "recursion":
        raise InvalidInput(f"unknown method {method!r}")

    P, z, r = QWQ4.copy(), QM4.copy(), 0.0
    for t in range(policy.N, 0, -1):
        Phi = A + B @ policy.K[t - 1]
        b = B @ (policy.l[t - 1] + policy.h[t - 1]) + wbar
        r = r + float(np.sum(P * W)) + z @ b + b @ P @ b
        z = Phi.T @ z + QM4 + 2.0 * Phi.T @ P @ b
        P = Phi.T @ P @ Phi + QWQ4
    jr = x0 @ P @ x0 + z @ x0 + r - (x0 @ QWQ4 @ x0 + QM4 @ x0)
    return RiskEvaluation(float(jr), method, P, z, float(r))


def lqr_cost(policy: AffinePolicy, model: SystemModel, stats: NoiseStats,
             cost: CostSpec) -> float:
    """Expected quadratic cost of an affine policy, from propagated moments."""
    means, covs = moment_propagation(policy, model, stats)
    Q, R = cost.Q, cost.R
    J = sum(float(np.sum(Q * covs[t]) + means[t] @ Q @ means[t]) for t in range(policy.N + 1))
    for t in range(policy.N):
        K = policy.K[t]
        mu_u = K @ means[t] + policy.l[t] + policy.h[t]
        J += float(np.sum(R * (K @ covs[t] @ K.T)) + mu_u @ R @ mu_u)
    return J


def lagrangian_eval(policy: AffinePolicy, model: SystemModel, stats: NoiseStats,
                    cost: CostSpec, mu: float, eps_bar: float) -> float:
    return (lqr_cost(policy, model, stats, cost)
            + mu * risk_value(policy, model, stats).jr - mu * eps_bar)


def kkt_certificate(solution: Solution, model: SystemModel, cost: CostSpec,
                    stats: NoiseStats, tol: float = 1e-6) -> KktReport:
    mu, eps_bar = solution.mu_star, solution.eps_bar
    jr = risk_value(solution.policy, model, stats).jr
    D = dual_value(model, cost, stats, mu, eps_bar)
    L = lagrangian_eval(solution.policy, model, stats, cost, mu, eps_bar)
    gap = L - D
    feas = max(0.0, jr - eps_bar)
    cs = abs(mu * (jr - eps_bar))
    scale_b = 1.0 + abs(eps_bar)
    passed = (abs(gap) <= tol * (1.0 + abs(D)) and feas <= tol * scale_b
              and cs <= tol * scale_b)
    return KktReport(float(gap), float(feas), float(cs), bool(passed))


def _evaluate(model, cost, stats, mu):
    policy = backward_pass(model, cost, stats, mu)
    return policy, risk_value(policy, model, stats).jr


def solve_risk_constrained(model: SystemModel, cost: CostSpec, stats: NoiseStats,
                           eps_bar: Optional[float] = None, mu_max: float = 1e12,
                           tol_rel: float = 1e-9, max_doublings: int = 60,
                           kkt_tol: float = 1e-6, mono_tol: float = 1e-9) -> Solution:
    """Find the smallest multiplier whose policy meets the risk budget.

    The budget defaults to ``epsilon_bar(cost.epsilon, N, stats)``. The
    bracket is found by doubling from ``mu = 1`` (capped at ``mu_max``) and
    refined by bisection until its relative width is at most ``tol_rel``;
    the feasible endpoint is returned.

    An unreachable budget is reported through ``status``, not raised.
    """
    N = model.require_horizon()
    if eps_bar is None:
        eps_bar = epsilon_bar(cost.epsilon, N, stats)
    evaluated = []  # (mu, jr), kept sorted by mu

    def jr_at(mu):
        policy, jr = _evaluate(model, cost, stats, mu)
        for m, r in evaluated:
            slack = mono_tol * (1.0 + max(abs(r), abs(jr)))
            if (m < mu and jr > r + slack) or (m > mu and jr < r - slack):
                raise NumericalError(
                    f"risk functional not monotone in mu: J_R({m:g})={r!r}, J_R({mu:g})={jr!r}")
        evaluated.append((mu, jr))
        evaluated.sort()
        return policy, jr

    def finish(mu, policy, jr, status):
        sol = Solution(float(mu), policy, lqr_cost(policy, model, stats, cost), jr,
                       float(eps_bar), status, trace=list(evaluated))
        if status is not Status.INFEASIBLE:
            sol.kkt = kkt_certificate(sol, model, cost, stats, kkt_tol)
        return sol

    policy, jr = jr_at(0.0)
    if jr <= eps_bar:
        return finish(0.0, policy, jr, Status.OPTIMAL_INTERIOR)

    lo, hi = 0.0, 1.0
    for _ in range(max_doublings + 1):
        policy_hi, jr_hi = jr_at(hi)
        if jr_hi <= eps_bar:
            break
        if hi >= mu_max:
            return finish(hi, policy_hi, jr_hi, Status.INFEASIBLE)
        lo, hi = hi, min(2.0 * hi, mu_max)
    else:
        return finish(hi, policy_hi, jr_hi, Status.INFEASIBLE)

    while hi - lo > tol_rel * hi:
        mid = 0.5 * (lo + hi)
        policy_mid, jr_mid = jr_at(mid)
        if jr_mid <= eps_bar:
            hi, policy_hi, jr_hi = mid, policy_mid, jr_mid
        else:
            lo = mid
    return finish(hi, policy_hi, jr_hi, Status.OPTIMAL_ACTIVE)


def solve_at_multiplier(model: SystemModel, cost: CostSpec, stats: NoiseStats,
                        mu: float) -> Solution:
    """Policy for a user-chosen multiplier.

    The budget is taken to be the risk the policy itself attains, which is the
    budget for which ``mu`` is the optimal multiplier.
    """
    model.require_horizon()
    policy, jr = _evaluate(model, cost, stats, mu)
    status = Status.OPTIMAL_INTERIOR if mu == 0 else Status.OPTIMAL_ACTIVE
    sol = Solution(float(mu), policy, lqr_cost(policy, model, stats, cost), jr, float(jr),
                   status, trace=[(float(mu), jr)])
    sol.kkt = kkt_certificate(sol, model, cost, stats)
    return sol


__all__ = ["Status", "RiskEvaluation", "KktReport", "Solution", "epsilon_bar",
           "moment_propagation", "risk_value", "lqr_cost", "lagrangian_eval",
           "kkt_certificate", "solve_risk_constrained", "solve_at_multiplier",
           "lagrangian_offset"]
