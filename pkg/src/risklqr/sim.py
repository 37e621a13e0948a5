"""Monte Carlo rollouts of the closed loop under an affine policy.

Noise for rollout ``r`` at step ``t`` (the draw ``w_{t+1}``) is row
``r * N + t`` of the seed's sample stream, so any rollout can be reproduced
alone and batches may run in any order or on any number of threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import DimensionError, InvalidInput
from .model import CostSpec, NoiseSpec, SystemModel
from .moments import NoiseStats, noise_stats, sample
from .riccati import AffinePolicy

CHUNK = 8192


@dataclass
class Trajectory:
    states: np.ndarray           # (N+1, n)
    inputs: np.ndarray           # (N, p)
    stage_penalties: np.ndarray  # (N+1,)  x_t' Q x_t
    pred_errors: np.ndarray      # (N,)    Delta_t for t = 1..N


@dataclass
class EstimateReport:
    j_hat: float
    j_se: float
    jr_raw_hat: float
    jr_raw_se: float
    n_rollouts: int
    seed: int


def _check(policy: AffinePolicy, model: SystemModel, spec: NoiseSpec):
    N = model.require_horizon()
    if policy.N != N:
        raise DimensionError(f"policy covers {policy.N} stages, model horizon is {N}")
    if spec.dim != model.n:
        raise DimensionError(f"noise dimension {spec.dim} != state dimension {model.n}")
    return N


def _batch(policy, model, spec, cost, stats, seed, start, count, keep):
    """Simulate rollouts ``start .. start+count-1`` in lockstep."""
    N, n, p = policy.N, model.n, model.p
    A, B, Q, Qc = model.A, model.B, cost.Q, cost.Qc
    tr_wqc = float(np.sum(stats.cov * Qc))
    w = sample(spec, seed, count * N, start=start * N).reshape(count, N, n)

    x = np.repeat(model.x0[None, :], count, axis=0)
    total = np.einsum("ri,ij,rj->r", x, Q, x)
    risk = np.zeros(count)
    if keep:
        states = np.empty((count, N + 1, n))
        inputs = np.empty((count, N, p))
        deltas = np.empty((count, N))
        states[:, 0] = x
    for t in range(N):
        u = x @ policy.K[t].T + (policy.l[t] + policy.h[t])
        drift = x @ A.T + u @ B.T
        x_pred = drift + stats.mean
        x = drift + w[:, t]
        delta = (np.einsum("ri,ij,rj->r", x, Qc, x)
                 - np.einsum("ri,ij,rj->r", x_pred, Qc, x_pred) - tr_wqc)
        total += np.einsum("ri,ij,rj->r", u, cost.R, u) + np.einsum("ri,ij,rj->r", x, Q, x)
        risk += delta ** 2
        if keep:
            states[:, t + 1] = x
            inputs[:, t] = u
            deltas[:, t] = delta
    if keep:
        return total, risk, states, inputs, deltas
    return total, risk


def rollout(policy: AffinePolicy, model: SystemModel, spec: NoiseSpec, cost: CostSpec,
            seed: int, rollout_index: int, stats: Optional[NoiseStats] = None) -> Trajectory:
    """One closed-loop trajectory, reproducible from ``(seed, rollout_index)``."""
    _check(policy, model, spec)
    if stats is None:
        stats = noise_stats(spec, cost.Qc)
    _, _, states, inputs, deltas = _batch(policy, model, spec, cost, stats, seed,
                                          rollout_index, 1, keep=True)
    xs = states[0]
    pen = np.einsum("ti,ij,tj->t", xs, cost.Q, xs)
    return Trajectory(xs, inputs[0], pen, deltas[0])


def iter_trajectories(policy, model, spec, cost, seed, n_rollouts,
                      stats=None) -> Iterator[Trajectory]:
    if stats is None:
        stats = noise_stats(spec, cost.Qc)
    for r in range(n_rollouts):
        yield rollout(policy, model, spec, cost, seed, r, stats)


def default_threads() -> int:
    env = os.environ.get("RISKLQR_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InvalidInput(f"RISKLQR_THREADS must be an integer, got {env!r}") from None
        if value < 1:
            raise InvalidInput("RISKLQR_THREADS must be >= 1")
        return value
    return os.cpu_count() or 1


def per_rollout_totals(policy, model, spec, cost, seed, n_rollouts, threads=None,
                       stats=None, chunk=CHUNK):
    """Total cost and sum of squared prediction errors of each rollout, in index order."""
    _check(policy, model, spec)
    if stats is None:
        stats = noise_stats(spec, cost.Qc)
    starts = list(range(0, n_rollouts, chunk))
    work = lambda s: _batch(policy, model, spec, cost, stats, seed, s,  # noqa: E731
                            min(chunk, n_rollouts - s), keep=False)
    threads = threads or default_threads()
    if threads == 1 or len(starts) == 1:
        parts = [work(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def estimate(policy: AffinePolicy, model: SystemModel, spec: NoiseSpec, cost: CostSpec,
             seed: int, n_rollouts: int, threads: Optional[int] = None,
             chunk: int = CHUNK) -> EstimateReport:
    """Sample means (and standard errors) of the total cost and of the summed
    squared prediction errors of the constrained quadratic form."""
    if n_rollouts < 100:
        raise InvalidInput("estimate needs at least 100 rollouts")
    totals, risks = per_rollout_totals(policy, model, spec, cost, seed, n_rollouts,
                                       threads, chunk=chunk)
    root_n = np.sqrt(n_rollouts)
    return EstimateReport(float(totals.mean()), float(totals.std(ddof=1) / root_n),
                          float(risks.mean()), float(risks.std(ddof=1) / root_n),
                          n_rollouts, seed)


def empirical_cdf(values) -> list[tuple[float, float]]:
    """Right-continuous empirical CDF as ``(value, fraction <= value)`` pairs."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InvalidInput("empirical_cdf needs at least one value")
    uniq, counts = np.unique(v, return_counts=True)
    frac = np.cumsum(counts) / v.size
    return [(float(a), float(b)) for a, b in zip(uniq, frac)]


def percentile(values, q: float) -> float:
    return float(np.percentile(np.asarray(values, dtype=float), q))
