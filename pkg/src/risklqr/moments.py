"""Sufficient noise statistics and a reproducible sampler.

Every supported noise descriptor reduces exactly to one of two canonical
forms: a finite set of weighted atoms (``Degenerate``, ``FiniteDiscrete``,
``Empirical``) or a Gaussian mixture (``Gaussian``, ``GaussianMixture``).
Both forms are closed under linear maps, so ``LinearMap`` statistics are
exact as well and no sampling is ever needed to compute them.

Sampling uses numpy's ``Philox`` counter-based generator keyed by the seed.
Row ``i`` of a draw consumes the raw 64-bit words at counter positions
``[i*k, (i+1)*k)`` where ``k`` is a per-descriptor word budget (a multiple of
four), so any row can be regenerated on its own and batching or worker
partitioning never changes the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DimensionError, InvalidInput
from .model import (Degenerate, Empirical, FiniteDiscrete, Gaussian, GaussianMixture,
                    LinearMap, NoiseSpec, as_matrix, psd_sqrt, symmetrize)


@dataclass(frozen=True)
class NoiseStats:
    """Mean, covariance and the ``Qc``-weighted third/fourth central moments.

    ``m3 = E[d d' Qc d]`` and ``m4 = Var(d' Qc d)`` with ``d = w - mean``.
    """

    mean: np.ndarray
    cov: np.ndarray
    m3: np.ndarray
    m4: float
    qc_used: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def trace_wqc_sq(self) -> float:
        """``Tr((W Qc)^2)``."""
        WQ = self.cov @ self.qc_used
        return float(np.trace(WQ @ WQ))

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist(),
                "m3": self.m3.tolist(), "m4": float(self.m4),
                "qc": self.qc_used.tolist()}


# ---------------------------------------------------------------------------
# canonical forms
# ---------------------------------------------------------------------------


@dataclass
class _Atoms:
    points: np.ndarray  # (m, n)
    probs: np.ndarray   # (m,)


@dataclass
class _Mixture:
    weights: np.ndarray  # (k,)
    means: np.ndarray    # (k, n)
    covs: np.ndarray     # (k, n, n)


def _canonical(spec: NoiseSpec):
    if isinstance(spec, Degenerate):
        return _Atoms(spec.value[None, :], np.ones(1))
    if isinstance(spec, FiniteDiscrete):
        return _Atoms(spec.atoms, spec.probs)
    if isinstance(spec, Empirical):
        m = spec.samples.shape[0]
        return _Atoms(spec.samples, np.full(m, 1.0 / m))
    if isinstance(spec, Gaussian):
        return _Mixture(np.ones(1), spec.mean[None, :], spec.cov[None, :, :])
    if isinstance(spec, GaussianMixture):
        return _Mixture(spec.weights,
                        np.stack([c.mean for c in spec.components]),
                        np.stack([c.cov for c in spec.components]))
    if isinstance(spec, LinearMap):
        inner = _canonical(spec.inner)
        G = spec.G
        if isinstance(inner, _Atoms):
            pts = inner.points
            if spec.center:
                pts = pts - inner.probs @ pts
            return _Atoms(pts @ G.T, inner.probs)
        means = inner.means
        if spec.center:
            means = means - inner.weights @ means
        covs = np.einsum("ij,kjl,ml->kim", G, inner.covs, G)
        return _Mixture(inner.weights, means @ G.T, covs)
    raise TypeError(f"unsupported noise descriptor {type(spec).__name__}")


def _check_qc(Qc, n: int) -> np.ndarray:
    Qc = as_matrix(Qc, "Qc")
    if Qc.shape != (n, n):
        raise DimensionError(f"Qc has shape {Qc.shape}, noise dimension is {n}")
    return symmetrize(Qc)


def _clamp_m4(m4: float, scale: float) -> float:
    if m4 < 0:
        if m4 < -1e-12 * max(1.0, scale):
            raise InvalidInput(f"negative fourth-moment statistic {m4:.3e}")
        return 0.0
    return float(m4)


def _atoms_stats(points: np.ndarray, probs: np.ndarray, Qc: np.ndarray) -> NoiseStats:
    mean = probs @ points
    d = points - mean
    W = symmetrize((d * probs[:, None]).T @ d)
    q = np.einsum("ij,jk,ik->i", d, Qc, d)
    m3 = (probs * q) @ d
    trwq = float(np.sum(W * Qc))
    m4 = float(probs @ (q - trwq) ** 2)
    return NoiseStats(mean, W, m3, _clamp_m4(m4, trwq ** 2), Qc)


def _mixture_stats(mix: _Mixture, Qc: np.ndarray) -> NoiseStats:
    pi, mus, covs = mix.weights, mix.means, mix.covs
    mean = pi @ mus
    W = np.einsum("k,kij->ij", pi, covs)
    m3 = np.zeros_like(mean)
    second = 0.0  # E[(d'Qc d)^2]
    for p_i, mu, S in zip(pi, mus, covs):
        delta = mu - mean
        W = W + p_i * np.outer(delta, delta)
        QS = Qc @ S
        tr_qs = float(np.trace(QS))
        dqd = float(delta @ Qc @ delta)
        m3 = m3 + p_i * (delta * (dqd + tr_qs) + 2.0 * S @ Qc @ delta)
        second += p_i * (2.0 * float(np.trace(QS @ QS))
                         + 4.0 * float(delta @ Qc @ S @ Qc @ delta)
                         + (tr_qs + dqd) ** 2)
    W = symmetrize(W)
    trwq = float(np.sum(W * Qc))
    return NoiseStats(mean, W, m3, _clamp_m4(second - trwq ** 2, trwq ** 2), Qc)


def noise_stats(spec: NoiseSpec, Qc) -> NoiseStats:
    """Exact mean, covariance, ``M3`` and ``m4`` of a noise descriptor.

    Parameters
    ----------
    spec : NoiseSpec
        Noise descriptor of dimension ``n``.
    Qc : (n, n) array_like
        Symmetric PSD weighting of the quadratic form.

    Returns
    -------
    NoiseStats
    """
    Qc = _check_qc(Qc, spec.dim)
    form = _canonical(spec)
    if isinstance(form, _Atoms):
        return _atoms_stats(form.points, form.probs, Qc)
    return _mixture_stats(form, Qc)


def empirical_stats(samples, Qc) -> NoiseStats:
    """Plug-in (``1/m`` normalized) estimates from an ``m x n`` sample matrix."""
    s = np.array(samples, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim != 2 or s.shape[0] < 2:
        raise InvalidInput("empirical_stats needs an m x n matrix with m >= 2")
    Qc = _check_qc(Qc, s.shape[1])
    m = s.shape[0]
    return _atoms_stats(s, np.full(m, 1.0 / m), Qc)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

_INV_2_53 = 1.0 / 9007199254740992.0


def _words_needed(form) -> int:
    if isinstance(form, _Atoms):
        return 1
    return 1 + form.means.shape[1]


def words_per_row(spec: NoiseSpec) -> int:
    need = _words_needed(_canonical(spec))
    return 4 * ((need + 3) // 4)


def _uniforms(seed: int, start: int, count: int, k: int) -> np.ndarray:
    """Open-interval uniforms, row ``i`` built from counter block ``(start+i)*k/4``."""
    if not 0 <= seed < 2 ** 64:
        raise InvalidInput(f"seed must be an unsigned 64-bit integer, got {seed}")
    bitgen = np.random.Philox(key=int(seed))
    bitgen.advance((start * k) // 4)
    raw = bitgen.random_raw(count * k).reshape(count, k)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def sample(spec: NoiseSpec, seed: int, count: int, start: int = 0) -> np.ndarray:
    """Draw rows ``start .. start+count-1`` of the i.i.d. stream for ``seed``.

    The result is a ``count x n`` matrix. Row ``i`` depends only on
    ``(spec, seed, i)``.
    """
    if count < 1 or start < 0:
        raise InvalidInput("count must be >= 1 and start >= 0")
    form = _canonical(spec)
    k = words_per_row(spec)
    u = _uniforms(seed, start, count, k)
    if isinstance(form, _Atoms):
        if form.points.shape[0] == 1:
            return np.repeat(form.points, count, axis=0)
        cdf = np.cumsum(form.probs)
        idx = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), len(cdf) - 1)
        return form.points[idx]
    n = form.means.shape[1]
    cdf = np.cumsum(form.weights)
    comp = np.minimum(np.searchsorted(cdf, u[:, 0], side="right"), len(cdf) - 1)
    z = ndtri(u[:, 1:1 + n])
    out = np.empty((count, n))
    for c in range(len(form.weights)):
        rows = comp == c
        if np.any(rows):
            out[rows] = form.means[c] + z[rows] @ psd_sqrt(form.covs[c]).T
    return out
