"""Plant, cost and noise descriptors, plus checks of the standing LQR assumptions.

All matrices are dense ``numpy`` arrays of ``float64``. Constructors coerce
array-likes, check shapes and finiteness, and symmetrize the cost matrices;
definiteness is reported by :func:`validate` rather than raised, so a caller
can inspect a bad configuration before deciding what to do with it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionError, InvalidInput

PSD_CLAMP = 1e-10
PROB_TOL = 1e-12


def as_matrix(value, name: str, shape: Optional[tuple] = None) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got ndim={arr.ndim}")
    if shape is not None and arr.shape != shape:
        raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def as_vector(value, name: str, size: Optional[int] = None) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got ndim={arr.ndim}")
    if size is not None and arr.shape[0] != size:
        raise DimensionError(f"{name} has length {arr.shape[0]}, expected {size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} has non-finite entries")
    return arr


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _check_symmetric(M: np.ndarray, name: str, rtol: float = 1e-9) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > rtol * scale:
        raise InvalidInput(f"{name} is not symmetric")
    return symmetrize(M)


def psd_sqrt(M: np.ndarray, clamp: float = PSD_CLAMP) -> np.ndarray:
    """Symmetric PSD square root.

    Eigenvalues in ``[-clamp, 0)`` are treated as round-off and set to zero;
    anything more negative means ``M`` is indefinite and is rejected.
    """
    M = symmetrize(np.asarray(M, dtype=float))
    evals, evecs = np.linalg.eigh(M)
    if evals.min() < -clamp:
        raise InvalidInput(f"matrix is not PSD (min eigenvalue {evals.min():.3e})")
    evals = np.clip(evals, 0.0, None)
    return symmetrize((evecs * np.sqrt(evals)) @ evecs.T)


@dataclass(frozen=True)
class SystemModel:
    """Linear plant ``x_{t+1} = A x_t + B u_t + w_{t+1}`` with fixed ``x0``.

    ``N`` is the horizon; leave it as ``None`` for steady-state-only use.
    """

    A: np.ndarray
    B: np.ndarray
    x0: np.ndarray
    N: Optional[int] = None

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        n = A.shape[0]
        if A.shape != (n, n) or n < 1:
            raise DimensionError(f"A must be square, got {A.shape}")
        B = as_matrix(self.B, "B")
        if B.shape[0] != n or B.shape[1] < 1:
            raise DimensionError(f"B has shape {B.shape}, expected ({n}, p>=1)")
        x0 = as_vector(self.x0, "x0", n)
        N = self.N
        if N is not None:
            if int(N) != N or N < 1:
                raise InvalidInput(f"horizon must be a positive integer, got {N}")
            N = int(N)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "N", N)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    def with_horizon(self, N: Optional[int]) -> "SystemModel":
        return SystemModel(self.A, self.B, self.x0, N)

    def require_horizon(self) -> int:
        if self.N is None:
            raise InvalidInput("this operation needs a finite horizon N")
        return self.N


@dataclass(frozen=True)
class CostSpec:
    """Quadratic penalties and the risk budget.

    ``Qc`` weights the quadratic form whose predictive variance is
    constrained; it defaults to ``Q``.
    """

    Q: np.ndarray
    R: np.ndarray
    Qc: Optional[np.ndarray] = None
    epsilon: float = 0.0

    def __post_init__(self):
        Q = _check_symmetric(as_matrix(self.Q, "Q"), "Q")
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise DimensionError(f"Q must be square, got {Q.shape}")
        R = as_matrix(self.R, "R")
        if R.shape[0] != R.shape[1]:
            raise DimensionError(f"R must be square, got {R.shape}")
        R = _check_symmetric(R, "R")
        Qc = Q.copy() if self.Qc is None else _check_symmetric(
            as_matrix(self.Qc, "Qc", (n, n)), "Qc")
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps < 0:
            raise InvalidInput(f"epsilon must be finite and >= 0, got {eps}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Qc", Qc)
        object.__setattr__(self, "epsilon", eps)


# ---------------------------------------------------------------------------
# Noise descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Degenerate:
    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", as_vector(self.value, "value"))

    @property
    def dim(self) -> int:
        return self.value.shape[0]


@dataclass(frozen=True)
class Gaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = as_vector(self.mean, "mean")
        cov = _check_symmetric(as_matrix(self.cov, "cov", (mean.size, mean.size)), "cov")
        psd_sqrt(cov)  # rejects indefinite covariances
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _probabilities(p, name: str) -> np.ndarray:
    p = as_vector(p, name)
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise InvalidInput(f"{name} must be nonnegative and sum to 1")
    return p


@dataclass(frozen=True)
class GaussianMixture:
    weights: np.ndarray
    components: Sequence[Gaussian]

    def __post_init__(self):
        w = _probabilities(self.weights, "weights")
        comps = tuple(self.components)
        if len(comps) != w.size or not comps:
            raise DimensionError("need one component per weight")
        if len({c.dim for c in comps}) != 1:
            raise DimensionError("mixture components differ in dimension")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.components[0].dim


@dataclass(frozen=True)
class FiniteDiscrete:
    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        atoms = as_matrix(atoms, "atoms")
        probs = _probabilities(self.probs, "probs")
        if atoms.shape[0] != probs.size:
            raise DimensionError("need one probability per atom")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]


@dataclass(frozen=True)
class Empirical:
    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        s = as_matrix(s, "samples")
        if s.shape[0] < 2:
            raise InvalidInput("Empirical needs at least 2 samples")
        object.__setattr__(self, "samples", s)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class LinearMap:
    """Noise ``w = G d`` for ``d`` drawn from ``inner``.

    With ``center=True`` the inner mean is removed first, ``w = G (d - E d)``,
    which is how a known disturbance mean is cancelled by feedforward.
    """

    G: np.ndarray
    inner: "NoiseSpec"
    center: bool = False

    def __post_init__(self):
        G = as_matrix(self.G, "G")
        if G.shape[1] != self.inner.dim:
            raise DimensionError(
                f"G has {G.shape[1]} columns but inner noise has dimension {self.inner.dim}")
        object.__setattr__(self, "G", G)

    @property
    def dim(self) -> int:
        return self.G.shape[0]


NoiseSpec = Union[Degenerate, Gaussian, GaussianMixture, FiniteDiscrete, Empirical, LinearMap]


# ---------------------------------------------------------------------------
# Assumption checks
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    stabilizable: bool
    detectable: bool
    psd_ok: bool
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.stabilizable and self.detectable and self.psd_ok


def spectral_radius(M) -> float:
    M = as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"spectral radius needs a square matrix, got {M.shape}")
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _hautus_ok(A: np.ndarray, C: np.ndarray, tol: float) -> tuple[bool, list]:
    """Rank test of ``[A - lam I, C]`` at every eigenvalue with ``|lam| >= 1 - tol``."""
    n = A.shape[0]
    bad = []
    for lam in np.linalg.eigvals(A):
        if abs(lam) < 1.0 - tol:
            continue
        sv = np.linalg.svd(np.hstack([A - lam * np.eye(n), C]), compute_uv=False)
        if sv[-1] <= tol * sv[0]:
            bad.append(lam)
    return not bad, bad


def validate(model: SystemModel, cost: CostSpec, tol: float = 1e-8,
             tol_pd: float = 1e-12) -> ValidationReport:
    """Check stabilizability, detectability and the definiteness of Q, Qc, R."""
    n, p = model.n, model.p
    if cost.Q.shape != (n, n) or cost.Qc.shape != (n, n):
        raise DimensionError(f"Q/Qc must be {n}x{n}")
    if cost.R.shape != (p, p):
        raise DimensionError(f"R must be {p}x{p}, got {cost.R.shape}")

    messages = []
    psd_ok = True
    for name, M in (("Q", cost.Q), ("Qc", cost.Qc)):
        lo = np.linalg.eigvalsh(M).min()
        if lo < -PSD_CLAMP:
            psd_ok = False
            messages.append(f"{name} is not PSD (min eigenvalue {lo:.3e})")
    lo_r = np.linalg.eigvalsh(cost.R).min()
    if lo_r < tol_pd:
        psd_ok = False
        messages.append(f"R is not PD (min eigenvalue {lo_r:.3e})")

    stab, bad = _hautus_ok(model.A, model.B, tol)
    if not stab:
        messages.append(f"(A, B) not stabilizable: uncontrollable modes {bad}")

    try:
        Qh = psd_sqrt(cost.Q)
    except InvalidInput:
        det = False
        messages.append("detectability not tested: Q is indefinite")
    else:
        det, bad = _hautus_ok(model.A.T, Qh.T, tol)
        if not det:
            messages.append(f"(A, Q^1/2) not detectable: unobservable modes {bad}")
    return ValidationReport(stab, det, psd_ok, messages)
