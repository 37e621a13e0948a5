"""JSON/CSV encodings for configs, noise descriptors, policies and tables.

Floats are always written with 17 significant digits so that every value
round-trips exactly and identical inputs give byte-identical files.
Non-finite floats are written as ``null`` in JSON and ``nan``/``inf`` in CSV.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DimensionError, InvalidInput
from .model import (CostSpec, Degenerate, Empirical, FiniteDiscrete, Gaussian,
                    GaussianMixture, LinearMap, NoiseSpec, SystemModel)
from .riccati import AffinePolicy, SteadyStatePolicy

POLICY_FORMAT = "risklqr.policy/1"


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return fmt(v)


# ---------------------------------------------------------------------------
# noise descriptors
# ---------------------------------------------------------------------------


def noise_from_dict(d: dict) -> NoiseSpec:
    kind = d.get("type")
    if kind == "degenerate":
        return Degenerate(d["value"])
    if kind == "gaussian":
        return Gaussian(d["mean"], d["cov"])
    if kind == "gaussian_mixture":
        return GaussianMixture(d["weights"],
                               [Gaussian(c["mean"], c["cov"]) for c in d["components"]])
    if kind == "finite_discrete":
        return FiniteDiscrete(d["atoms"], d["probs"])
    if kind == "empirical":
        return Empirical(d["samples"])
    if kind == "linear_map":
        return LinearMap(d["G"], noise_from_dict(d["inner"]), bool(d.get("center", False)))
    raise InvalidInput(f"unknown noise type {kind!r}")


def noise_to_dict(spec: NoiseSpec) -> dict:
    if isinstance(spec, Degenerate):
        return {"type": "degenerate", "value": spec.value}
    if isinstance(spec, Gaussian):
        return {"type": "gaussian", "mean": spec.mean, "cov": spec.cov}
    if isinstance(spec, GaussianMixture):
        return {"type": "gaussian_mixture", "weights": spec.weights,
                "components": [{"mean": c.mean, "cov": c.cov} for c in spec.components]}
    if isinstance(spec, FiniteDiscrete):
        return {"type": "finite_discrete", "atoms": spec.atoms, "probs": spec.probs}
    if isinstance(spec, Empirical):
        return {"type": "empirical", "samples": spec.samples}
    if isinstance(spec, LinearMap):
        return {"type": "linear_map", "G": spec.G, "inner": noise_to_dict(spec.inner),
                "center": spec.center}
    raise TypeError(f"unsupported noise descriptor {type(spec).__name__}")


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------


def _arr(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": a.tolist()}


def _unarr(d: dict) -> np.ndarray:
    a = np.array(d["data"], dtype=float)
    shape = tuple(d["shape"])
    if a.size == 0:
        a = a.reshape(shape)
    if a.shape != shape:
        raise DimensionError(f"array data has shape {a.shape}, header says {shape}")
    return a


def policy_to_dict(policy) -> dict:
    if isinstance(policy, SteadyStatePolicy):
        return {"format": POLICY_FORMAT, "mu": policy.mu, "steady": True, "N": None,
                "K": _arr(policy.K), "l": _arr(policy.l), "h": _arr(policy.h),
                "V": _arr(policy.V), "S": _arr(policy.S), "T": _arr(policy.T),
                "c": _arr([policy.stage_constant]),
                "iterations": policy.iterations, "residual": policy.residual}
    return {"format": POLICY_FORMAT, "mu": policy.mu, "steady": policy.steady,
            "N": policy.N, "K": _arr(policy.K), "l": _arr(policy.l), "h": _arr(policy.h),
            "V": _arr(policy.V), "S": _arr(policy.S), "T": _arr(policy.T),
            "c": _arr(policy.c)}


def policy_from_dict(d: dict, N: Optional[int] = None) -> AffinePolicy:
    """Rebuild an :class:`AffinePolicy`; stationary files are expanded to ``N`` stages."""
    if d.get("format") != POLICY_FORMAT:
        raise InvalidInput(f"not a policy file (format {d.get('format')!r})")
    arrs = {k: _unarr(d[k]) for k in ("K", "l", "h", "V", "S", "T", "c")}
    if d.get("N") is None:
        if N is None:
            raise InvalidInput("stationary policy needs a horizon to be evaluated")
        steady = SteadyStatePolicy(arrs["V"], arrs["K"], arrs["S"], arrs["T"], arrs["l"],
                                   arrs["h"], float(d["mu"]), float(arrs["c"][0]),
                                   int(d.get("iterations", 0)), float(d.get("residual", 0.0)))
        return steady.to_affine(N)
    if N is not None and int(d["N"]) != N:
        raise DimensionError(f"policy horizon {d['N']} differs from model horizon {N}")
    return AffinePolicy(arrs["K"], arrs["l"], arrs["h"], arrs["V"], arrs["S"], arrs["T"],
                        arrs["c"], float(d["mu"]), bool(d["steady"]))


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    model: SystemModel
    noise: NoiseSpec
    cost: CostSpec
    budget: dict
    solver: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    output: str = "."

    @property
    def budget_kind(self) -> str:
        return next(iter(self.budget))


BUDGET_KEYS = ("epsilon", "epsilon_bar", "mu")


def config_from_dict(d: dict) -> RunConfig:
    for key in ("model", "noise", "cost"):
        if key not in d:
            raise InvalidInput(f"config is missing the {key!r} section")
    m = d["model"]
    model = SystemModel(m["A"], m["B"], m["x0"], m.get("N"))
    budget = d.get("budget", {"mu": 0.0})
    given = [k for k in BUDGET_KEYS if k in budget]
    if len(given) != 1 or len(budget) != 1:
        raise InvalidInput("budget must hold exactly one of epsilon, epsilon_bar, mu")
    value = float(budget[given[0]])
    c = d["cost"]
    cost = CostSpec(c["Q"], c["R"], c.get("Qc"),
                    value if given[0] == "epsilon" else c.get("epsilon", 0.0))
    output = str(d.get("output", "."))
    return RunConfig(model, noise_from_dict(d["noise"]), cost, {given[0]: value},
                     dict(d.get("solver", {})), dict(d.get("sim", {})), output)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))
