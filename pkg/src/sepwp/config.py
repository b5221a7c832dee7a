"""JSON problem configs: validation with key paths, and the two bundled worked instances."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import SamplingPlan
from .expr import ParseError, parse
from .geometry import Box
from .problem import PerturbedSEP


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass
class ProblemConfig:
    instance: PerturbedSEP
    plan: SamplingPlan
    kuratowski_k: int = 2
    tau_point: float | None = None
    tau_cluster: float | None = None


def _int(doc: dict, key: str) -> int:
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(key, "must be a positive integer")
    return v


def _real(v, path: str, positive: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path, "must be a finite number")
    if positive and v <= 0:
        raise ConfigError(path, "must be positive")
    return float(v)


def _vector(v, path: str, n: int) -> np.ndarray:
    if not isinstance(v, list) or len(v) != n:
        raise ConfigError(path, f"must be an array of length {n}")
    return np.array([_real(x, f"{path}[{i}]") for i, x in enumerate(v)])


def _box(v, path: str, n: int) -> Box:
    if not isinstance(v, list) or len(v) != n:
        raise ConfigError(path, f"must be an array of {n} [lower, upper] pairs")
    lo, hi = [], []
    for i, pair in enumerate(v):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"{path}[{i}]", "must be a [lower, upper] pair")
        a = _real(pair[0], f"{path}[{i}][0]")
        b = _real(pair[1], f"{path}[{i}][1]")
        if a > b:
            raise ConfigError(f"{path}[{i}]", "lower bound exceeds upper bound")
        lo.append(a)
        hi.append(b)
    return Box(lo, hi)


def _matrix(v, rows: int, cols: int) -> np.ndarray:
    if isinstance(v, list) and v and all(isinstance(r, list) for r in v):
        if len(v) != rows:
            raise ConfigError("A", f"must have {rows} rows")
        return np.array([_vector(r, f"A[{i}]", cols) for i, r in enumerate(v)])
    # flat row-major form
    return _vector(v, "A", rows * cols).reshape(rows, cols)


def _expr(doc: dict, key: str):
    text = doc.get(key)
    if not isinstance(text, str):
        raise ConfigError(key, "must be an expression string")
    try:
        return parse(text)
    except ParseError as exc:
        raise ConfigError(key, str(exc)) from None


def config_from_dict(doc) -> ProblemConfig:
    if not isinstance(doc, dict):
        raise ConfigError("", "config must be a JSON object")
    dim1, dim2, pdim = _int(doc, "dim1"), _int(doc, "dim2"), _int(doc, "pdim")
    for key in ("C", "Q", "A", "f_tilde", "g_tilde", "p_star", "m_radius", "plan"):
        if key not in doc:
            raise ConfigError(key, "missing required key")
    plan_doc = doc["plan"]
    if not isinstance(plan_doc, dict):
        raise ConfigError("plan", "must be an object")
    plan_vals = {}
    for key in ("h_candidate", "h_inner", "h_param", "eps_floor"):
        if key not in plan_doc:
            raise ConfigError(f"plan.{key}", "missing required key")
        plan_vals[key] = _real(plan_doc[key], f"plan.{key}", positive=True)

    f_tilde, g_tilde = _expr(doc, "f_tilde"), _expr(doc, "g_tilde")
    try:
        inst = PerturbedSEP(
            dim1=dim1,
            dim2=dim2,
            pdim=pdim,
            C=_box(doc["C"], "C", dim1),
            Q=_box(doc["Q"], "Q", dim2),
            A=_matrix(doc["A"], dim2, dim1),
            f_tilde=f_tilde,
            g_tilde=g_tilde,
            p_star=_vector(doc["p_star"], "p_star", pdim),
            m_radius=_real(doc["m_radius"], "m_radius", positive=True),
            name=str(doc.get("name", "")),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("", str(exc)) from None

    k = doc.get("kuratowski_k", 2)
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ConfigError("kuratowski_k", "must be a positive integer")
    thr = doc.get("thresholds", {})
    if not isinstance(thr, dict):
        raise ConfigError("thresholds", "must be an object")
    taus = {}
    for key in ("tau_point", "tau_cluster"):
        taus[key] = _real(thr[key], f"thresholds.{key}", positive=True) if key in thr else None
    return ProblemConfig(inst, SamplingPlan(**plan_vals), k, **taus)


def load_config(path) -> ProblemConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    return config_from_dict(doc)


EXAMPLES = {
    "ex1": {
        "name": "ex1",
        "dim1": 1,
        "dim2": 1,
        "pdim": 1,
        "C": [[-1.0, 0.0]],
        "Q": [[-1.0, 0.0]],
        "A": [[1.0]],
        "f_tilde": "(z1 - x1) * (p1^2 + 2)",
        "g_tilde": "w1 - y1",
        "p_star": [0.0],
        "m_radius": 1.0,
        "plan": {"h_candidate": 0.01, "h_inner": 0.01, "h_param": 0.01, "eps_floor": 0.01},
        "kuratowski_k": 2,
    },
    "ex2": {
        "name": "ex2",
        "dim1": 1,
        "dim2": 1,
        "pdim": 1,
        "C": [[-2.0, 2.0]],
        "Q": [[-2.0, 2.0]],
        "A": [[1.0]],
        "f_tilde": "(x1^2 - p1)^2 - (z1^2 - p1)^2",
        "g_tilde": "(y1^2 - p1)^2 - (w1^2 - p1)^2",
        "p_star": [1.0],
        "m_radius": 1.0,
        "plan": {"h_candidate": 0.01, "h_inner": 0.01, "h_param": 0.01, "eps_floor": 0.01},
        "kuratowski_k": 2,
        # cluster spread decays like sqrt(eps): about 0.16 at eps = 0.0125
        "thresholds": {"tau_cluster": 0.2},
    },
}


def hand_sequence_ex1(count: int = 50, eps_scale: float = 3.0) -> list:
    """Steps ``x_n = y_n = -1/n``, ``p_n = 1/n``, ``eps_n = eps_scale/n`` for ex1."""
    return [
        {"n": n, "p": [1.0 / n], "x": [-1.0 / n], "y": [-1.0 / n], "eps": eps_scale / n}
        for n in range(1, count + 1)
    ]


def example_config(name: str) -> ProblemConfig:
    return config_from_dict(EXAMPLES[name])
