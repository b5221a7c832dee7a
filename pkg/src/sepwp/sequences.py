"""Checking and constructing (generalized) approximating sequences.

A finite list of steps can only be checked as a prefix: the limits
``eps_n -> 0`` and ``p_n -> p*`` are read as "nonincreasing over the steps
given", so a passing report means *prefix-consistent*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .analysis import SamplingPlan, compute_S_eps
from .problem import BALL_TOL, PerturbedSEP, inequality_residuals

MODES = ("approximating", "generalized")


@dataclass
class SequenceStep:
    n: int
    p: np.ndarray
    x: np.ndarray
    y: np.ndarray
    eps: float

    def __post_init__(self):
        self.p = np.atleast_1d(np.asarray(self.p, dtype=float))
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        self.eps = float(self.eps)

    @property
    def point(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    def to_dict(self) -> dict:
        return {"n": self.n, "p": self.p.tolist(), "x": self.x.tolist(), "y": self.y.tolist(), "eps": self.eps}


def steps_from_json(data) -> list[SequenceStep]:
    if not isinstance(data, list) or not data:
        raise ValueError("sequence must be a nonempty JSON array")
    steps = []
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise ValueError(f"[{i}]: step must be an object")
        missing = {"n", "p", "x", "y", "eps"} - item.keys()
        if missing:
            raise ValueError(f"[{i}]: missing key(s) {', '.join(sorted(missing))}")
        try:
            n = item["n"]
            if isinstance(n, bool) or not isinstance(n, int):
                raise TypeError("n must be an integer")
            steps.append(SequenceStep(n, item["p"], item["x"], item["y"], item["eps"]))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"[{i}]: {exc}") from None
    return steps


def steps_to_json(steps) -> list:
    return [s.to_dict() for s in steps]


@dataclass
class VerificationReport:
    mode: str
    violations: list  # per step: {condition: worst slack}, positive means violated
    passed: bool
    failures: list = field(default_factory=list)
    tail_convergence: list | None = None

    @property
    def failed_conditions(self) -> set:
        return {f.split(":", 1)[0] for f in self.failures}

    def worst(self, condition: str) -> float:
        return max(row[condition] for row in self.violations)

    def text(self) -> str:
        head = "prefix-consistent" if self.passed else "NOT prefix-consistent"
        lines = [f"mode={self.mode}: {head} ({len(self.violations)} steps)"]
        conds = [c for c in self.violations[0] if c != "n"] if self.violations else []
        for c in conds:
            lines.append(f"  {c:<12} worst slack {self.worst(c):+.6g}")
        lines += [f"  FAIL {f}" for f in self.failures]
        if self.tail_convergence:
            lines.append(f"  distance to floor set at last step: {self.tail_convergence[-1]:.6g}")
        return "\n".join(lines)


def verify(
    inst: PerturbedSEP,
    steps,
    mode: str = "approximating",
    h_inner: float = 0.01,
    tol: float = 1e-12,
    floor=None,
) -> VerificationReport:
    """Check each step against the approximating-sequence conditions.

    ``mode="approximating"`` requires ``x_n in C`` and ``y_n in Q``;
    ``mode="generalized"`` only ``d(x_n, C) <= eps_n`` and ``d(y_n, Q) <= eps_n``.
    The universal quantifiers run over the grid of ``C`` and ``Q`` at
    ``h_inner``. A parameter outside the ball M is a hard failure.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    steps = list(steps)
    if not steps:
        raise ValueError("no steps to verify")
    for a, b in zip(steps, steps[1:]):
        if b.n != a.n + 1:
            raise ValueError(f"step indices must be consecutive; got {a.n} then {b.n}")
    for s in steps:
        if s.p.shape != (inst.pdim,) or s.x.shape != (inst.dim1,) or s.y.shape != (inst.dim2,):
            raise ValueError(f"step {s.n}: dimensions do not match the instance")

    inner_c = geo.grid_sample(inst.C, h_inner)
    inner_q = geo.grid_sample(inst.Q, h_inner)
    failures = []
    rows = []
    for s in steps:
        eps = s.eps
        if not eps > 0:
            failures.append(f"eps_positive: step {s.n} has eps={eps:g}")
        p_dist = geo.norm(s.p - inst.p_star)
        if p_dist > inst.m_radius + BALL_TOL:
            failures.append(f"param_ball: step {s.n} has |p - p*| = {p_dist:.6g} > radius {inst.m_radius:g}")
            rows.append({"n": s.n})
            continue
        d_c = geo.distance_to_box(s.x, inst.C)
        d_q = geo.distance_to_box(s.y, inst.Q)
        bound = 0.0 if mode == "approximating" else eps
        row = {
            "n": s.n,
            "C": d_c - bound,
            "Q": d_q - bound,
            "link": geo.norm(s.y - geo.apply_operator(inst.A, s.x)) - eps,
            "f": float(inequality_residuals(inst, "f", s.p[None], s.x[None], inner_c)[0, 0]) - eps,
            "g": float(inequality_residuals(inst, "g", s.p[None], s.y[None], inner_q)[0, 0]) - eps,
        }
        # anything within tol counts as satisfied
        row = {k: (v if k == "n" or v > tol else min(v, 0.0)) for k, v in row.items()}
        rows.append(row)
        for c in ("C", "Q", "link", "f", "g"):
            if row[c] > 0:
                failures.append(f"{c}: step {s.n} violated by {row[c]:.6g}")

    for a, b in zip(steps, steps[1:]):
        if b.eps > a.eps + tol:
            failures.append(f"eps_monotone: eps increases at step {b.n}")
        da = geo.norm(a.p - inst.p_star)
        db = geo.norm(b.p - inst.p_star)
        if db > da + tol:
            failures.append(f"param_monotone: |p - p*| increases at step {b.n}")

    rows = [r for r in rows if len(r) > 1] or rows
    report = VerificationReport(mode, rows, passed=not failures, failures=failures)
    if floor is not None and geo.as_cloud(floor).shape[0]:
        report.tail_convergence = convergence_profile(steps, floor)
    return report


def generate(
    inst: PerturbedSEP,
    plan: SamplingPlan,
    eps_schedule,
    start,
    threads: int = 1,
) -> list[SequenceStep]:
    """Walk the sampled ``S(eps_n)`` sets, each time taking the member nearest the previous iterate.

    Members whose certifying parameter is no farther from ``p*`` than the
    previous one are preferred, so ``|p_n - p*|`` never increases. Ties go to
    the first member in lattice order. Each step's ``eps`` is the schedule
    value plus the lattice slack ``h_candidate * sqrt(dim1 + dim2)``.
    """
    eps_list = [float(e) for e in eps_schedule]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    prev = np.atleast_1d(np.asarray(start, dtype=float))
    if prev.shape != (inst.dim1 + inst.dim2,):
        raise ValueError("start must be a concatenated (x, y) point")
    slack = plan.h_candidate * math.sqrt(inst.dim1 + inst.dim2)
    prev_pdist = math.inf
    steps = []
    for n, eps in enumerate(eps_list, start=1):
        s = compute_S_eps(inst, plan, eps, threads)
        if s.count == 0:
            raise ValueError(f"approximate solution set is empty at eps={eps:g}")
        pdist = geo.row_norms(s.witnesses - inst.p_star)
        pool = np.flatnonzero(pdist <= prev_pdist)
        if pool.size == 0:
            pool = np.arange(s.count)
        d = geo.row_norms(s.members[pool] - prev)
        k = int(pool[int(np.argmin(d))])
        prev = s.members[k]
        prev_pdist = float(pdist[k])
        steps.append(SequenceStep(n, s.witnesses[k], prev[: inst.dim1], prev[inst.dim1 :], eps + slack))
    return steps


def convergence_profile(steps, floor) -> list:
    """Distance from each ``(x_n, y_n)`` to the floor solution set."""
    floor = geo.as_cloud(floor)
    if floor.shape[0] == 0:
        raise ValueError("floor set is empty")
    pts = np.stack([s.point for s in steps])
    return [float(v) for v in geo.nearest_distances(pts, floor)]
