"""Sampled approximate solution sets, epsilon sweeps and well-posedness classification.

Lattices are shared across epsilon so that results nest exactly:

* candidates for ``z`` (and ``w``) lie on the grid of ``C`` (``Q``) extended
  outward by whole steps of ``h_candidate``;
* parameters lie on ``p* + h_param * Z^pdim`` intersected with the ball of
  radius ``min(eps, m_radius)``, visited by increasing distance from ``p*``.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .problem import PerturbedSEP, inequality_residuals


@dataclass(frozen=True)
class SamplingPlan:
    h_candidate: float
    h_inner: float
    h_param: float
    eps_floor: float

    def __post_init__(self):
        for name in ("h_candidate", "h_inner", "h_param", "eps_floor"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number")

    @property
    def default_tau(self) -> float:
        return 5 * self.h_candidate


@dataclass
class ApproxSolutionSet:
    """Lattice members of ``S(eps)``; rows are concatenated ``(z, w)``."""

    eps: float
    members: np.ndarray
    witnesses: np.ndarray
    plan: SamplingPlan
    dim1: int

    @property
    def count(self) -> int:
        return self.members.shape[0]

    @property
    def z(self) -> np.ndarray:
        return self.members[:, : self.dim1]

    @property
    def w(self) -> np.ndarray:
        return self.members[:, self.dim1 :]

    def bounding_box(self) -> geo.Box | None:
        if self.count == 0:
            return None
        return geo.Box(self.members.min(axis=0), self.members.max(axis=0))


class Classification(str, enum.Enum):
    LP_WELL_POSED = "LPWellPosed"
    GENERALIZED_LP_WELL_POSED = "GeneralizedLPWellPosed"
    NO_SOLUTION_DETECTED = "NoSolutionDetected"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value


@dataclass
class SweepRecord:
    eps: float
    count: int
    diam: float | None
    hausdorff_to_floor: float | None
    mu_hat: float | None
    wallclock_ms: float


@dataclass
class SweepResult:
    eps_list: list
    records: list
    floor_set: ApproxSolutionSet
    k: int
    classification: Classification | None = None
    tau_point: float | None = None
    tau_cluster: float | None = None
    sets: list = field(default_factory=list, repr=False)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]


# ---------------------------------------------------------------------------
# Lattices
# ---------------------------------------------------------------------------


def candidate_axis(lo: float, hi: float, h: float, eps: float) -> np.ndarray:
    """Grid of ``[lo, hi]`` plus whole steps of ``h`` outward, enough to cover ``eps``."""
    base = geo.axis_lattice(lo, hi, h)
    j = math.ceil(eps / h - 1e-9)
    steps = np.arange(1, j + 1, dtype=float)
    return np.concatenate([lo - h * steps[::-1], base, hi + h * steps])


def candidate_lattice(box: geo.Box, h: float, eps: float) -> np.ndarray:
    pts = geo.product_lattice([candidate_axis(lo, hi, h, eps) for lo, hi in zip(box.lower, box.upper)])
    return pts[geo.distance_to_box(pts, box) <= eps]


def parameter_grid(inst: PerturbedSEP, h_param: float, eps: float) -> np.ndarray:
    """Lattice points of the ball ``B(p*, min(eps, m_radius))``, nearest to ``p*`` first."""
    r = min(eps, inst.m_radius)
    kmax = math.floor(r / h_param + 1e-9)
    rng = np.arange(-kmax, kmax + 1)
    ks = geo.product_lattice([rng.astype(float)] * inst.pdim).astype(np.int64)
    sq = (ks * ks).sum(axis=1)
    ks = ks[sq <= (r / h_param) ** 2 * (1 + 1e-12) + 1e-9]
    sq = (ks * ks).sum(axis=1)
    order = np.lexsort(tuple(ks[:, i] for i in range(inst.pdim - 1, -1, -1)) + (sq,))
    return inst.p_star + h_param * ks[order].astype(float)


# ---------------------------------------------------------------------------
# Approximate solution sets
# ---------------------------------------------------------------------------


def membership(inst: PerturbedSEP, plan: SamplingPlan, eps: float, z, w) -> tuple[bool, np.ndarray | None]:
    """Is ``(z, w)`` in the sampled ``S(eps)``? Returns the first certifying parameter."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if geo.distance_to_box(z, inst.C) > eps or geo.distance_to_box(w, inst.Q) > eps:
        return False, None
    if geo.norm(w - geo.apply_operator(inst.A, z)) > eps:
        return False, None
    params = parameter_grid(inst, plan.h_param, eps)
    rf = inequality_residuals(inst, "f", params, z[None], geo.grid_sample(inst.C, plan.h_inner))[:, 0]
    rg = inequality_residuals(inst, "g", params, w[None], geo.grid_sample(inst.Q, plan.h_inner))[:, 0]
    ok = (rf <= eps) & (rg <= eps)
    if not ok.any():
        return False, None
    return True, params[int(np.argmax(ok))]


def compute_S_eps(inst: PerturbedSEP, plan: SamplingPlan, eps: float, threads: int = 1) -> ApproxSolutionSet:
    """Scan the candidate lattice and keep every member of the sampled ``S(eps)``.

    Members come out in lexicographic order of ``(z, w)``; each carries the
    first parameter (closest to ``p*``) at which all five conditions hold.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = parameter_grid(inst, plan.h_param, eps)
    Z = candidate_lattice(inst.C, plan.h_candidate, eps)
    W = candidate_lattice(inst.Q, plan.h_candidate, eps)

    f_ok = inequality_residuals(inst, "f", params, Z, geo.grid_sample(inst.C, plan.h_inner), threads) <= eps
    g_ok = inequality_residuals(inst, "g", params, W, geo.grid_sample(inst.Q, plan.h_inner), threads) <= eps
    zi = np.flatnonzero(f_ok.any(axis=0))
    wi = np.flatnonzero(g_ok.any(axis=0))
    Z, f_ok = Z[zi], f_ok[:, zi]
    W, g_ok = W[wi], g_ok[:, wi]

    width = inst.dim1 + inst.dim2
    if Z.shape[0] == 0 or W.shape[0] == 0:
        return ApproxSolutionSet(eps, np.empty((0, width)), np.empty((0, inst.pdim)), plan, inst.dim1)

    # some parameter certifies both halves; counts are small integers, exact in float
    shared = (f_ok.T.astype(float) @ g_ok.astype(float)) > 0
    Az = geo.apply_operator(inst.A, Z)
    pairs_i, pairs_j = [], []
    for s in range(0, Z.shape[0], 256):
        link = geo.row_norms(W[None, :, :] - Az[s : s + 256, None, :]) <= eps
        i, j = np.nonzero(link & shared[s : s + 256])
        pairs_i.append(i + s)
        pairs_j.append(j)
    i = np.concatenate(pairs_i)
    j = np.concatenate(pairs_j)

    both = f_ok[:, i] & g_ok[:, j]
    witnesses = params[np.argmax(both, axis=0)] if i.size else np.empty((0, inst.pdim))
    members = np.concatenate([Z[i], W[j]], axis=1) if i.size else np.empty((0, width))
    return ApproxSolutionSet(eps, members, witnesses, plan, inst.dim1)


def solution_floor(inst: PerturbedSEP, plan: SamplingPlan, threads: int = 1) -> np.ndarray:
    """Sampled ``S(eps_floor)``: an outer approximation of the solution set."""
    return compute_S_eps(inst, plan, plan.eps_floor, threads).members


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def geometric_schedule(eps_start: float, factor: float, steps: int) -> list:
    """``eps_start * factor**i`` for ``i = 0..steps``."""
    if not (0 < factor < 1):
        raise ValueError("factor must lie in (0, 1)")
    if eps_start <= 0 or steps < 0:
        raise ValueError("eps_start must be positive and steps nonnegative")
    return [eps_start * factor**i for i in range(steps + 1)]


def sweep(
    inst: PerturbedSEP,
    plan: SamplingPlan,
    eps_schedule,
    k: int = 2,
    threads: int = 1,
    tau_point: float | None = None,
    tau_cluster: float | None = None,
    keep_sets: bool = False,
) -> SweepResult:
    eps_list = [float(e) for e in eps_schedule]
    if not eps_list:
        raise ValueError("empty eps schedule")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    if eps_list[-1] < plan.eps_floor:
        raise ValueError(f"eps schedule reaches {eps_list[-1]:g}, below eps_floor={plan.eps_floor:g}")

    floor = compute_S_eps(inst, plan, plan.eps_floor, threads)
    records, sets = [], []
    for eps in eps_list:
        t0 = time.perf_counter()
        s = compute_S_eps(inst, plan, eps, threads)
        if s.count:
            diam = geo.diameter(s.members)
            haus = geo.hausdorff(s.members, floor.members) if floor.count else None
            mu = geo.kuratowski_estimate(s.members, k)
        else:
            diam = haus = mu = None
        records.append(SweepRecord(eps, s.count, diam, haus, mu, (time.perf_counter() - t0) * 1e3))
        if keep_sets:
            sets.append(s)

    result = SweepResult(eps_list, records, floor, k, sets=sets)
    result.tau_point = plan.default_tau if tau_point is None else tau_point
    result.tau_cluster = plan.default_tau if tau_cluster is None else tau_cluster
    result.classification = classify(result, result.tau_point, result.tau_cluster)
    return result


def classify(result: SweepResult, tau_point: float, tau_cluster: float) -> Classification:
    """Threshold reading of the limits ``diam -> 0``, ``H -> 0`` and ``mu -> 0``.

    * empty floor set: no solution detected;
    * diameter at the smallest eps within ``tau_point`` and never increasing: LP well-posed;
    * Hausdorff distance to the floor and the cluster estimate at the smallest
      eps both within ``tau_cluster``: generalized LP well-posed;
    * otherwise inconclusive.
    """
    if result.floor_set.count == 0:
        return Classification.NO_SOLUTION_DETECTED
    nonempty = [r for r in result.records if r.count]
    if len(nonempty) < 3:
        raise ValueError("classification needs at least three nonempty sweep records")
    last = result.records[-1]
    if last.count == 0:
        return Classification.INCONCLUSIVE
    diams = [r.diam for r in nonempty]
    if last.diam <= tau_point and all(b <= a for a, b in zip(diams, diams[1:])):
        return Classification.LP_WELL_POSED
    if last.hausdorff_to_floor <= tau_cluster and last.mu_hat <= tau_cluster:
        return Classification.GENERALIZED_LP_WELL_POSED
    return Classification.INCONCLUSIVE


CSV_HEADER = "eps,count,diam,hausdorff_to_floor,mu_hat,wallclock_ms"


def _fmt(v) -> str:
    return "" if v is None else format(v, ".9g")


def sweep_csv(result: SweepResult, timing: bool = False) -> str:
    """Render sweep records as CSV text (LF line endings).

    Wallclock is left blank unless ``timing`` is set, keeping the default
    output byte-identical across runs. Absent metrics are blank fields.
    """
    lines = [CSV_HEADER]
    for r in result.records:
        lines.append(
            ",".join(
                [
                    _fmt(r.eps),
                    str(r.count),
                    _fmt(r.diam),
                    _fmt(r.hausdorff_to_floor),
                    _fmt(r.mu_hat),
                    _fmt(r.wallclock_ms) if timing else "",
                ]
            )
        )
    return "\n".join(lines) + "\n"
