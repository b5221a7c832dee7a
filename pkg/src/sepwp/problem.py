"""Perturbed split equilibrium instances, residuals and sampled property checks."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import geometry as geo
from .expr import Expression, evaluate_array, free_vars

# upper bound on elements materialized per evaluation block
_BLOCK_ELEMS = 1 << 21

# slack on the parameter-ball radius test
BALL_TOL = 1e-12

ROLES = {"f": ("z", "x"), "g": ("w", "y")}


@dataclass(frozen=True)
class PerturbedSEP:
    """A perturbed split equilibrium problem over boxes.

    ``f_tilde`` is a bifunction of ``(p, z, x)``, ``g_tilde`` of ``(p, w, y)``;
    the nominal problem is recovered at ``p = p_star``. The parameter set is the
    closed Euclidean ball of radius ``m_radius`` around ``p_star``.
    """

    dim1: int
    dim2: int
    pdim: int
    C: geo.Box
    Q: geo.Box
    A: np.ndarray
    f_tilde: Expression
    g_tilde: Expression
    p_star: np.ndarray
    m_radius: float
    name: str = ""

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        p_star = np.atleast_1d(np.asarray(self.p_star, dtype=float))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "p_star", p_star)
        if min(self.dim1, self.dim2, self.pdim) < 1:
            raise ValueError("dimensions must be positive")
        if self.C.dim != self.dim1:
            raise ValueError(f"C has dimension {self.C.dim}, expected {self.dim1}")
        if self.Q.dim != self.dim2:
            raise ValueError(f"Q has dimension {self.Q.dim}, expected {self.dim2}")
        if A.shape != (self.dim2, self.dim1):
            raise ValueError(f"A has shape {A.shape}, expected {(self.dim2, self.dim1)}")
        if not np.all(np.isfinite(A)):
            raise ValueError("A must have finite entries")
        if p_star.shape != (self.pdim,):
            raise ValueError(f"p_star has length {p_star.shape[0]}, expected {self.pdim}")
        if not self.m_radius > 0:
            raise ValueError("m_radius must be positive")
        limits = {"p": self.pdim, "z": self.dim1, "x": self.dim1, "w": self.dim2, "y": self.dim2}
        for label, expr, allowed in (("f_tilde", self.f_tilde, "pzx"), ("g_tilde", self.g_tilde, "pwy")):
            for ns, idx in sorted(free_vars(expr)):
                if ns not in allowed:
                    raise ValueError(f"{label} may only use variables {', '.join(allowed)}; found {ns}{idx}")
                if idx > limits[ns]:
                    raise ValueError(f"{label} uses {ns}{idx} but that namespace has dimension {limits[ns]}")

    def expression(self, role: str) -> Expression:
        return self.f_tilde if role == "f" else self.g_tilde

    def domain(self, role: str) -> geo.Box:
        return self.C if role == "f" else self.Q

    def in_parameter_ball(self, p) -> bool:
        return geo.norm(np.asarray(p, dtype=float) - self.p_star) <= self.m_radius + BALL_TOL


@dataclass(frozen=True)
class Residual:
    r_f: float
    r_g: float
    r_link: float
    r_C: float
    r_Q: float

    def worst(self) -> float:
        return max(self.r_f, self.r_g, self.r_link, self.r_C, self.r_Q)

    def within(self, eps: float) -> bool:
        return self.worst() <= eps


def _check_role(role: str) -> None:
    if role not in ROLES:
        raise ValueError(f"role must be 'f' or 'g', got {role!r}")


def inequality_residuals(
    inst: PerturbedSEP,
    role: str,
    params: np.ndarray,
    points: np.ndarray,
    inner: np.ndarray,
    threads: int = 1,
) -> np.ndarray:
    """Table of ``max_{x in inner} -f~(p, z, x)`` over ``params x points``.

    Returns shape ``(len(params), len(points))``. ``inner`` is the finite grid
    standing in for the constraint set in the universal quantifier.
    """
    _check_role(role)
    expr = inst.expression(role)
    ns_pt, ns_in = ROLES[role]
    params = np.asarray(params, dtype=float).reshape(-1, inst.pdim)
    points = geo.as_cloud(points, inner.shape[1])
    n_p, n_z, n_x = params.shape[0], points.shape[0], inner.shape[0]
    out = np.empty((n_p, n_z))
    if n_p == 0 or n_z == 0:
        return out

    z_step = max(1, min(n_z, _BLOCK_ELEMS // max(n_x, 1)))
    p_step = max(1, _BLOCK_ELEMS // max(n_x * z_step, 1))
    tasks = [
        (slice(i, i + p_step), slice(j, j + z_step))
        for i in range(0, n_p, p_step)
        for j in range(0, n_z, z_step)
    ]
    inner_b = inner[None, None, :, :]

    def run(task):
        ps, zs = task
        vals = evaluate_array(
            expr,
            {"p": params[ps][:, None, None, :], ns_pt: points[zs][None, :, None, :], ns_in: inner_b},
        )
        vals = np.broadcast_to(vals, (params[ps].shape[0], points[zs].shape[0], n_x))
        out[ps, zs] = -vals.min(axis=2)

    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, tasks))
    else:
        for t in tasks:
            run(t)
    return out


def residual(inst: PerturbedSEP, p, z, w, h_inner: float) -> Residual:
    """Violation of each defining condition of the approximate solution set.

    ``(z, w)`` lies in the sampled ``S(eps)`` at parameter ``p`` exactly when
    every component is at most ``eps``.
    """
    if h_inner <= 0:
        raise ValueError("h_inner must be positive")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if p.shape != (inst.pdim,) or z.shape != (inst.dim1,) or w.shape != (inst.dim2,):
        raise ValueError("dimension mismatch between point and instance")
    if not inst.in_parameter_ball(p):
        raise ValueError(f"parameter {p.tolist()} lies outside the ball M")
    r_f = inequality_residuals(inst, "f", p[None], z[None], geo.grid_sample(inst.C, h_inner))[0, 0]
    r_g = inequality_residuals(inst, "g", p[None], w[None], geo.grid_sample(inst.Q, h_inner))[0, 0]
    r_link = geo.norm(w - geo.apply_operator(inst.A, z))
    return Residual(
        r_f=float(r_f),
        r_g=float(r_g),
        r_link=r_link,
        r_C=geo.distance_to_box(z, inst.C),
        r_Q=geo.distance_to_box(w, inst.Q),
    )


# ---------------------------------------------------------------------------
# Sampled hypothesis checks
# ---------------------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    witness: dict | None = None
    informational: bool = False
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.informational:
            status += " (informational)"
        text = f"{self.name:<22} {status:<22} worst={self.worst:.6g}"
        if self.witness and not self.passed:
            text += "  witness=" + ", ".join(f"{k}={v}" for k, v in self.witness.items())
        if self.note:
            text += f"  [{self.note}]"
        return text


def sample_ball(rng: np.random.Generator, center: np.ndarray, radius: float, n: int) -> np.ndarray:
    d = center.shape[0]
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return center + g * r[:, None]


def sample_box(rng: np.random.Generator, box: geo.Box, n: int) -> np.ndarray:
    return box.lower + (box.upper - box.lower) * rng.random((n, box.dim))


def _f(inst, role, p, first, second):
    a, b = ROLES[role]
    return evaluate_array(inst.expression(role), {"p": p, a: first, b: second})


def _witness(**arrays) -> dict:
    return {k: np.round(np.atleast_1d(v), 12).tolist() for k, v in arrays.items()}


def check_monotone(expr: Expression, role: str, inst: PerturbedSEP, n_samples: int, seed: int, tol: float = 1e-9) -> CheckResult:
    """Sampled ``f~(p,a,b) + f~(p,b,a) <= tol`` with ``p`` in M and ``a, b`` in the domain."""
    _check_role(role)
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    inst = _with_expr(inst, role, expr)
    rng = np.random.default_rng(seed)
    dom = inst.domain(role)
    p = sample_ball(rng, inst.p_star, inst.m_radius, n_samples)
    a = sample_box(rng, dom, n_samples)
    b = sample_box(rng, dom, n_samples)
    s = np.broadcast_to(_f(inst, role, p, a, b) + _f(inst, role, p, b, a), (n_samples,))
    i = int(np.argmax(s))
    return CheckResult(f"monotone_{role}", bool(s[i] <= tol), float(s[i]), _witness(p=p[i], a=a[i], b=b[i]))


def check_diag_nonneg(expr: Expression, role: str, inst: PerturbedSEP, n_samples: int, seed: int, tol: float = 1e-9) -> CheckResult:
    """Sampled ``f~(p*, x, x) >= -tol``; worst is the smallest diagonal value."""
    _check_role(role)
    inst = _with_expr(inst, role, expr)
    rng = np.random.default_rng(seed)
    x = sample_box(rng, inst.domain(role), n_samples)
    v = np.broadcast_to(_f(inst, role, inst.p_star, x, x), (n_samples,))
    i = int(np.argmin(v))
    return CheckResult(f"diag_nonneg_{role}", bool(v[i] >= -tol), float(v[i]), _witness(x=x[i]))


def check_convex_third(expr: Expression, role: str, inst: PerturbedSEP, n_samples: int, seed: int, tol: float = 1e-9) -> CheckResult:
    """Sampled midpoint convexity in the third argument; worst is the largest midpoint gap."""
    _check_role(role)
    inst = _with_expr(inst, role, expr)
    rng = np.random.default_rng(seed)
    dom = inst.domain(role)
    p = sample_ball(rng, inst.p_star, inst.m_radius, n_samples)
    z = sample_box(rng, dom, n_samples)
    a = sample_box(rng, dom, n_samples)
    b = sample_box(rng, dom, n_samples)
    mid = _f(inst, role, p, z, (a + b) / 2)
    avg = (_f(inst, role, p, z, a) + _f(inst, role, p, z, b)) / 2
    gap = np.broadcast_to(mid - avg, (n_samples,))
    i = int(np.argmax(gap))
    return CheckResult(f"convex_in_3rd_{role}", bool(gap[i] <= tol), float(gap[i]), _witness(p=p[i], z=z[i], a=a[i], b=b[i]))


DEFAULT_T_GRID = tuple(10.0**-k for k in range(1, 9))


def check_hemicontinuity(
    expr: Expression,
    role: str,
    inst: PerturbedSEP,
    n_samples: int,
    seed: int,
    t_grid=DEFAULT_T_GRID,
    tol: float = 1e-5,
) -> CheckResult:
    """Sampled upper semicontinuity of ``t -> f~(p*, x + t(y - x), y)`` at ``t = 0+``.

    The gap ``f~(p*, x + t(y-x), y) - f~(p*, x, y)`` is taken at the smallest
    ``t`` of ``t_grid``; for a continuous expression it shrinks like ``t``, a
    jump keeps it bounded away from zero. ``tol`` must exceed the Lipschitz
    slope times ``min(t_grid)``. Random segments miss isolated jumps, so the
    first few segments start at the corners of the domain.
    """
    _check_role(role)
    inst = _with_expr(inst, role, expr)
    rng = np.random.default_rng(seed)
    dom = inst.domain(role)
    x = sample_box(rng, dom, n_samples)
    y = sample_box(rng, dom, n_samples)
    # start some segments at the box corners, where step-like jumps tend to sit
    corners = geo.product_lattice([np.array([lo, hi]) for lo, hi in zip(dom.lower, dom.upper)])
    m = min(corners.shape[0], n_samples // 2)
    x[:m] = corners[:m]
    t = float(min(t_grid))
    base = _f(inst, role, inst.p_star, x, y)
    moved = _f(inst, role, inst.p_star, x + t * (y - x), y)
    gap = np.broadcast_to(moved - base, (n_samples,))
    i = int(np.argmax(gap))
    return CheckResult(f"hemicontinuity_{role}", bool(gap[i] <= tol), float(gap[i]), _witness(x=x[i], y=y[i], t=t))


@dataclass
class MintyResult:
    passed: bool
    mismatches: int
    primal_count: int
    dual_count: int
    informational: bool
    primal: np.ndarray = field(repr=False)
    dual: np.ndarray = field(repr=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.informational:
            status += " (informational)"
        return (
            f"{'minty_f':<22} {status:<22} mismatches={self.mismatches} "
            f"primal={self.primal_count} dual={self.dual_count}"
        )


def check_minty(inst: PerturbedSEP, h: float, tol: float, role: str = "f") -> MintyResult:
    """Compare the primal and dual (Minty) solution sets on a grid of the domain at ``p*``.

    primal = {z : f(z, x) >= -tol for all grid x}, dual = {z : f(x, z) <= tol for
    all grid x}. Their agreement needs monotonicity and a nonnegative diagonal;
    both are checked exactly on the grid pairs and, if violated, the result is
    flagged informational and a warning is issued.
    """
    _check_role(role)
    grid = geo.grid_sample(inst.domain(role), h)
    n = grid.shape[0]
    a, b = ROLES[role]
    F = evaluate_array(inst.expression(role), {"p": inst.p_star, a: grid[:, None, :], b: grid[None, :, :]})
    F = np.broadcast_to(F, (n, n))
    monotone = bool(np.max(F + F.T) <= tol)
    diag = bool(np.min(np.diagonal(F)) >= -tol)
    informational = not (monotone and diag)
    if informational:
        warnings.warn(
            "bifunction is not monotone with nonnegative diagonal on the grid; "
            "primal/dual agreement is not expected",
            stacklevel=2,
        )
    primal = F.min(axis=1) >= -tol
    dual = F.max(axis=0) <= tol
    mism = int(np.count_nonzero(primal != dual))
    return MintyResult(
        passed=mism == 0,
        mismatches=mism,
        primal_count=int(primal.sum()),
        dual_count=int(dual.sum()),
        informational=informational,
        primal=grid[primal],
        dual=grid[dual],
    )


def _with_expr(inst: PerturbedSEP, role: str, expr: Expression) -> PerturbedSEP:
    if expr is inst.expression(role):
        return inst
    kw = {"f_tilde": expr} if role == "f" else {"g_tilde": expr}
    return replace(inst, **kw)


@dataclass
class PropertyReport:
    """Sampled evidence for the structural hypotheses; not a proof."""

    monotone_f: CheckResult
    monotone_g: CheckResult
    diag_nonneg_f: CheckResult
    diag_nonneg_g: CheckResult
    convex_in_3rd_f: CheckResult
    convex_in_3rd_g: CheckResult
    hemicontinuity_f: CheckResult
    hemicontinuity_g: CheckResult
    minty_f: MintyResult
    samples_used: int
    seed: int

    def checks(self) -> list:
        return [
            self.monotone_f,
            self.monotone_g,
            self.diag_nonneg_f,
            self.diag_nonneg_g,
            self.convex_in_3rd_f,
            self.convex_in_3rd_g,
            self.hemicontinuity_f,
            self.hemicontinuity_g,
        ]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks()) and (self.minty_f.passed or self.minty_f.informational)

    def text(self) -> str:
        lines = [f"sampled evidence (seed={self.seed}, samples={self.samples_used})"]
        lines += [c.line() for c in self.checks()]
        lines.append(self.minty_f.line())
        return "\n".join(lines)


def property_report(inst: PerturbedSEP, n_samples: int = 1000, seed: int = 0, h: float = 0.01, tol: float = 1e-9) -> PropertyReport:
    checks = {}
    for role in ("f", "g"):
        e = inst.expression(role)
        checks[f"monotone_{role}"] = check_monotone(e, role, inst, n_samples, seed, tol)
        checks[f"diag_nonneg_{role}"] = check_diag_nonneg(e, role, inst, n_samples, seed, tol)
        checks[f"convex_in_3rd_{role}"] = check_convex_third(e, role, inst, n_samples, seed, tol)
        checks[f"hemicontinuity_{role}"] = check_hemicontinuity(e, role, inst, n_samples, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        minty = check_minty(inst, h, 2 * h)
    return PropertyReport(**checks, minty_f=minty, samples_used=n_samples, seed=seed)
