"""Independent pure-Python reference implementations used by the tests."""

from __future__ import annotations

import itertools
import math


def dist(a, b) -> float:
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))


def diameter(points) -> float:
    pts = [tuple(p) for p in points]
    return max((dist(a, b) for a in pts for b in pts), default=0.0)


def directed(a, b) -> float:
    return max((min(dist(x, y) for y in b) for x in a), default=0.0)


def hausdorff(a, b) -> float:
    return max(directed(a, b), directed(b, a))


def partition_value(points, k: int) -> float:
    """Exact min over all labelings into at most k parts of the max part diameter."""
    pts = [tuple(p) for p in points]
    if not pts:
        return 0.0
    best = math.inf
    for labels in itertools.product(range(k), repeat=len(pts)):
        parts = [[p for p, l in zip(pts, labels) if l == c] for c in range(k)]
        best = min(best, max(diameter(part) for part in parts))
    return best


def box_distance(x, lower, upper) -> float:
    return dist(x, [min(max(v, lo), hi) for v, lo, hi in zip(x, lower, upper)])


def membership(inst, h_candidate, h_inner, h_param, eps, z, w, evaluate, grid_sample):
    """Literal transcription of the sampled approximate-solution-set test.

    Loops over the parameter lattice ``p* + h_param * k`` and the inner grids one
    point at a time; returns the set of certifying parameters (as tuples).
    """
    import numpy as np

    if box_distance(z, inst.C.lower, inst.C.upper) > eps or box_distance(w, inst.Q.lower, inst.Q.upper) > eps:
        return []
    az = [sum(float(inst.A[i, j]) * z[j] for j in range(len(z))) for i in range(len(w))]
    if dist(w, az) > eps:
        return []
    r = min(eps, inst.m_radius)
    kmax = int(math.floor(r / h_param + 1e-9))
    inner_c = grid_sample(inst.C, h_inner)
    inner_q = grid_sample(inst.Q, h_inner)
    found = []
    for k in itertools.product(range(-kmax, kmax + 1), repeat=inst.pdim):
        if sum(c * c for c in k) > (r / h_param) ** 2 * (1 + 1e-12) + 1e-9:
            continue
        p = [float(inst.p_star[i]) + h_param * k[i] for i in range(inst.pdim)]
        ok_f = all(
            evaluate(inst.f_tilde, {"p": np.array(p), "z": np.array(z), "x": x}) >= -eps for x in inner_c
        )
        ok_g = ok_f and all(
            evaluate(inst.g_tilde, {"p": np.array(p), "w": np.array(w), "y": y}) >= -eps for y in inner_q
        )
        if ok_g:
            found.append(tuple(p))
    return found
