"""Acceptance criteria, one test (or clause) per criterion.

Each test prints a ``PASS``/``FAIL`` line as it finishes so the suite output
reads as a checklist.
"""

from __future__ import annotations

import math
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest
from click.testing import CliRunner

import instances
import oracles
from sepwp import geometry as geo
from sepwp.analysis import compute_S_eps, solution_floor, sweep
from sepwp.cli import main
from sepwp.config import hand_sequence_ex1
from sepwp.problem import check_minty
from sepwp.sequences import convergence_profile, generate, steps_from_json, verify

SQRT2 = math.sqrt(2.0)
EX2_SOLUTIONS = np.array([[-1.0, -1.0], [1.0, 1.0]])


@contextmanager
def criterion(label: str):
    try:
        yield
    except BaseException:
        sys.__stdout__.write(f"\n[acceptance] FAIL  {label}\n")
        raise
    sys.__stdout__.write(f"\n[acceptance] PASS  {label}\n")


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    runner = CliRunner()
    for name in ("ex1", "ex2"):
        assert runner.invoke(main, ["example", name, str(out)]).exit_code == 0
    return out


@pytest.fixture(scope="module")
def ex2_sweep():
    plan = instances.plan(0.01, 0.02)
    t0 = time.perf_counter()
    res = sweep(instances.instance("ex2"), plan, [0.2, 0.1, 0.05], k=2, keep_sets=True)
    return res, time.perf_counter() - t0


def test_c1_ex1_diameter_bound():
    with criterion("1  ex1 diam(S(eps)) <= 2.5 eps + 4h, strictly decreasing, < 10 s"):
        h = 0.005
        t0 = time.perf_counter()
        res = sweep(instances.instance("ex1"), instances.plan(h, 0.02), [0.2, 0.1, 0.05, 0.02])
        elapsed = time.perf_counter() - t0
        diams = res.column("diam")
        for eps, d in zip(res.eps_list, diams):
            assert d <= 2.5 * eps + 4 * h, (eps, d)
        assert all(b < a for a, b in zip(diams, diams[1:])), diams
        assert elapsed < 10.0, elapsed


def test_c2_ex1_classification(bundle):
    with criterion("2  ex1 sweep prints LPWellPosed; floor within 0.03 of (0,0)"):
        res = CliRunner().invoke(main, ["sweep", "--config", str(bundle / "ex1.json")])
        assert res.exit_code == 0
        assert res.output.strip().splitlines()[-1] == "LPWellPosed"
        cfg = instances.config("ex1")
        floor = solution_floor(cfg.instance, cfg.plan)
        assert floor.shape[0] > 0
        assert max(oracles.dist(m, (0.0, 0.0)) for m in floor.tolist()) <= 0.03


def test_c3a_ex2_floor_clusters():
    with criterion("3a ex2 floor (eps_floor 0.02, h 0.01) clusters within 0.06 of (-1,-1), (1,1)"):
        floor = solution_floor(instances.instance("ex2"), instances.plan(0.01, 0.02))
        _, labels = geo.kuratowski_partition(floor, 2)
        centroids = np.array([floor[labels == c].mean(axis=0) for c in np.unique(labels)])
        assert centroids.shape[0] == 2
        d = np.array([[oracles.dist(c, s) for s in EX2_SOLUTIONS] for c in centroids])
        best = min(max(d[0, 0], d[1, 1]), max(d[0, 1], d[1, 0]))
        assert best <= 0.06, d


def test_c3b_ex2_hausdorff_decreasing(ex2_sweep):
    res, elapsed = ex2_sweep
    with criterion("3b ex2 H(S(eps), floor) <= 0.1 at eps 0.05 and decreasing"):
        haus = res.column("hausdorff_to_floor")
        assert haus[-1] <= 0.1, haus
        assert all(b < a for a, b in zip(haus, haus[1:])), haus
        assert elapsed < 60.0


def test_c3c_ex2_diameter_does_not_vanish(ex2_sweep):
    res, _ = ex2_sweep
    with criterion("3c ex2 diam(S(eps)) within 2*sqrt(2) +/- 0.15 over {0.2, 0.1, 0.05}"):
        diams = res.column("diam")
        assert all(abs(d - 2 * SQRT2) <= 0.15 for d in diams), diams


def test_c3d_ex2_classification(bundle):
    with criterion("3d ex2 sweep prints GeneralizedLPWellPosed"):
        t0 = time.perf_counter()
        res = CliRunner().invoke(main, ["sweep", "--config", str(bundle / "ex2.json")])
        assert res.exit_code == 0
        assert res.output.strip().splitlines()[-1] == "GeneralizedLPWellPosed"
        assert time.perf_counter() - t0 < 60.0


def test_c4_nestedness():
    with criterion("4  S(eps) member lists nest along descending schedules (exact)"):
        schedule = [0.2, 0.15, 0.1, 0.07, 0.05, 0.025, 0.0125]
        for name in ("ex1", "ex2"):
            cfg = instances.config(name)
            sets = [
                {tuple(r) for r in compute_S_eps(cfg.instance, cfg.plan, e).members.tolist()} for e in schedule
            ]
            for big, small in zip(sets, sets[1:]):
                assert small <= big, name


def test_c5_minty_equivalence():
    with criterion("5  ex1 primal and Minty grid sets coincide at p* (tol = 2h)"):
        h = 0.01
        res = check_minty(instances.instance("ex1"), h, 2 * h)
        assert not res.informational
        assert res.mismatches == 0
        assert {tuple(r) for r in res.primal.tolist()} == {tuple(r) for r in res.dual.tolist()}
        assert res.passed


def test_c6_sequence_round_trip():
    with criterion("6  verify(generate(ex1, 0.2/2^n, 5 steps)) passes generalized; profile tail <= 0.03"):
        cfg = instances.config("ex1")
        schedule = [0.2 / 2**n for n in range(1, 6)]
        steps = generate(cfg.instance, cfg.plan, schedule, [-0.5, -0.5])
        assert len(steps) == 5
        assert verify(cfg.instance, steps, "generalized", cfg.plan.h_inner).passed
        floor = solution_floor(cfg.instance, cfg.plan)
        assert convergence_profile(steps, floor)[-1] <= 0.03


def test_c7_hand_built_sequence():
    with criterion("7  hand-built sequence passes (eps_n = 3/n), fails on f (eps_n = 1/(2n))"):
        inst = instances.instance("ex1")
        good = steps_from_json(hand_sequence_ex1(50, 3.0))
        assert verify(inst, good, "approximating").passed
        bad = steps_from_json(hand_sequence_ex1(50, 0.5))
        rep = verify(inst, bad, "approximating")
        assert not rep.passed
        assert "f" in rep.failed_conditions


def test_c8_geometry_oracles():
    with criterion("8  geometry matches brute force on 200 clouds; partition inequality holds"):
        rng = np.random.default_rng(2024)
        checked = 0
        for _ in range(200):
            dim = int(rng.integers(1, 4))
            a = rng.normal(size=(int(rng.integers(1, 9)), dim))
            b = rng.normal(size=(int(rng.integers(1, 9)), dim))
            la, lb = a.tolist(), b.tolist()
            assert geo.diameter(a) == oracles.diameter(la)
            assert geo.directed_distance(a, b) == oracles.directed(la, lb)
            assert geo.directed_distance(b, a) == oracles.directed(lb, la)
            assert geo.hausdorff(a, b) == oracles.hausdorff(la, lb)
            h = geo.hausdorff(a, b)
            for k in (1, 2, 3):
                assert geo.kuratowski_exhaustive(a, k) <= 2 * h + geo.kuratowski_exhaustive(b, k)
                checked += 1
        assert checked == 600


def test_c9_determinism(bundle, tmp_path):
    with criterion("9  ex2 sweep CSV byte-identical with --threads 1 and --threads 8"):
        runner = CliRunner()
        outs = []
        for threads in ("1", "8"):
            out = tmp_path / f"t{threads}.csv"
            res = runner.invoke(
                main, ["sweep", "--config", str(bundle / "ex2.json"), "--out", str(out), "--threads", threads]
            )
            assert res.exit_code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
