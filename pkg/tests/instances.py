"""Instance builders shared by the tests."""

from __future__ import annotations

import copy

from sepwp.analysis import SamplingPlan
from sepwp.config import EXAMPLES, config_from_dict


def doc(name: str, **overrides) -> dict:
    d = copy.deepcopy(EXAMPLES[name])
    plan = overrides.pop("plan", None)
    d.update(overrides)
    if plan:
        d["plan"] = {**d["plan"], **plan}
    return d


def config(name: str, **overrides):
    return config_from_dict(doc(name, **overrides))


def instance(name: str, **overrides):
    return config(name, **overrides).instance


def plan(h: float, eps_floor: float) -> SamplingPlan:
    return SamplingPlan(h_candidate=h, h_inner=h, h_param=h, eps_floor=eps_floor)
