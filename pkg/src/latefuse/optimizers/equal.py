"""Uniform-weight baseline: no search, every inducer contributes 1/m."""

from __future__ import annotations

from ..fusion import Objective
from .common import CountingObjective, Incumbent, OptimizerConfig, OptimizerReport, equal_start, make_report


def optimize_equal(objective: Objective, config: OptimizerConfig) -> OptimizerReport:
    counting = CountingObjective(objective)
    incumbent = Incumbent(counting)
    incumbent.consider(equal_start(config), 0)
    return make_report("equal", config, incumbent, counting, iterations=0, converged=True)
