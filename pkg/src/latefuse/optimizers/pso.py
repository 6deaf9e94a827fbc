"""Global-best particle swarm search over the weight box."""

from __future__ import annotations

import numpy as np

from ..fusion import Objective
from .common import (
    CountingObjective,
    Incumbent,
    OptimizerConfig,
    OptimizerReport,
    equal_start,
    make_report,
    resolve_params,
)

DEFAULTS = {
    "swarm_size": 300,
    "inertia": 0.729,
    "cognitive": 1.49445,
    "social": 1.49445,
    "stagnation_window": 100,
}


def optimize_pso(objective: Objective, config: OptimizerConfig) -> OptimizerReport:
    p = resolve_params(config, DEFAULTS)
    swarm_size = int(p["swarm_size"])
    window = int(p["stagnation_window"])
    if swarm_size < 1:
        raise ValueError("swarm_size must be >= 1")

    rng = np.random.default_rng(config.seed)
    lo, hi, m = config.lower_bound, config.upper_bound, config.dimension
    counting = CountingObjective(objective)
    incumbent = Incumbent(counting)

    positions = rng.uniform(lo, hi, size=(swarm_size, m))
    positions[0] = equal_start(config)  # the uniform baseline always participates
    velocities = np.zeros((swarm_size, m))
    vmax = hi - lo

    values = counting.value_batch(positions)
    pbest = positions.copy()
    pbest_values = values.copy()
    # score the seeded equal-weights particle through the scalar path first,
    # so the final best can never fall behind the baseline by a rounding ulp
    incumbent.consider(positions[0], 0)
    incumbent.consider(pbest[int(np.argmin(pbest_values))], 0)

    anchor = incumbent.best_f
    since_improvement = 0
    converged = False
    iterations = 0
    for it in range(1, config.max_iterations + 1):
        iterations = it
        r1 = rng.random((swarm_size, m))
        r2 = rng.random((swarm_size, m))
        velocities = (
            p["inertia"] * velocities
            + p["cognitive"] * r1 * (pbest - positions)
            + p["social"] * r2 * (incumbent.best_x - positions)
        )
        np.clip(velocities, -vmax, vmax, out=velocities)
        positions = np.clip(positions + velocities, lo, hi)

        values = counting.value_batch(positions)
        better = values < pbest_values
        pbest[better] = positions[better]
        pbest_values[better] = values[better]

        b = int(np.argmin(pbest_values))
        if pbest_values[b] < incumbent.best_f:
            incumbent.consider(pbest[b], it)

        if anchor - incumbent.best_f >= config.tolerance:
            anchor = incumbent.best_f
            since_improvement = 0
        else:
            since_improvement += 1
            if window > 0 and since_improvement >= window:
                converged = True
                break

    return make_report("pso", config, incumbent, counting, iterations, converged)
