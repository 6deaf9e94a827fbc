"""Dogleg trust-region method on a BFGS quadratic model, projected to the box."""

from __future__ import annotations

import math

import numpy as np

from ..fusion import Objective
from .common import (
    CountingObjective,
    Incumbent,
    OptimizerConfig,
    OptimizerReport,
    equal_start,
    make_report,
    projected_gradient_norm,
    resolve_params,
)

DEFAULTS = {
    "initial_radius": 1.0,
    "max_radius": None,  # defaults to sqrt(dimension) * span
    "acceptance_threshold": 1e-4,
}

_MIN_RADIUS = 1e-14


def _dogleg(g: np.ndarray, hessian: np.ndarray, radius: float) -> np.ndarray:
    """Dogleg step for min g.s + 0.5 s.B.s subject to |s| <= radius."""
    try:
        newton = np.linalg.solve(hessian, -g)
    except np.linalg.LinAlgError:
        newton = None
    if newton is not None and np.all(np.isfinite(newton)):
        if float(np.linalg.norm(newton)) <= radius:
            return newton
    else:
        newton = None

    g_norm_sq = float(g @ g)
    curvature = float(g @ hessian @ g)
    if curvature <= 0 or not math.isfinite(curvature):
        return -(radius / math.sqrt(g_norm_sq)) * g
    cauchy = -(g_norm_sq / curvature) * g
    cauchy_norm = float(np.linalg.norm(cauchy))
    if cauchy_norm >= radius or newton is None:
        return -(radius / math.sqrt(g_norm_sq)) * g

    # walk from the Cauchy point toward the Newton point until the boundary
    leg = newton - cauchy
    a = float(leg @ leg)
    b = 2.0 * float(cauchy @ leg)
    c = cauchy_norm**2 - radius**2
    disc = max(b * b - 4 * a * c, 0.0)
    t = (-b + math.sqrt(disc)) / (2 * a)
    return cauchy + min(max(t, 0.0), 1.0) * leg


def optimize_trust_region(objective: Objective, config: OptimizerConfig) -> OptimizerReport:
    p = resolve_params(config, DEFAULTS)
    lo, hi, m = config.lower_bound, config.upper_bound, config.dimension
    radius = float(p["initial_radius"])
    max_radius = p["max_radius"]
    if max_radius is None:
        max_radius = math.sqrt(m) * config.span
    eta = float(p["acceptance_threshold"])

    counting = CountingObjective(objective)
    incumbent = Incumbent(counting)
    x = equal_start(config)
    f = counting.value(x)
    g = counting.gradient(x)
    hessian = np.eye(m)
    incumbent.consider(x, 0, value=f)

    converged = False
    iterations = 0
    for it in range(1, config.max_iterations + 1):
        iterations = it
        if projected_gradient_norm(x, g, lo, hi) <= config.tolerance:
            converged = True
            iterations = it - 1
            break

        step = _dogleg(g, hessian, radius)
        trial = np.clip(x + step, lo, hi)
        realized = trial - x
        if not np.any(realized):
            radius *= 0.25
            if radius < _MIN_RADIUS:
                break
            continue

        predicted = -(float(g @ realized) + 0.5 * float(realized @ hessian @ realized))
        f_trial = counting.value(trial)
        actual = f - f_trial
        rho = actual / predicted if predicted > 0 else -math.inf

        if rho < 0.25:
            radius *= 0.25
        elif rho > 0.75 and float(np.linalg.norm(realized)) >= 0.99 * radius:
            radius = min(2.0 * radius, max_radius)

        if rho > eta and actual > 0:
            g_trial = counting.gradient(trial)
            s = realized
            y = g_trial - g
            sy = float(s @ y)
            if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
                hs = hessian @ s
                hessian = (
                    hessian
                    + np.outer(y, y) / sy
                    - np.outer(hs, hs) / float(s @ hs)
                )
            x, f, g = trial, f_trial, g_trial
            incumbent.consider(x, it, value=f)

        if radius < _MIN_RADIUS:
            break

    return make_report("trust-region", config, incumbent, counting, iterations, converged)
