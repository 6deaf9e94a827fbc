#!/usr/bin/env python
"""Seven-method comparison at full experiment scale (1877x29 dev, 558x29 test).

Generates the synthetic dataset pair, runs every registered method through
the CLI pipeline, and prints the summary table plus total wall time.
"""

from __future__ import annotations

import argparse
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from latefuse.cli import RunManifest, compare
from latefuse.optimizers import METHODS
from latefuse.synth import SynthSpec, generate


def build_dataset(root: Path, seed: int) -> tuple[Path, Path, list[Path]]:
    w_star = np.random.default_rng(seed).uniform(0.05, 1.0, size=29)
    dev = generate(
        SynthSpec(1877, 29, 30, seed=seed, planted_weights=w_star.tolist(),
                  noise_sigma=0.05, key_prefix="d"),
        root / "dev",
    )
    test = generate(
        SynthSpec(558, 29, 10, seed=seed + 1, planted_weights=w_star.tolist(),
                  noise_sigma=0.05, key_prefix="t"),
        root / "test",
    )
    return root / "dev", root / "test", [dev.truth_path, test.truth_path]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="work directory (default: temp)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--budget-scale",
        type=float,
        default=1.0,
        help="multiply the stochastic methods' stagnation windows by this factor",
    )
    args = parser.parse_args()

    root = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="latefuse_full_scale_"))
    root.mkdir(parents=True, exist_ok=True)
    dev_dir, test_dir, truth_paths = build_dataset(root, args.seed)

    overrides: dict = {}
    if args.budget_scale != 1.0:
        window = max(1, int(100 * args.budget_scale))
        overrides["pso.stagnation_window"] = window
        overrides["ga.stagnation_window"] = window

    manifests = []
    for method in METHODS:
        scoped = {
            key.split(".", 1)[1]: value
            for key, value in overrides.items()
            if key.startswith(method + ".")
        }
        manifests.append(
            RunManifest(
                method=method,
                dev_paths=[str(dev_dir)],
                test_paths=[str(test_dir)],
                truth_paths=[str(p) for p in truth_paths],
                out_dir=str(root / "artifacts" / method),
                k=10,
                seed=args.seed,
                overrides=scoped,
            )
        )

    started = time.perf_counter()
    results = compare(manifests, root / "artifacts")
    elapsed = time.perf_counter() - started

    print(f"\n{'method':<14} {'dev_mse':>12} {'map@10':>9} {'evals':>10} {'secs':>8}")
    for r in results:
        print(
            f"{r.manifest.method:<14} {r.report.best_objective:>12.6f} "
            f"{r.eval_report.map_at_k:>9.4f} {r.report.function_evaluations:>10} "
            f"{r.wall_time:>8.2f}"
        )
    print(f"\ntotal wall time: {elapsed:.1f}s; artifacts in {root / 'artifacts'}")
    return 0 if elapsed < 600 else 1


if __name__ == "__main__":
    sys.exit(main())
