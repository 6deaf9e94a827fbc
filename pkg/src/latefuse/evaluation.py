"""Ranking of fused scores and mean average precision at a cutoff.

Samples are grouped per video, ranked by fused score within each group, and
scored with AP@k against binary relevance.  MAP@k is the arithmetic mean of
the per-video AP values over videos that contain at least one relevant item;
videos with no relevant item cannot score and are excluded from the mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .ingestion import ScoreMatrix


class UndefinedMetricError(ValueError):
    """Every group has zero relevant items, so the mean AP has no terms."""


@dataclass
class RankedList:
    """One video's items sorted by fused score desc, ties by image_id asc."""

    group_id: str
    items: list[tuple[str, float, int]]  # (image_id, fused_score, relevance)

    @property
    def num_relevant(self) -> int:
        return sum(rel for _, _, rel in self.items)


@dataclass
class EvalReport:
    map_at_k: float
    k: int
    per_group: list[tuple[str, float, int]]  # (video_id, ap_at_k, num_relevant)

    def to_dict(self) -> dict:
        return {
            "map_at_k": self.map_at_k,
            "k": self.k,
            "per_group": [
                {"video_id": vid, "ap_at_k": ap, "num_relevant": rel}
                for vid, ap, rel in self.per_group
            ],
        }

    def save_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    def save_csv(self, path: str | Path) -> None:
        lines = [f"video_id,ap_at_{self.k},num_relevant"]
        for vid, ap, rel in self.per_group:
            lines.append(f"{vid},{ap!r},{rel}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def rank(group: Sequence[tuple[str, float, int]], group_id: str = "") -> RankedList:
    """Order one group's items deterministically for precision-at-cutoff."""
    if not group:
        raise ValueError("cannot rank an empty group")
    for image_id, _, rel in group:
        if rel not in (0, 1):
            raise ValueError(f"relevance must be binary, got {rel!r} for {image_id!r}")
    items = sorted(group, key=lambda item: (-item[1], item[0]))
    return RankedList(group_id, items)


def average_precision_at_k(ranked: RankedList, k: int) -> float:
    """AP@k = (1/min(R, k)) * sum over the top min(k, len) ranks of P@r * rel(r).

    R counts relevant items in the whole group, so a relevant item pushed
    below the cutoff still penalizes the score.  Returns 0.0 when R == 0;
    such groups are excluded from the MAP mean by the caller.
    """
    if k < 1:
        raise ValueError(f"cutoff must be >= 1, got {k}")
    total_relevant = ranked.num_relevant
    if total_relevant == 0:
        return 0.0
    hits = 0
    acc = 0.0
    for r in range(1, min(k, len(ranked.items)) + 1):
        if ranked.items[r - 1][2] == 1:
            hits += 1
            acc += hits / r
    return acc / min(total_relevant, k)


def map_at_k(fused: np.ndarray | Sequence[float], matrix: ScoreMatrix, k: int = 10) -> EvalReport:
    """Group matrix rows per video, rank each group, and average AP@k."""
    fused = np.asarray(fused, dtype=np.float64)
    if fused.shape != (matrix.n_samples,):
        raise ValueError(f"fused scores have shape {fused.shape}, expected ({matrix.n_samples},)")
    if k < 1:
        raise ValueError(f"cutoff must be >= 1, got {k}")

    groups: dict[str, list[tuple[str, float, int]]] = {}
    order: list[str] = []
    for i, (vid, iid) in enumerate(matrix.sample_keys):
        label = matrix.labels[i]
        if label not in (0.0, 1.0):
            raise ValueError(f"relevance must be binary, got {label!r} for {(vid, iid)}")
        if vid not in groups:
            groups[vid] = []
            order.append(vid)
        groups[vid].append((iid, float(fused[i]), int(label)))

    per_group: list[tuple[str, float, int]] = []
    included: list[float] = []
    for vid in order:
        ranked = rank(groups[vid], vid)
        ap = average_precision_at_k(ranked, k)
        rel = ranked.num_relevant
        per_group.append((vid, ap, rel))
        if rel >= 1:
            included.append(ap)
    if not included:
        raise UndefinedMetricError("no group has a relevant item; MAP@k is undefined")
    return EvalReport(sum(included) / len(included), k, per_group)
