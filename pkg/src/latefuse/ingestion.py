"""Parsing and alignment of inducer score files into a normalized score matrix.

File formats
------------
Inducer file: UTF-8 CSV with header ``video_id,image_id,class,score``, one
record per line, LF line endings.  ``class`` is the inducer's own binary
prediction and is validated but not used downstream; ``score`` is the raw
(possibly out-of-range) interestingness prediction.

Ground-truth file: UTF-8 CSV with header ``video_id,image_id,label`` where
``label`` is the binary relevance judgment.

Normalization parameters persist as JSON ``{"<inducer>": {"min": x, "max": y}}``
so test-time scoring reuses dev-fitted ranges bit-exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

INDUCER_HEADER = "video_id,image_id,class,score"
TRUTH_HEADER = "video_id,image_id,label"

Key = tuple[str, str]


class IngestionError(Exception):
    """Base class for everything that can go wrong between files and matrix."""


class ParseError(IngestionError):
    """Malformed line; message carries the 1-based line number."""


class DuplicateKeyError(IngestionError):
    """A (video_id, image_id) pair appeared twice in one source."""


class AlignmentError(IngestionError):
    """Inducer tables do not cover an identical key set."""


class MissingLabelError(IngestionError):
    """A sample has scores but no ground-truth label."""


@dataclass(frozen=True)
class InducerRecord:
    video_id: str
    image_id: str
    class_label: int
    raw_score: float

    @property
    def key(self) -> Key:
        return (self.video_id, self.image_id)


@dataclass
class InducerTable:
    inducer_name: str
    records: list[InducerRecord]

    def keys(self) -> set[Key]:
        return {r.key for r in self.records}

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class GroundTruth:
    labels: dict[Key, int]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class ScoreMatrix:
    """n samples x m inducers, rows in lexicographic (video_id, image_id) order."""

    sample_keys: list[Key]
    labels: np.ndarray  # (n,) float64; binary when built from files
    inducer_names: list[str]
    scores: np.ndarray  # (n, m) float64

    @property
    def n_samples(self) -> int:
        return len(self.sample_keys)

    @property
    def n_inducers(self) -> int:
        return len(self.inducer_names)

    def samples(self) -> Iterator[tuple[str, str, float]]:
        for (vid, iid), label in zip(self.sample_keys, self.labels):
            yield vid, iid, float(label)


@dataclass
class NormalizationParams:
    """Per-inducer (min, max) fitted on a reference split."""

    ranges: dict[str, tuple[float, float]]

    def __post_init__(self) -> None:
        for name, (lo, hi) in self.ranges.items():
            if lo > hi:
                raise ValueError(f"normalization range for {name!r} has min > max")


def _decode_lines(source: IO[bytes] | IO[str]) -> Iterator[str]:
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    yield from data.splitlines()


def _parse_binary(token: str, field: str, lineno: int, where: str) -> int:
    token = token.strip()
    if token not in ("0", "1"):
        raise ParseError(f"{where}: {field} out of {{0,1}} at line {lineno}: {token!r}")
    return int(token)


def parse_inducer_file(source: IO[bytes] | IO[str], inducer_name: str) -> InducerTable:
    """Parse one inducer CSV into an InducerTable, in file order.

    Raises ParseError (naming the offending line), or DuplicateKeyError when a
    (video_id, image_id) pair repeats.
    """
    lines = list(_decode_lines(source))
    where = f"inducer {inducer_name!r}"
    if not lines:
        raise ParseError(f"{where}: empty file, expected header {INDUCER_HEADER!r}")
    if lines[0].strip() != INDUCER_HEADER:
        raise ParseError(f"{where}: bad header at line 1: {lines[0]!r}")

    records: list[InducerRecord] = []
    seen: set[Key] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ParseError(f"{where}: expected 4 fields, got {len(fields)} at line {lineno}")
        vid, iid, cls_tok, score_tok = (f.strip() for f in fields)
        cls = _parse_binary(cls_tok, "class", lineno, where)
        try:
            score = float(score_tok)
        except ValueError:
            raise ParseError(f"{where}: non-numeric score at line {lineno}: {score_tok!r}") from None
        if not math.isfinite(score):
            raise ParseError(f"{where}: non-finite score at line {lineno}: {score_tok!r}")
        key = (vid, iid)
        if key in seen:
            raise DuplicateKeyError(f"{where}: duplicate key {key} at line {lineno}")
        seen.add(key)
        records.append(InducerRecord(vid, iid, cls, score))
    return InducerTable(inducer_name, records)


def parse_ground_truth(source: IO[bytes] | IO[str], name: str = "ground truth") -> GroundTruth:
    """Parse a ground-truth CSV; every key must be unique."""
    lines = list(_decode_lines(source))
    if not lines:
        raise ParseError(f"{name}: empty file, expected header {TRUTH_HEADER!r}")
    if lines[0].strip() != TRUTH_HEADER:
        raise ParseError(f"{name}: bad header at line 1: {lines[0]!r}")

    labels: dict[Key, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise ParseError(f"{name}: expected 3 fields, got {len(fields)} at line {lineno}")
        vid, iid, label_tok = (f.strip() for f in fields)
        label = _parse_binary(label_tok, "label", lineno, name)
        key = (vid, iid)
        if key in labels:
            raise DuplicateKeyError(f"{name}: duplicate key {key} at line {lineno}")
        labels[key] = label
    return GroundTruth(labels)


def read_inducer_csv(path: str | Path) -> InducerTable:
    """Read an inducer file; the file stem becomes the inducer name."""
    path = Path(path)
    with path.open("rb") as fh:
        return parse_inducer_file(fh, path.stem)


def read_ground_truth_csv(path: str | Path) -> GroundTruth:
    path = Path(path)
    with path.open("rb") as fh:
        return parse_ground_truth(fh, name=str(path))


def load_ground_truth(paths: Sequence[str | Path]) -> GroundTruth:
    """Merge one or more truth files; a key repeated across files is an error."""
    merged: dict[Key, int] = {}
    for path in paths:
        truth = read_ground_truth_csv(path)
        for key, label in truth.labels.items():
            if key in merged:
                raise DuplicateKeyError(f"key {key} appears in more than one truth file")
            merged[key] = label
    return GroundTruth(merged)


def assemble(tables: Sequence[InducerTable], truth: GroundTruth) -> ScoreMatrix:
    """Align m inducer tables and the truth into one matrix.

    Rows are sorted by (video_id, image_id) so two ingestions of the same
    files are identical regardless of record order in the sources.
    """
    if not tables:
        raise AlignmentError("need at least one inducer table")

    reference = tables[0].keys()
    for table in tables[1:]:
        diff = reference.symmetric_difference(table.keys())
        if diff:
            offending = sorted(diff)[:10]
            raise AlignmentError(
                f"inducers {tables[0].inducer_name!r} and {table.inducer_name!r} "
                f"disagree on {len(diff)} keys, e.g. {offending}"
            )

    missing = reference.difference(truth.labels)
    if missing:
        offending = sorted(missing)[:10]
        raise MissingLabelError(f"{len(missing)} keys missing from ground truth, e.g. {offending}")

    keys = sorted(reference)
    index = {key: row for row, key in enumerate(keys)}
    n, m = len(keys), len(tables)
    scores = np.empty((n, m), dtype=np.float64)
    for col, table in enumerate(tables):
        for record in table.records:
            scores[index[record.key], col] = record.raw_score
    labels = np.array([float(truth.labels[key]) for key in keys], dtype=np.float64)
    return ScoreMatrix(keys, labels, [t.inducer_name for t in tables], scores)


def fit_minmax(matrix: ScoreMatrix) -> NormalizationParams:
    """Per-column min/max over all rows of the fitting split."""
    if matrix.n_samples < 1:
        raise ValueError("cannot fit normalization on an empty matrix")
    mins = matrix.scores.min(axis=0)
    maxs = matrix.scores.max(axis=0)
    ranges = {
        name: (float(mins[j]), float(maxs[j]))
        for j, name in enumerate(matrix.inducer_names)
    }
    return NormalizationParams(ranges)


def apply_minmax(params: NormalizationParams, matrix: ScoreMatrix) -> ScoreMatrix:
    """Rescale each column to [0,1] with the fitted range, clamping overshoot.

    A degenerate column (min == max) maps to all zeros, neutralizing that
    inducer instead of dividing by zero.
    """
    for name in matrix.inducer_names:
        if name not in params.ranges:
            raise ValueError(f"no normalization range for inducer {name!r}")

    out = np.empty_like(matrix.scores)
    for j, name in enumerate(matrix.inducer_names):
        lo, hi = params.ranges[name]
        if hi == lo:
            out[:, j] = 0.0
        else:
            out[:, j] = np.clip((matrix.scores[:, j] - lo) / (hi - lo), 0.0, 1.0)
    return ScoreMatrix(
        list(matrix.sample_keys),
        matrix.labels.copy(),
        list(matrix.inducer_names),
        out,
    )


def save_normalization(params: NormalizationParams, path: str | Path) -> None:
    doc = {name: {"min": lo, "max": hi} for name, (lo, hi) in params.ranges.items()}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_normalization(path: str | Path) -> NormalizationParams:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return NormalizationParams({name: (entry["min"], entry["max"]) for name, entry in doc.items()})


def write_inducer_csv(path: str | Path, table: InducerTable) -> None:
    """Write an inducer table in the exact on-disk format (full-precision scores)."""
    lines = [INDUCER_HEADER]
    for r in table.records:
        lines.append(f"{r.video_id},{r.image_id},{r.class_label},{r.raw_score!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_ground_truth_csv(path: str | Path, truth: GroundTruth, keys: Iterable[Key] | None = None) -> None:
    """Write a truth file; rows follow `keys` when given, else sorted key order."""
    ordered = list(keys) if keys is not None else sorted(truth.labels)
    lines = [TRUTH_HEADER]
    for key in ordered:
        lines.append(f"{key[0]},{key[1]},{truth.labels[key]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
