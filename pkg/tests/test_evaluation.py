import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from latefuse.evaluation import (
    RankedList,
    UndefinedMetricError,
    average_precision_at_k,
    map_at_k,
    rank,
)
from latefuse.ingestion import ScoreMatrix
from latefuse.synth import ap_oracle


def matrix_with(groups):
    """groups: {video_id: [(image_id, label), ...]} -> minimal ScoreMatrix."""
    keys, labels = [], []
    for vid, items in groups.items():
        for iid, label in items:
            keys.append((vid, iid))
            labels.append(float(label))
    n = len(keys)
    return ScoreMatrix(keys, np.array(labels), ["c0"], np.zeros((n, 1)))


def ranked(relevances, scores=None):
    if scores is None:
        scores = [float(len(relevances) - i) for i in range(len(relevances))]
    items = [(f"i{i}", scores[i], relevances[i]) for i in range(len(relevances))]
    return rank(items, group_id="g")


# ---------------------------------------------------------------- rank

def test_rank_orders_by_score_descending():
    out = rank([("a", 0.9, 0), ("b", 0.1, 0), ("c", 0.5, 1)])
    assert [item[0] for item in out.items] == ["a", "c", "b"]


def test_rank_breaks_ties_by_image_id():
    out = rank([("b", 0.5, 0), ("a", 0.5, 1)])
    assert [item[0] for item in out.items] == ["a", "b"]


def test_rank_single_item():
    out = rank([("only", 0.3, 1)])
    assert [item[0] for item in out.items] == ["only"]
    assert out.num_relevant == 1


def test_rank_rejects_nonbinary_relevance():
    with pytest.raises(ValueError):
        rank([("a", 0.5, 2)])


# ---------------------------------------------------------------- AP@k

def test_ap_textbook_case():
    value = average_precision_at_k(ranked([1, 0, 1]), 10)
    assert value == pytest.approx(0.5 * (1 + 2 / 3))
    assert value == ap_oracle([1, 0, 1], 10)


def test_ap_all_relevant_is_one():
    for k in (1, 3, 10):
        assert average_precision_at_k(ranked([1, 1, 1]), k) == 1.0


def test_ap_no_relevant_is_zero():
    r = ranked([0, 0, 0])
    assert average_precision_at_k(r, 10) == 0.0
    assert r.num_relevant == 0


def test_ap_cutoff_shorter_than_list():
    # only rank 2 hits within the cutoff; R counts the whole group, so the
    # normalizer is min(R=2, k=2) = 2 and AP@2 = (1/2) * (1/2)
    assert average_precision_at_k(ranked([0, 1, 1]), 2) == pytest.approx(0.25)
    assert average_precision_at_k(ranked([0, 1, 1]), 2) == ap_oracle([0, 1, 1], 2)


def test_ap_k_past_group_size_equals_full_ap():
    rng = np.random.default_rng(3)
    for _ in range(50):
        rel = rng.integers(0, 2, size=int(rng.integers(1, 9))).tolist()
        base = average_precision_at_k(ranked(rel), len(rel))
        for k in range(len(rel), 13):
            assert average_precision_at_k(ranked(rel), k) == base


def test_ap_requires_positive_k():
    with pytest.raises(ValueError):
        average_precision_at_k(ranked([1]), 0)


def test_ap_agrees_with_oracle_on_random_patterns():
    rng = np.random.default_rng(8)
    for _ in range(200):
        rel = rng.integers(0, 2, size=int(rng.integers(1, 9))).tolist()
        k = int(rng.integers(1, 13))
        assert average_precision_at_k(ranked(rel), k) == ap_oracle(rel, k)


# ---------------------------------------------------------------- MAP@k

def test_map_single_group_matches_ap():
    matrix = matrix_with({"v1": [("i0", 1), ("i1", 0), ("i2", 1)]})
    fused = np.array([0.9, 0.5, 0.1])
    report = map_at_k(fused, matrix, k=10)
    assert report.map_at_k == pytest.approx(0.5 * (1 + 2 / 3))
    assert report.k == 10


def test_map_averages_over_groups():
    matrix = matrix_with(
        {
            "v1": [("i0", 1), ("i1", 0)],  # perfect ranking: AP 1.0
            "v2": [("i2", 0), ("i3", 1)],  # relevant item last: AP 0.5
        }
    )
    fused = np.array([0.9, 0.1, 0.8, 0.2])
    report = map_at_k(fused, matrix, k=10)
    assert report.map_at_k == pytest.approx(0.75)
    assert [g[0] for g in report.per_group] == ["v1", "v2"]


def test_map_excludes_groups_without_relevant_items():
    matrix = matrix_with(
        {
            "v1": [("i0", 1), ("i1", 0)],
            "v2": [("i2", 0), ("i3", 0)],
        }
    )
    fused = np.array([0.9, 0.1, 0.8, 0.2])
    report = map_at_k(fused, matrix, k=10)
    assert report.map_at_k == 1.0
    excluded = dict((g[0], g[2]) for g in report.per_group)
    assert excluded["v2"] == 0


def test_map_undefined_when_all_groups_empty_of_relevance():
    matrix = matrix_with({"v1": [("i0", 0)], "v2": [("i1", 0)]})
    with pytest.raises(UndefinedMetricError):
        map_at_k(np.array([0.5, 0.5]), matrix, k=10)


def test_map_perfect_separation_is_one():
    rng = np.random.default_rng(21)
    groups = {}
    fused = []
    for v in range(5):
        items = []
        n_rel = int(rng.integers(1, 4))
        n_irr = int(rng.integers(1, 4))
        for i in range(n_rel):
            items.append((f"r{i}", 1))
            fused.append(1.0 + rng.random())
        for i in range(n_irr):
            items.append((f"x{i}", 0))
            fused.append(rng.random() - 1.0)
        groups[f"v{v}"] = items
    report = map_at_k(np.array(fused), matrix_with(groups), k=10)
    assert report.map_at_k == 1.0


def test_map_report_mean_recomputable_from_per_group():
    rng = np.random.default_rng(31)
    matrix = matrix_with(
        {f"v{v}": [(f"i{v}_{i}", int(rng.integers(0, 2))) for i in range(6)] for v in range(8)}
    )
    if not matrix.labels.any():
        matrix.labels[0] = 1.0
    fused = rng.random(matrix.n_samples)
    report = map_at_k(fused, matrix, k=4)
    included = [ap for _, ap, num_rel in report.per_group if num_rel > 0]
    assert report.map_at_k == sum(included) / len(included)
    assert 0.0 <= report.map_at_k <= 1.0


def test_map_length_mismatch():
    matrix = matrix_with({"v1": [("i0", 1)]})
    with pytest.raises(ValueError):
        map_at_k(np.array([0.5, 0.5]), matrix, k=10)


@given(st.integers(0, 10_000), st.integers(1, 12))
def test_map_rank_invariance_under_increasing_transforms(seed, k):
    rng = np.random.default_rng(seed)
    n_videos = int(rng.integers(1, 5))
    groups = {}
    for v in range(n_videos):
        size = int(rng.integers(1, 7))
        groups[f"v{v}"] = [(f"i{v}_{i}", int(rng.integers(0, 2))) for i in range(size)]
    matrix = matrix_with(groups)
    if not matrix.labels.any():
        matrix.labels[0] = 1.0
    fused = rng.random(matrix.n_samples)
    a = float(rng.uniform(0.5, 3.0))
    b = float(rng.uniform(-1.0, 1.0))
    before = map_at_k(fused, matrix, k=k)
    after = map_at_k(a * fused + b, matrix, k=k)
    assert after.map_at_k == before.map_at_k
    assert after.per_group == before.per_group


# ---------------------------------------------------------------- serialization

def test_eval_report_json_and_csv(tmp_path):
    matrix = matrix_with({"v1": [("i0", 1), ("i1", 0)], "v2": [("i2", 1)]})
    report = map_at_k(np.array([0.9, 0.1, 0.5]), matrix, k=10)
    jpath, cpath = tmp_path / "eval.json", tmp_path / "eval.csv"
    report.save_json(jpath)
    report.save_csv(cpath)
    doc = json.loads(jpath.read_text())
    assert doc["map_at_k"] == report.map_at_k
    assert doc["k"] == 10
    lines = cpath.read_text().splitlines()
    assert lines[0] == "video_id,ap_at_10,num_relevant"
    assert len(lines) == 3


def test_exhaustive_small_patterns_match_oracle():
    for n in range(1, 8):
        for bits in itertools.product((0, 1), repeat=n):
            for k in (1, 3, 10):
                assert average_precision_at_k(ranked(list(bits)), k) == ap_oracle(list(bits), k)
