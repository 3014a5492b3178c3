import json

import numpy as np
import pytest

from subsum.errors import InvalidAnnotation, ParseError
from subsum.metrics import (
    SegmentAnnotation,
    cluster_diversity_score,
    coverage_score,
    expand_to_frames,
    f1_score,
    load_annotations,
    outlier_fraction,
    outlier_score,
    representation_score,
)

SCENES = SegmentAnnotation.of("scene", [{0, 1}, {2, 3}])
CLUSTERS = SegmentAnnotation.of("cluster", [{0, 1}, {2}, {3}])


@pytest.mark.parametrize("X, expected", [({0, 2}, 1.0), ({0, 1}, 0.5), (set(), 0.0)])
def test_representation(X, expected):
    assert representation_score(X, SCENES) == expected


def test_coverage():
    concepts = [{"a", "b"}, {"c"}, {"d"}]
    assert coverage_score([0, 1], concepts) == 0.75
    assert coverage_score([], concepts) == 0.0
    assert coverage_score([0, 1, 2], concepts) == 1.0


def test_coverage_empty_universe():
    with pytest.raises(InvalidAnnotation):
        coverage_score([0], [set(), set()])


@pytest.mark.parametrize(
    "events, X, expected",
    [([{5}, {9}], {5, 9, 1}, 2), ([{5}, {9}], {1}, 0), ([{5, 6}], {5, 6}, 1)],
)
def test_outlier_score(events, X, expected):
    assert outlier_score(X, SegmentAnnotation.of("outlier_event", events)) == expected


def test_outlier_fraction():
    assert outlier_fraction({5}, SegmentAnnotation.of("outlier_event", [{5}, {9}])) == 0.5


def test_f1_half_recall():
    p, r, f = f1_score(range(5), range(10), 20)
    assert (p, r) == (1.0, 0.5) and f == pytest.approx(2 / 3)


def test_f1_degenerate():
    assert f1_score([], range(3)) == (0.0, 0.0, 0.0)
    assert f1_score(range(3), range(3)) == (1.0, 1.0, 1.0)


def test_f1_out_of_range():
    with pytest.raises(InvalidAnnotation):
        f1_score([25], [0], 20)


def test_f1_symmetric_for_equal_sizes():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = rng.choice(30, 6, replace=False), rng.choice(30, 6, replace=False)
        assert f1_score(a, b)[2] == pytest.approx(f1_score(b, a)[2])


@pytest.mark.parametrize("X, expected", [({0, 2, 3}, 1.0), ({0, 1}, 1 / 3), (set(), 0.0)])
def test_cluster_hit_fraction(X, expected):
    assert cluster_diversity_score(X, CLUSTERS) == pytest.approx(expected)


def test_kind_checks():
    with pytest.raises(InvalidAnnotation):
        representation_score({0}, CLUSTERS)
    with pytest.raises(InvalidAnnotation):
        representation_score({0}, SegmentAnnotation((), "scene"))
    with pytest.raises(InvalidAnnotation):
        SegmentAnnotation.of("shot", [{0}])


def test_overlap_rules():
    with pytest.raises(InvalidAnnotation):
        SegmentAnnotation.of("scene", [{0, 1}, {1, 2}])
    SegmentAnnotation.of("groundtruth_summary", [{0, 1}, {1, 2}])


def test_scores_monotone_under_addition():
    rng = np.random.default_rng(1)
    for _ in range(100):
        labels = rng.integers(0, 6, 40)
        ann_s = SegmentAnnotation.of("scene", [np.flatnonzero(labels == c) for c in range(6)])
        ann_c = SegmentAnnotation.of("cluster", [np.flatnonzero(labels == c) for c in range(6)])
        order = rng.permutation(40)
        prev_r = prev_m = 0.0
        for t in range(1, 41):
            r = representation_score(order[:t], ann_s)
            m = cluster_diversity_score(order[:t], ann_c)
            assert r >= prev_r and m >= prev_m and 0 <= r <= 1 and 0 <= m <= 1
            prev_r, prev_m = r, m


def test_load_annotations(tmp_path):
    p = tmp_path / "a.jsonl"
    recs = [
        {"segment": "s0", "kind": "scene", "items": [0, 1]},
        {"segment": "s1", "kind": "scene", "items": [2]},
        {"segment": "o", "kind": "outlier_event", "items": [9]},
    ]
    p.write_text("".join(json.dumps(r) + "\n" for r in recs))
    anns = load_annotations(p)
    assert anns["scene"].k == 2 and anns["outlier_event"].items() == {9}


def test_load_annotations_malformed(tmp_path):
    p = tmp_path / "a.jsonl"
    p.write_text('{"segment": "s0", "items": [0]}\n')
    with pytest.raises(ParseError):
        load_annotations(p)


def test_expand_to_frames():
    assert expand_to_frames([0, 2], [(0, 1), (2, 3), (4, 5)]) == {0, 1, 4, 5}
