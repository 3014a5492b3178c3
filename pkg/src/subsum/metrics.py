"""Summary evaluation measures: scene representation, concept coverage,
outlier hits, cluster diversity and frame-level F1."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidAnnotation, ParseError

__all__ = [
    "KINDS",
    "SegmentAnnotation",
    "load_annotations",
    "representation_score",
    "coverage_score",
    "outlier_score",
    "outlier_fraction",
    "f1_score",
    "cluster_diversity_score",
    "expand_to_frames",
]

KINDS = ("scene", "outlier_event", "cluster", "groundtruth_summary")


@dataclass(frozen=True)
class SegmentAnnotation:
    """Named groups of item indices of one kind.

    Only ``groundtruth_summary`` segments may share items.
    """

    segments: tuple[tuple[str, frozenset[int]], ...]
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidAnnotation(f"unknown annotation kind {self.kind!r}")
        segs = tuple((str(sid), frozenset(int(i) for i in items)) for sid, items in self.segments)
        object.__setattr__(self, "segments", segs)
        seen: set[int] = set()
        for sid, items in segs:
            if any(i < 0 for i in items):
                raise InvalidAnnotation(f"segment {sid!r} has a negative index")
            if self.kind != "groundtruth_summary" and seen & items:
                raise InvalidAnnotation(f"{self.kind} segment {sid!r} overlaps an earlier one")
            seen |= items

    @classmethod
    def of(cls, kind: str, groups: Iterable[Iterable[int]]) -> "SegmentAnnotation":
        return cls(tuple((str(i), frozenset(g)) for i, g in enumerate(groups)), kind)

    @property
    def k(self) -> int:
        return len(self.segments)

    def items(self) -> frozenset[int]:
        return frozenset().union(*(s for _, s in self.segments))


def load_annotations(path) -> dict[str, SegmentAnnotation]:
    """``{"segment": id, "kind": s, "items": [ints]}`` per line, grouped by kind."""
    groups: dict[str, list] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                groups.setdefault(rec["kind"], []).append((rec["segment"], rec["items"]))
            except (json.JSONDecodeError, KeyError, TypeError):
                raise ParseError(f"{path}:{lineno}: expected segment, kind and items") from None
    return {kind: SegmentAnnotation(tuple(segs), kind) for kind, segs in groups.items()}


def _hits(X: Iterable[int], ann: SegmentAnnotation, kind: str) -> int:
    if ann.kind != kind:
        raise InvalidAnnotation(f"expected a {kind} annotation, got {ann.kind}")
    if ann.k == 0:
        raise InvalidAnnotation(f"{kind} annotation has no segments")
    chosen = set(int(i) for i in X)
    return sum(1 for _, items in ann.segments if chosen & items)


def representation_score(X: Iterable[int], ann: SegmentAnnotation) -> float:
    """Fraction of scenes containing at least one selected item."""
    return _hits(X, ann, "scene") / ann.k


def cluster_diversity_score(X: Iterable[int], ann: SegmentAnnotation) -> float:
    """Cluster hit fraction: share of similar-frame clusters touched by X."""
    return _hits(X, ann, "cluster") / ann.k


def outlier_score(X: Iterable[int], ann: SegmentAnnotation) -> int:
    """Number of distinct outlier events touched by X."""
    return _hits(X, ann, "outlier_event")


def outlier_fraction(X: Iterable[int], ann: SegmentAnnotation) -> float:
    return outlier_score(X, ann) / ann.k


def coverage_score(
    X: Iterable[int],
    concepts_per_item: Sequence[Iterable[str]],
    universe: Iterable[str] | None = None,
) -> float:
    """Covered concepts over all concepts in the ground set (unweighted)."""
    concepts = [set(c) for c in concepts_per_item]
    full = set(universe) if universe is not None else set().union(*concepts)
    if not full:
        raise InvalidAnnotation("concept universe is empty")
    covered = set().union(*(concepts[int(i)] for i in X)) if concepts else set()
    return len(covered & full) / len(full)


def f1_score(X_frames: Iterable[int], gt_frames: Iterable[int], total_frames: int | None = None):
    """Frame-level ``(precision, recall, f1)``; 0 wherever a denominator is 0."""
    x, gt = set(int(i) for i in X_frames), set(int(i) for i in gt_frames)
    if total_frames is not None and any(not 0 <= i < total_frames for i in x | gt):
        raise InvalidAnnotation(f"frame index outside [0, {total_frames})")
    tp = len(x & gt)
    precision = tp / len(x) if x else 0.0
    recall = tp / len(gt) if gt else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def expand_to_frames(selected: Iterable[int], snippet_frames: Sequence[Sequence[int]]) -> set[int]:
    """Frames covered by the selected snippets."""
    return {f for s in selected for f in snippet_frames[int(s)]}
