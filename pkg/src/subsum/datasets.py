"""Seeded synthetic feature sets with known structure."""

from __future__ import annotations

import numpy as np

from .ingest import FeatureMatrix

__all__ = ["planted_clusters", "class_clusters", "random_features"]


def planted_clusters(
    seed: int,
    n_clusters: int = 5,
    per_cluster: int = 20,
    dim: int = 10,
    noise: float = 0.05,
    outlier: bool = True,
) -> tuple[FeatureMatrix, np.ndarray]:
    """Tight non-negative clusters along separate axes, plus one far outlier.

    Returns the features and a cluster label per row (``-1`` for the
    outlier).  The outlier points along the unused axes and sits far from
    the origin, so it is both dissimilar (cosine) and distant (euclidean).
    """
    if dim < n_clusters + 1:
        raise ValueError("dim must exceed n_clusters")
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    for c in range(n_clusters):
        center = np.zeros(dim)
        center[c] = 1.0
        pts = np.abs(center + noise * rng.standard_normal((per_cluster, dim)))
        rows.append(pts)
        labels += [c] * per_cluster
    if outlier:
        direction = np.zeros(dim)
        direction[n_clusters:] = 1.0
        rows.append(5.0 * direction[None, :] + np.abs(noise * rng.standard_normal((1, dim))))
        labels.append(-1)
    perm = rng.permutation(len(labels))
    values = np.vstack(rows)[perm]
    return FeatureMatrix(values), np.asarray(labels)[perm]


def class_clusters(
    seed: int,
    per_cluster: int = 50,
    spread: float = 0.5,
) -> tuple[FeatureMatrix, np.ndarray, np.ndarray]:
    """Two classes, each made of two well separated 2-D Gaussian blobs.

    Class ``a`` sits at (0, 0) and (4, 8), class ``b`` at (8, 0) and
    (12, 8).  A nearest-centroid classifier fit on all four blobs separates
    the classes; one fit on a subset of blobs usually does not.  Returns
    features, class labels and blob ids.
    """
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [4.0, 8.0], [8.0, 0.0], [12.0, 8.0]])
    classes = np.array(["a", "a", "b", "b"])
    pts = centers.repeat(per_cluster, axis=0) + spread * rng.standard_normal((4 * per_cluster, 2))
    blob = np.arange(4).repeat(per_cluster)
    perm = rng.permutation(len(pts))
    # shift into the positive quadrant; distances are unaffected
    values = pts[perm] + 3.0
    return FeatureMatrix(np.maximum(values, 0.0)), classes[blob[perm]], blob[perm]


def random_features(seed: int, n: int, dim: int = 32, n_centers: int = 20) -> FeatureMatrix:
    """Non-negative mixture features for timing runs."""
    rng = np.random.default_rng(seed)
    centers = rng.random((n_centers, dim))
    assign = rng.integers(0, n_centers, n)
    values = np.abs(centers[assign] + 0.15 * rng.standard_normal((n, dim))) + 1e-3
    return FeatureMatrix(values)
