"""Random instances and independent pure-Python reference objectives.

The reference functions re-derive each objective from its definition with
plain loops, so they share no code with the package implementations.
"""

from __future__ import annotations

import math

import numpy as np

from subsum import (
    DisparityMin,
    DisparityMinSum,
    DisparitySum,
    FacilityLocation,
    FeatureBased,
    GraphCut,
    MaxMarginalRelevance,
    ModularImportance,
    ProbabilisticSetCover,
    SaturatedCoverage,
    SetCover,
)
from subsum.similarity import compute_distances, compute_kernel

ALL_MODELS = (
    "facility_location",
    "saturated_coverage",
    "graph_cut",
    "feature_based",
    "set_cover",
    "probabilistic_set_cover",
    "disparity_min",
    "disparity_sum",
    "disparity_min_sum",
    "modular_importance",
    "max_marginal_relevance",
)
SUBMODULAR_MODELS = (
    "facility_location",
    "saturated_coverage",
    "graph_cut",
    "feature_based",
    "set_cover",
    "probabilistic_set_cover",
)


def random_instance(name: str, n: int, rng: np.random.Generator, **kw):
    """``(model, raw)`` where ``raw`` holds the plain inputs for the reference."""
    feats = rng.random((n, 4)) + 0.01
    if name in ("facility_location", "saturated_coverage", "graph_cut", "max_marginal_relevance"):
        s = compute_kernel(feats).dense()
        if name == "facility_location":
            return FacilityLocation(s), {"s": s}
        if name == "saturated_coverage":
            alpha = kw.get("alpha", float(rng.uniform(0.1, 1.0)))
            return SaturatedCoverage(s, alpha), {"s": s, "alpha": alpha}
        if name == "graph_cut":
            lam = kw.get("lam", 2.0)
            return GraphCut(s, lam), {"s": s, "lam": lam}
        rel, theta = rng.random(n), kw.get("theta", 0.7)
        return MaxMarginalRelevance(s, rel, theta), {"s": s, "rel": rel, "theta": theta}
    if name == "feature_based":
        psi = kw.get("psi", "sqrt")
        q = rng.random((n, 6)) * (rng.random((n, 6)) < 0.6)
        return FeatureBased(q, psi), {"q": q, "psi": psi}
    if name == "set_cover":
        m = kw.get("universe", 8)
        sets = [sorted(set(rng.choice(m, rng.integers(0, 4), replace=False).tolist())) for _ in range(n)]
        w = rng.uniform(0.5, 2.0, m)
        return SetCover(sets, w), {"sets": sets, "w": w}
    if name == "probabilistic_set_cover":
        p = rng.random((n, 5)) * (rng.random((n, 5)) < 0.7)
        w = rng.uniform(0.5, 2.0, 5)
        return ProbabilisticSetCover(p, w), {"p": p, "w": w}
    if name in ("disparity_min", "disparity_sum", "disparity_min_sum"):
        d = compute_distances(feats).values
        cls = {"disparity_min": DisparityMin, "disparity_sum": DisparitySum, "disparity_min_sum": DisparityMinSum}
        return cls[name](d), {"d": d}
    if name == "modular_importance":
        r = rng.random(n)
        return ModularImportance(r), {"r": r}
    raise KeyError(name)


_PSI = {
    "sqrt": math.sqrt,
    "log1p": math.log1p,
    "inverse": lambda x: x / (1.0 + x),
}


def reference_value(name: str, raw: dict, X) -> float:
    """Objective value straight from its definition (X is an ordered list)."""
    X = list(X)
    if name == "facility_location":
        s = raw["s"]
        return sum(max((s[i][j] for j in X), default=0.0) for i in range(len(s)))
    if name == "saturated_coverage":
        s, a = raw["s"], raw["alpha"]
        n = len(s)
        return sum(min(sum(s[i][j] for j in X), a * sum(s[i][j] for j in range(n))) for i in range(n))
    if name == "graph_cut":
        s, lam = raw["s"], raw["lam"]
        n = len(s)
        cut = sum(s[i][j] for i in range(n) for j in X)
        inner = sum(s[i][j] for i in X for j in X)
        return lam * cut - inner
    if name == "feature_based":
        q, psi = raw["q"], _PSI[raw["psi"]]
        return sum(psi(sum(q[j][f] for j in X)) for f in range(len(q[0])))
    if name == "set_cover":
        covered = set()
        for j in X:
            covered |= set(raw["sets"][j])
        return sum(raw["w"][u] for u in covered)
    if name == "probabilistic_set_cover":
        p, w = raw["p"], raw["w"]
        total = 0.0
        for u in range(len(w)):
            miss = 1.0
            for j in X:
                miss *= 1.0 - p[j][u]
            total += w[u] * (1.0 - miss)
        return total
    if name == "disparity_min":
        d = raw["d"]
        pairs = [d[a][b] for i, a in enumerate(X) for b in X[i + 1 :]]
        return min(pairs) if pairs else 0.0
    if name == "disparity_sum":
        d = raw["d"]
        return sum(d[a][b] for i, a in enumerate(X) for b in X[i + 1 :])
    if name == "disparity_min_sum":
        d = raw["d"]
        if len(X) < 2:
            return 0.0
        return sum(min(d[k][l] for l in X if l != k) for k in X)
    if name == "modular_importance":
        return sum(raw["r"][j] for j in X)
    if name == "max_marginal_relevance":
        s, rel, th = raw["s"], raw["rel"], raw["theta"]
        total, chosen = 0.0, []
        for j in X:
            total += th * rel[j] - (1 - th) * max((s[k][j] for k in chosen), default=0.0)
            chosen.append(j)
        return total
    raise KeyError(name)


def random_subset(rng: np.random.Generator, n: int, max_size: int | None = None) -> list[int]:
    size = int(rng.integers(0, (max_size if max_size is not None else n) + 1))
    return [int(i) for i in rng.permutation(n)[:size]]
