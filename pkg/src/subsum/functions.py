"""Objective models with memoized marginal gains.

Each model pairs a from-scratch ``_evaluate`` with a :class:`~subsum.core.Memo`
subclass that keeps the per-model statistics:

===========================  ====================================  ==========
model                        statistics                            gain cost
===========================  ====================================  ==========
FacilityLocation             best similarity to X, per item        O(n)
SaturatedCoverage            similarity mass from X, per item      O(n)
GraphCut                     similarity mass from X, per item      O(1)
FeatureBased                 feature totals over X                 O(|F|)
SetCover                     covered concept mask                  O(|U_j|)
ProbabilisticSetCover        per-concept miss probability          O(|U|)
DisparityMin                 current min pairwise distance         O(|X|)
DisparitySum                 per-selected distance sums            O(|X|)
DisparityMinSum              per-selected nearest distance         O(|X|)
ModularImportance            none                                  O(1)
MaxMarginalRelevance         max similarity to X, per item         O(1)
===========================  ====================================  ==========
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import Memo, SetFunction
from .errors import InvalidParam, InvalidProbability, InvalidWeight
from .similarity import DistanceMatrix, Kernel

__all__ = [
    "FacilityLocation",
    "SaturatedCoverage",
    "GraphCut",
    "FeatureBased",
    "SetCover",
    "ProbabilisticSetCover",
    "DisparityMin",
    "DisparitySum",
    "DisparityMinSum",
    "ModularImportance",
    "MaxMarginalRelevance",
    "CONCAVE",
    "MODEL_CLASSES",
]

_CHUNK = 256


def _chunks(cand: np.ndarray, size: int = _CHUNK):
    for start in range(0, len(cand), size):
        yield start, cand[start : start + size]


def _check_kernel(kernel) -> Kernel:
    if not isinstance(kernel, Kernel):
        kernel = Kernel(kernel)
    return kernel


def _check_distances(d) -> DistanceMatrix:
    if not isinstance(d, DistanceMatrix):
        d = DistanceMatrix(d)
    return d


# --------------------------------------------------------------------------
# representation models (kernel based)
# --------------------------------------------------------------------------


class FacilityLocation(SetFunction):
    """``f(X) = sum_i max_{k in X} s_ik``."""

    name = "facility_location"
    family = "similarity"

    def __init__(self, kernel: Kernel | np.ndarray):
        self.kernel = _check_kernel(kernel)
        self.n = self.kernel.n

    def _evaluate(self, X):
        # exactly rounded, so sets with equal true values evaluate to the same
        # double and scratch gains keep the ties the memo sees
        return math.fsum(self.kernel.columns(X).max(axis=1))

    def memo(self):
        return _FacilityLocationMemo(self)


class _FacilityLocationMemo(Memo):
    fn: FacilityLocation

    def _reset_stats(self):
        self.best = np.zeros(self.n)

    def _gain(self, j):
        return np.maximum(self.fn.kernel.column(j) - self.best, 0.0).sum()

    def _gains(self, cand):
        out = np.empty(len(cand))
        for start, part in _chunks(cand):
            block = self.fn.kernel.columns_t(part)
            out[start : start + len(part)] = np.maximum(block - self.best, 0.0).sum(axis=1)
        return out

    def _commit(self, j):
        np.maximum(self.best, self.fn.kernel.column(j), out=self.best)

    def _exact_value(self):
        return self.best.sum()


class SaturatedCoverage(SetFunction):
    """``f(X) = sum_i min(sum_{j in X} s_ij, alpha * sum_{j in V} s_ij)``."""

    name = "saturated_coverage"
    family = "similarity"

    def __init__(self, kernel: Kernel | np.ndarray, alpha: float = 0.5):
        if not 0 < alpha <= 1:
            raise InvalidParam(f"alpha must lie in (0, 1], got {alpha}")
        self.kernel = _check_kernel(kernel)
        self.n = self.kernel.n
        self.alpha = float(alpha)
        self.thresholds = self.alpha * self.kernel.row_sums

    def params(self):
        return {"alpha": self.alpha}

    def _evaluate(self, X):
        mass = self.kernel.columns(X).sum(axis=1)
        return math.fsum(np.minimum(mass, self.thresholds))

    def memo(self):
        return _SaturatedCoverageMemo(self)


class _SaturatedCoverageMemo(Memo):
    fn: SaturatedCoverage

    # gain of j is sum_i min(s_ij, residual_i) with residual = max(t - mass, 0)
    def _reset_stats(self):
        self.mass = np.zeros(self.n)
        self.residual = self.fn.thresholds.copy()

    def _gain(self, j):
        return np.minimum(self.fn.kernel.column(j), self.residual).sum()

    def _gains(self, cand):
        out = np.empty(len(cand))
        for start, part in _chunks(cand):
            block = self.fn.kernel.columns_t(part)
            out[start : start + len(part)] = np.minimum(block, self.residual).sum(axis=1)
        return out

    def _commit(self, j):
        self.mass += self.fn.kernel.column(j)
        np.maximum(self.fn.thresholds - self.mass, 0.0, out=self.residual)

    def _exact_value(self):
        return np.minimum(self.mass, self.fn.thresholds).sum()


class GraphCut(SetFunction):
    """``f(X) = lam * sum_{i in V, j in X} s_ij - sum_{i, j in X} s_ij``.

    With a symmetric kernel and ``lam >= 2`` every gain is non-negative.
    """

    name = "graph_cut"
    family = "similarity"

    def __init__(self, kernel: Kernel | np.ndarray, lam: float = 2.0):
        if not np.isfinite(lam) or lam < 0:
            raise InvalidParam(f"lambda must be finite and >= 0, got {lam}")
        self.kernel = _check_kernel(kernel)
        self.n = self.kernel.n
        self.lam = float(lam)
        self.column_totals = self.kernel.column_sums()
        self.self_sim = self.kernel.diagonal()

    @property
    def monotone(self):
        return self.kernel.symmetric and self.lam >= 2.0

    def params(self):
        return {"lambda": self.lam}

    def _evaluate(self, X):
        cut = self.kernel.columns(X).sum()
        inner = self.kernel.block(X, X).sum()
        return self.lam * cut - inner

    def memo(self):
        return _GraphCutMemo(self)


class _GraphCutMemo(Memo):
    fn: GraphCut

    def _reset_stats(self):
        # into[v] = sum_{k in X} s_kv, outof[v] = sum_{k in X} s_vk
        self.into = np.zeros(self.n)
        self.outof = self.into if self.fn.kernel.symmetric else np.zeros(self.n)

    def _gain(self, j):
        fn = self.fn
        return fn.lam * fn.column_totals[j] - self.into[j] - self.outof[j] - fn.self_sim[j]

    def _gains(self, cand):
        fn = self.fn
        return fn.lam * fn.column_totals[cand] - self.into[cand] - self.outof[cand] - fn.self_sim[cand]

    def _commit(self, j):
        self.into += self.fn.kernel.row(j)
        if not self.fn.kernel.symmetric:
            self.outof += self.fn.kernel.column(j)


# --------------------------------------------------------------------------
# coverage models
# --------------------------------------------------------------------------

CONCAVE = {
    "sqrt": np.sqrt,
    "log1p": np.log1p,
    "inverse": lambda x: x / (1.0 + x),
}


class FeatureBased(SetFunction):
    """``f(X) = sum_u psi(sum_{j in X} q_ju)`` for a concave ``psi``."""

    name = "feature_based"
    family = "coverage"

    def __init__(self, features, psi: str = "sqrt"):
        q = np.array(getattr(features, "values", features), dtype=float)
        if q.ndim != 2 or q.size == 0:
            raise InvalidParam("feature_based needs a non-empty n x F matrix")
        if not np.all(np.isfinite(q)) or q.min() < 0:
            raise InvalidParam("feature_based needs finite non-negative features")
        if psi not in CONCAVE:
            raise InvalidParam(f"psi must be one of {sorted(CONCAVE)}, got {psi!r}")
        q.setflags(write=False)
        self.q = q
        self.n = q.shape[0]
        self.psi_name = psi
        self.psi = CONCAVE[psi]

    def params(self):
        return {"psi": self.psi_name}

    def _evaluate(self, X):
        return math.fsum(self.psi(self.q[X].sum(axis=0)))

    def memo(self):
        return _FeatureBasedMemo(self)


class _FeatureBasedMemo(Memo):
    fn: FeatureBased

    def _reset_stats(self):
        self.totals = np.zeros(self.fn.q.shape[1])
        self.current = self.fn.psi(self.totals)

    def _gain(self, j):
        return (self.fn.psi(self.totals + self.fn.q[j]) - self.current).sum()

    def _gains(self, cand):
        out = np.empty(len(cand))
        for start, part in _chunks(cand):
            out[start : start + len(part)] = (
                self.fn.psi(self.totals + self.fn.q[part]) - self.current
            ).sum(axis=1)
        return out

    def _commit(self, j):
        self.totals += self.fn.q[j]
        self.current = self.fn.psi(self.totals)


def _concept_weights(weights, universe_size: int) -> np.ndarray:
    if weights is None:
        return np.ones(universe_size)
    w = np.array(weights, dtype=float)
    if w.shape != (universe_size,):
        raise InvalidWeight(f"expected {universe_size} concept weights, got {w.size}")
    if not np.all(np.isfinite(w)) or w.min(initial=0) < 0:
        raise InvalidWeight("concept weights must be finite and >= 0")
    return w


class SetCover(SetFunction):
    """Total weight of the concepts covered by the selection.

    ``concept_sets[j]`` lists the concept indices item ``j`` covers.
    """

    name = "set_cover"
    family = "coverage"

    def __init__(
        self,
        concept_sets: Sequence[Iterable[int]],
        weights: Sequence[float] | None = None,
        universe: Sequence[str] | None = None,
    ):
        sets = [np.unique(np.asarray(list(s), dtype=np.intp)) for s in concept_sets]
        if not sets:
            raise InvalidParam("set_cover needs at least one item")
        top = max((int(s.max()) for s in sets if s.size), default=-1)
        size = len(universe) if universe is not None else top + 1
        if weights is not None and universe is None:
            size = max(size, len(weights))
        if top >= size or any(s.size and s.min() < 0 for s in sets):
            raise InvalidParam("concept index outside the universe")
        self.concept_sets = sets
        self.n = len(sets)
        self.weights = _concept_weights(weights, size)
        self.universe = list(universe) if universe is not None else [str(u) for u in range(size)]

    @classmethod
    def from_names(
        cls, concepts: Sequence[Iterable[str]], weights: Mapping[str, float] | None = None
    ) -> "SetCover":
        """Build from concept names; weights default to 1 per concept."""
        universe = sorted({c for item in concepts for c in item})
        pos = {c: i for i, c in enumerate(universe)}
        w = [float((weights or {}).get(c, 1.0)) for c in universe]
        return cls([[pos[c] for c in item] for item in concepts], w, universe)

    def _evaluate(self, X):
        covered = np.unique(np.concatenate([self.concept_sets[j] for j in X]))
        return math.fsum(self.weights[covered])

    def memo(self):
        return _SetCoverMemo(self)


class _SetCoverMemo(Memo):
    fn: SetCover

    def _reset_stats(self):
        self.covered = np.zeros(len(self.fn.weights), dtype=bool)

    def _gain(self, j):
        u = self.fn.concept_sets[j]
        return self.fn.weights[u[~self.covered[u]]].sum()

    def _commit(self, j):
        self.covered[self.fn.concept_sets[j]] = True

    def _exact_value(self):
        return self.fn.weights[self.covered].sum()


class ProbabilisticSetCover(SetFunction):
    """``f(X) = sum_u w_u (1 - prod_{k in X} (1 - p_ku))``."""

    name = "probabilistic_set_cover"
    family = "coverage"

    def __init__(self, probabilities, weights: Sequence[float] | None = None):
        p = np.array(getattr(probabilities, "values", probabilities), dtype=float)
        if p.ndim != 2 or p.size == 0:
            raise InvalidParam("probabilistic_set_cover needs an n x |U| matrix")
        if not np.all(np.isfinite(p)) or p.min() < 0 or p.max() > 1:
            raise InvalidProbability("probabilities must lie in [0, 1]")
        p.setflags(write=False)
        self.p = p
        self.n = p.shape[0]
        self.weights = _concept_weights(weights, p.shape[1])

    def _evaluate(self, X):
        miss = np.prod(1.0 - self.p[X], axis=0)
        return math.fsum(self.weights * (1.0 - miss))

    def memo(self):
        return _ProbabilisticSetCoverMemo(self)


class _ProbabilisticSetCoverMemo(Memo):
    fn: ProbabilisticSetCover

    def _reset_stats(self):
        self.miss = np.ones(self.fn.p.shape[1])
        self._wm = self.fn.weights * self.miss

    def _gain(self, j):
        return self._wm @ self.fn.p[j]

    def _gains(self, cand):
        return self.fn.p[cand] @ self._wm

    def _commit(self, j):
        self.miss *= 1.0 - self.fn.p[j]
        self._wm = self.fn.weights * self.miss


# --------------------------------------------------------------------------
# diversity models (distance based)
# --------------------------------------------------------------------------


class _DistanceModel(SetFunction):
    family = "distance"

    def __init__(self, distances: DistanceMatrix | np.ndarray):
        self.distances = _check_distances(distances)
        self.d = self.distances.values
        self.n = self.distances.n


class DisparityMin(_DistanceModel):
    """Smallest pairwise distance inside X; 0 when ``|X| < 2``."""

    name = "disparity_min"

    @property
    def monotone(self):
        return False

    @property
    def submodular(self):
        return False

    def _evaluate(self, X):
        if len(X) < 2:
            return 0.0
        block = self.d[np.ix_(X, X)]
        return block[~np.eye(len(X), dtype=bool)].min()

    def memo(self):
        return _DisparityMinMemo(self)


class _DisparityMinMemo(Memo):
    fn: DisparityMin

    def _reset_stats(self):
        self.closest = np.inf

    def _gain(self, j):
        if not self.selected:
            return 0.0
        new = min(self.closest, self.fn.d[j, self.selected].min())
        return new - self.value

    def _gains(self, cand):
        if not self.selected:
            return np.zeros(len(cand))
        nearest = self.fn.d[np.ix_(cand, self.selected)].min(axis=1)
        return np.minimum(nearest, self.closest) - self.value

    def _commit(self, j):
        if self.selected:
            self.closest = min(self.closest, self.fn.d[j, self.selected].min())

    def _exact_value(self):
        return self.closest if len(self.selected) >= 2 else 0.0


class DisparitySum(_DistanceModel):
    """Sum of distances over unordered pairs in X (supermodular)."""

    name = "disparity_sum"

    @property
    def submodular(self):
        return False

    def _evaluate(self, X):
        return np.triu(self.d[np.ix_(X, X)], 1).sum()

    def memo(self):
        return _DisparitySumMemo(self)


class _DisparitySumMemo(Memo):
    fn: DisparitySum

    def _reset_stats(self):
        # sums[t] = sum of distances from selected[t] to the rest of X
        self.sums = np.zeros(0)

    def _gain(self, j):
        return self.fn.d[j, self.selected].sum() if self.selected else 0.0

    def _gains(self, cand):
        if not self.selected:
            return np.zeros(len(cand))
        return self.fn.d[np.ix_(cand, self.selected)].sum(axis=1)

    def _commit(self, j):
        row = self.fn.d[j, self.selected]
        self.sums = np.append(self.sums + row, row.sum())

    def _exact_value(self):
        return self.sums.sum() / 2.0


class DisparityMinSum(_DistanceModel):
    """``sum_{k in X} min_{l in X, l != k} d_kl``; 0 when ``|X| < 2``."""

    name = "disparity_min_sum"

    @property
    def monotone(self):
        return False

    @property
    def submodular(self):
        # gain(b | {}) = 0 < gain(b | {a}) = 2 d_ab, so diminishing returns fails
        return False

    def _evaluate(self, X):
        if len(X) < 2:
            return 0.0
        block = np.array(self.d[np.ix_(X, X)])
        np.fill_diagonal(block, np.inf)
        return math.fsum(block.min(axis=1))

    def memo(self):
        return _DisparityMinSumMemo(self)


class _DisparityMinSumMemo(Memo):
    fn: DisparityMinSum

    def _reset_stats(self):
        # nearest[t] = distance from selected[t] to its closest other selected item
        self.nearest = np.zeros(0)

    def _gain(self, j):
        if not self.selected:
            return 0.0
        row = self.fn.d[j, self.selected]
        return np.minimum(self.nearest, row).sum() + row.min() - self.value

    def _gains(self, cand):
        if not self.selected:
            return np.zeros(len(cand))
        block = self.fn.d[np.ix_(cand, self.selected)]
        return np.minimum(block, self.nearest).sum(axis=1) + block.min(axis=1) - self.value

    def _commit(self, j):
        if not self.selected:
            self.nearest = np.array([np.inf])
            return
        row = self.fn.d[j, self.selected]
        self.nearest = np.append(np.minimum(self.nearest, row), row.min())

    def _exact_value(self):
        return self.nearest.sum() if len(self.selected) >= 2 else 0.0


# --------------------------------------------------------------------------
# relevance models
# --------------------------------------------------------------------------


class ModularImportance(SetFunction):
    """Sum of per-item relevance scores."""

    name = "modular_importance"
    family = "modular"

    def __init__(self, scores: Sequence[float]):
        r = np.array(scores, dtype=float).ravel()
        if r.size == 0 or not np.all(np.isfinite(r)) or r.min() < 0:
            raise InvalidParam("scores must be a non-empty list of finite values >= 0")
        r.setflags(write=False)
        self.scores = r
        self.n = r.size

    def _evaluate(self, X):
        return self.scores[X].sum()

    def memo(self):
        return _ModularMemo(self)


class _ModularMemo(Memo):
    fn: ModularImportance

    def _reset_stats(self):
        pass

    def _gain(self, j):
        return self.fn.scores[j]

    def _gains(self, cand):
        return self.fn.scores[cand]

    def _commit(self, j):
        pass


class MaxMarginalRelevance(SetFunction):
    """Relevance traded against redundancy with what is already selected.

    The gain of ``j`` is ``theta * rel_j - (1 - theta) * max_{k in X} s_kj``
    and the value of an ordered selection is the sum of the gains in that
    order, so ``evaluate`` depends on the order of ``X``.
    """

    name = "max_marginal_relevance"
    family = "similarity"

    def __init__(self, kernel: Kernel | np.ndarray, relevance: Sequence[float], theta: float = 0.7):
        self.kernel = _check_kernel(kernel)
        self.n = self.kernel.n
        rel = np.array(relevance, dtype=float).ravel()
        if rel.shape != (self.n,):
            raise InvalidParam(f"expected {self.n} relevance scores, got {rel.size}")
        if not np.all(np.isfinite(rel)) or rel.min() < 0 or rel.max() > 1:
            raise InvalidParam("relevance scores must lie in [0, 1]")
        if not 0 <= theta <= 1:
            raise InvalidParam(f"theta must lie in [0, 1], got {theta}")
        rel.setflags(write=False)
        self.relevance = rel
        self.theta = float(theta)

    @property
    def monotone(self):
        return False

    @property
    def submodular(self):
        return False

    def params(self):
        return {"theta": self.theta}

    def _evaluate(self, X):
        block = self.kernel.block(X, X)
        total = 0.0
        for t, j in enumerate(X):
            redundancy = block[:t, t].max() if t else 0.0
            total += self.theta * self.relevance[j] - (1.0 - self.theta) * redundancy
        return total

    def memo(self):
        return _MMRMemo(self)


class _MMRMemo(Memo):
    fn: MaxMarginalRelevance

    def _reset_stats(self):
        self.redundancy = np.zeros(self.n)

    def _gain(self, j):
        fn = self.fn
        return fn.theta * fn.relevance[j] - (1.0 - fn.theta) * self.redundancy[j]

    def _gains(self, cand):
        fn = self.fn
        return fn.theta * fn.relevance[cand] - (1.0 - fn.theta) * self.redundancy[cand]

    def _commit(self, j):
        np.maximum(self.redundancy, self.fn.kernel.row(j), out=self.redundancy)


MODEL_CLASSES: dict[str, type[SetFunction]] = {
    cls.name: cls
    for cls in (
        FacilityLocation,
        SaturatedCoverage,
        GraphCut,
        FeatureBased,
        SetCover,
        ProbabilisticSetCover,
        DisparityMin,
        DisparitySum,
        DisparityMinSum,
        ModularImportance,
        MaxMarginalRelevance,
    )
}
