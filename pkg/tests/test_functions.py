import numpy as np
import pytest

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
from subsum.core import ScratchMemo
from subsum.errors import InvalidParam, InvalidProbability
from subsum.functions import MODEL_CLASSES

from helpers import ALL_MODELS, SUBMODULAR_MODELS, random_instance, random_subset, reference_value

# -- worked values ----------------------------------------------------------


def test_facility_location_identity():
    assert FacilityLocation(np.eye(3)).evaluate([0, 1]) == 2.0


def test_set_cover_union():
    assert SetCover([[0, 1], [1, 2]]).evaluate([0, 1]) == 3.0


def test_feature_based_sqrt():
    assert FeatureBased([[4, 0], [0, 9]], "sqrt").evaluate([0, 1]) == 5.0


def test_probabilistic_set_cover():
    assert ProbabilisticSetCover([[0.5, 0], [0.5, 0]], [1, 1]).evaluate([0, 1]) == pytest.approx(0.75)


def test_graph_cut_all_ones():
    assert GraphCut(np.ones((3, 3)), lam=1.0).evaluate([0]) == 2.0


def test_disparity_min_triangle():
    d = np.array([[0, 3, 1], [3, 0, 2], [1, 2, 0]], dtype=float)
    assert DisparityMin(d).evaluate([0, 1, 2]) == 1.0


def test_facility_location_gain():
    memo = FacilityLocation(np.array([[1, 0.5], [0.5, 1]])).memo()
    memo.add(0)
    assert memo.gain(1) == pytest.approx(0.5)


def test_modular_gain():
    memo = ModularImportance([2, 7]).memo()
    memo.add(0)
    assert memo.gain(1) == 7


def test_facility_location_commit_updates_best():
    rng = np.random.default_rng(0)
    fn, raw = random_instance("facility_location", 6, rng)
    memo = fn.memo()
    memo.add(2)
    old = memo.best.copy()
    memo.add(4)
    np.testing.assert_array_equal(memo.best, np.maximum(old, raw["s"][:, 4]))


def test_set_cover_commit_grows_covered_set():
    memo = SetCover([[0, 1], [1, 2], [3]]).memo()
    memo.add(0)
    memo.add(2)
    assert sorted(np.flatnonzero(memo.covered)) == [0, 1, 3]


def test_disparity_min_sum_commit_matches_scratch():
    rng = np.random.default_rng(4)
    fn, raw = random_instance("disparity_min_sum", 9, rng)
    memo = fn.memo()
    for j in (3, 7, 1, 5):
        memo.add(j)
        assert memo.value == pytest.approx(reference_value("disparity_min_sum", raw, memo.selected), abs=1e-12)


def test_disparity_sum_counts_unordered_pairs_once():
    d = np.array([[0, 1, 2], [1, 0, 4], [2, 4, 0]], dtype=float)
    assert DisparitySum(d).evaluate([0, 1, 2]) == 7.0


def test_dispersion_small_sets_are_zero():
    d = np.array([[0, 5], [5, 0]], dtype=float)
    for cls in (DisparityMin, DisparitySum, DisparityMinSum):
        assert cls(d).evaluate([1]) == 0.0


def test_mmr_value_is_order_dependent():
    s = np.array([[1, 0.8], [0.8, 1]])
    fn = MaxMarginalRelevance(s, [1.0, 0.2], theta=0.5)
    assert fn.evaluate([0, 1]) == pytest.approx(0.5 + 0.1 - 0.4)
    assert fn.evaluate([1, 0]) == pytest.approx(0.1 + 0.5 - 0.4)
    assert fn.evaluate([0, 1]) == pytest.approx(fn.evaluate([1, 0]))
    fn2 = MaxMarginalRelevance(np.array([[1, 0.8], [0.3, 1]]), [1.0, 0.2], theta=0.5)
    assert fn2.evaluate([0, 1]) != pytest.approx(fn2.evaluate([1, 0]))


# -- metadata ------------------------------------------------------------------


@pytest.mark.parametrize(
    "name, family, monotone, submodular",
    [
        ("facility_location", "similarity", True, True),
        ("set_cover", "coverage", True, True),
        ("disparity_sum", "distance", True, False),
        ("disparity_min", "distance", False, False),
        ("disparity_min_sum", "distance", False, False),
        ("modular_importance", "modular", True, True),
        ("max_marginal_relevance", "similarity", False, False),
    ],
)
def test_describe(name, family, monotone, submodular):
    fn, _ = random_instance(name, 5, np.random.default_rng(0))
    info = fn.describe()
    assert (info.name, info.family, info.monotone, info.submodular) == (name, family, monotone, submodular)


def test_graph_cut_monotone_flag_depends_on_lambda():
    s = np.eye(3)
    assert GraphCut(s, 2.0).monotone
    assert not GraphCut(s, 1.0).monotone


def test_model_registry_covers_all():
    assert set(MODEL_CLASSES) == set(ALL_MODELS)


def test_disparity_min_sum_not_submodular_counterexample():
    # gain of b grows from 0 (empty set) to 2*d_ab once a is selected
    d = np.array([[0, 3, 5], [3, 0, 4], [5, 4, 0]], dtype=float)
    fn = DisparityMinSum(d)
    assert fn.evaluate([1]) - fn.evaluate([]) == 0.0
    assert fn.evaluate([0, 1]) - fn.evaluate([0]) == 6.0


# -- validation ----------------------------------------------------------------


def test_parameter_validation():
    with pytest.raises(InvalidParam):
        SaturatedCoverage(np.eye(2), alpha=0.0)
    with pytest.raises(InvalidParam):
        GraphCut(np.eye(2), lam=-1)
    with pytest.raises(InvalidParam):
        FeatureBased([[1.0]], psi="cube")
    with pytest.raises(InvalidParam):
        FeatureBased([[-1.0]])
    with pytest.raises(InvalidProbability):
        ProbabilisticSetCover([[1.5]])
    with pytest.raises(InvalidParam):
        MaxMarginalRelevance(np.eye(2), [0.5, 0.5], theta=1.5)
    with pytest.raises(InvalidParam):
        MaxMarginalRelevance(np.eye(2), [0.5])
    with pytest.raises(InvalidParam):
        ModularImportance([1.0, -2.0])


# -- reference definitions, memo vs scratch -------------------------------------


@pytest.mark.parametrize("name", ALL_MODELS)
def test_evaluate_matches_reference_definition(name):
    rng = np.random.default_rng(11)
    for _ in range(20):
        fn, raw = random_instance(name, 8, rng)
        X = random_subset(rng, 8)
        assert fn.evaluate(X) == pytest.approx(reference_value(name, raw, X), abs=1e-9)


@pytest.mark.parametrize("name", ALL_MODELS)
def test_memo_tracks_scratch_along_a_random_order(name):
    rng = np.random.default_rng(12)
    fn, _ = random_instance(name, 12, rng)
    memo, scratch = fn.memo(), ScratchMemo(fn)
    for j in rng.permutation(12):
        rest = np.flatnonzero(~memo.in_set)
        np.testing.assert_allclose(memo.gains(rest), scratch.gains(rest), atol=1e-9)
        assert memo.gain(j) == pytest.approx(scratch.gain(j), abs=1e-9)
        memo.add(j)
        scratch.add(j)
        assert memo.value == pytest.approx(fn.evaluate(memo.selected), abs=1e-9)


@pytest.mark.parametrize("name", ["facility_location", "saturated_coverage", "graph_cut", "max_marginal_relevance"])
def test_sparse_kernel_memo_matches_scratch(name):
    from subsum.similarity import sparsify_knn, Kernel

    rng = np.random.default_rng(13)
    fn, raw = random_instance(name, 15, rng)
    k = sparsify_knn(Kernel(raw["s"]), 3)
    cls = type(fn)
    sfn = cls(k, raw["rel"], raw["theta"]) if name == "max_marginal_relevance" else cls(k)
    memo, scratch = sfn.memo(), ScratchMemo(sfn)
    for j in rng.permutation(15)[:8]:
        rest = np.flatnonzero(~memo.in_set)
        np.testing.assert_allclose(memo.gains(rest), scratch.gains(rest), atol=1e-9)
        memo.add(j)
        scratch.add(j)


def test_graph_cut_gain_formula():
    rng = np.random.default_rng(14)
    fn, raw = random_instance("graph_cut", 10, rng, lam=2.5)
    s = raw["s"]
    X = [1, 5, 7]
    memo = fn.memo()
    for j in X:
        memo.add(j)
    T = s.sum(axis=0)
    for v in set(range(10)) - set(X):
        p_v = s[X, v].sum()
        assert memo.gain(v) == pytest.approx(2.5 * T[v] - 2 * p_v - s[v, v], abs=1e-12)


@pytest.mark.parametrize("psi", ["sqrt", "log1p", "inverse"])
def test_feature_based_transforms(psi):
    rng = np.random.default_rng(15)
    fn, raw = random_instance("feature_based", 8, rng, psi=psi)
    X = [0, 3, 4]
    assert fn.evaluate(X) == pytest.approx(reference_value("feature_based", raw, X), abs=1e-12)


def test_probabilistic_reduces_to_set_cover():
    rng = np.random.default_rng(16)
    for _ in range(50):
        p = (rng.random((7, 6)) < 0.3).astype(float)
        w = rng.uniform(0.5, 2, 6)
        sc = SetCover([np.flatnonzero(r) for r in p], w)
        psc = ProbabilisticSetCover(p, w)
        X = random_subset(rng, 7)
        assert psc.evaluate(X) == pytest.approx(sc.evaluate(X), abs=1e-12)


# -- lattice properties over random triples --------------------------------------


def _triples(rng, n, count):
    for _ in range(count):
        perm = rng.permutation(n)
        a = int(rng.integers(0, n - 1))
        b = int(rng.integers(a, n - 1))
        yield perm[:a].tolist(), perm[:b].tolist(), int(perm[n - 1])


@pytest.mark.parametrize("name", SUBMODULAR_MODELS)
def test_diminishing_returns(name):
    rng = np.random.default_rng(21)
    worst = np.inf
    for t, (X, Y, j) in enumerate(_triples(rng, 10, 1000)):
        if t % 100 == 0:
            fn, _ = random_instance(name, 10, rng)
        gx = fn.evaluate(X + [j]) - fn.evaluate(X)
        gy = fn.evaluate(Y + [j]) - fn.evaluate(Y)
        worst = min(worst, gx - gy)
    assert worst >= -1e-9


def test_disparity_sum_supermodular():
    rng = np.random.default_rng(22)
    for t, (X, Y, j) in enumerate(_triples(rng, 10, 1000)):
        if t % 100 == 0:
            fn, _ = random_instance("disparity_sum", 10, rng)
        gx = fn.evaluate(X + [j]) - fn.evaluate(X)
        gy = fn.evaluate(Y + [j]) - fn.evaluate(Y)
        assert gx <= gy + 1e-9


@pytest.mark.parametrize(
    "name",
    ["facility_location", "saturated_coverage", "feature_based", "set_cover",
     "probabilistic_set_cover", "modular_importance", "disparity_sum", "graph_cut"],
)
def test_monotone_along_random_orders(name):
    rng = np.random.default_rng(23)
    for _ in range(30):
        fn, _ = random_instance(name, 9, rng)
        memo = fn.memo()
        prev = 0.0
        for j in rng.permutation(9):
            memo.add(j)
            assert memo.value >= prev - 1e-12
            prev = memo.value


def test_saturated_coverage_bounded_by_thresholds():
    rng = np.random.default_rng(24)
    fn, raw = random_instance("saturated_coverage", 10, rng)
    assert 0 <= fn.evaluate(range(10)) <= fn.thresholds.sum() + 1e-12
