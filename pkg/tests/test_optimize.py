import itertools
import math

import numpy as np
import pytest

from subsum import (
    DisparityMin,
    FacilityLocation,
    GroundSet,
    SetCover,
    SolverConfig,
    brute_force_opt,
    budgeted_greedy,
    cover_greedy,
    disparity_min_greedy,
    lazy_greedy,
    naive_greedy,
    new_ground_set,
    solve,
    stream_greedy,
)
from subsum.core import ModelInfo
from subsum.errors import InvalidCost, InvalidParam, TooLarge, Unsupported
from subsum.optimize import COMPATIBILITY, check_compatible

from helpers import ALL_MODELS, SUBMODULAR_MODELS, random_instance

S3 = np.array([[1, 0.9, 0], [0.9, 1, 0], [0, 0, 1]])
D3 = np.array([[0, 3, 1], [3, 0, 2], [1, 2, 0]], dtype=float)


def gs(n):
    return GroundSet.of_size(n)


# -- cardinality ---------------------------------------------------------------


def test_k1_tie_goes_to_lowest_index():
    sel = naive_greedy(FacilityLocation(S3), gs(3), 1)
    assert sel.indices == [0]
    assert sel.objective_trace == [pytest.approx(1.9)]


def test_k2_matches_brute_force():
    fn = FacilityLocation(S3)
    sel = naive_greedy(fn, gs(3), 2)
    assert sel.indices == [0, 2]
    assert sel.value == pytest.approx(2.9)
    # independent enumeration over all pairs
    best = max(itertools.combinations(range(3), 2), key=lambda p: sum(S3[:, list(p)].max(axis=1)))
    assert sum(S3[:, list(best)].max(axis=1)) == pytest.approx(sel.value)


@pytest.mark.parametrize("name", SUBMODULAR_MODELS + ("modular_importance",))
def test_k_equals_n_reaches_full_value(name):
    fn, _ = random_instance(name, 7, np.random.default_rng(0))
    sel = lazy_greedy(fn, gs(7), 7)
    assert sorted(sel.indices) == list(range(7))
    assert sel.value == pytest.approx(fn.evaluate(range(7)), abs=1e-9)


def test_k_out_of_range():
    with pytest.raises(InvalidParam):
        naive_greedy(FacilityLocation(S3), gs(3), 4)
    with pytest.raises(InvalidParam):
        lazy_greedy(FacilityLocation(S3), gs(3), 0)


def test_ground_set_size_mismatch():
    with pytest.raises(InvalidParam):
        naive_greedy(FacilityLocation(S3), gs(4), 1)


@pytest.mark.parametrize("name", SUBMODULAR_MODELS)
def test_lazy_equals_naive(name):
    rng = np.random.default_rng(1)
    for _ in range(15):
        n = int(rng.integers(10, 60))
        fn, _ = random_instance(name, n, rng)
        k = int(rng.integers(1, min(n, 20) + 1))
        a, b = naive_greedy(fn, gs(n), k), lazy_greedy(fn, gs(n), k)
        assert a.indices == b.indices
        np.testing.assert_allclose(a.objective_trace, b.objective_trace, atol=1e-12)


def test_lazy_equals_naive_fifty_item_facility_location():
    rng = np.random.default_rng(2)
    fn, _ = random_instance("facility_location", 50, rng)
    a, b = naive_greedy(fn, gs(50), 10), lazy_greedy(fn, gs(50), 10)
    assert a.indices == b.indices
    assert len(b.resorts) == 10
    assert all(0 <= r <= 50 for r in b.resorts)


@pytest.mark.parametrize("name", ["disparity_min", "disparity_sum", "disparity_min_sum", "max_marginal_relevance"])
def test_lazy_falls_back_for_non_submodular(name):
    rng = np.random.default_rng(3)
    fn, _ = random_instance(name, 15, rng)
    a, b = naive_greedy(fn, gs(15), 5), lazy_greedy(fn, gs(15), 5)
    assert a.indices == b.indices
    assert b.resorts is None


def test_memoized_and_scratch_paths_agree():
    rng = np.random.default_rng(4)
    for name in ALL_MODELS:
        fn, _ = random_instance(name, 20, rng)
        assert lazy_greedy(fn, gs(20), 6).indices == lazy_greedy(fn, gs(20), 6, memoize=False).indices


def test_threaded_scan_matches_serial():
    fn, _ = random_instance("facility_location", 80, np.random.default_rng(5))
    assert naive_greedy(fn, gs(80), 8, threads=4).indices == naive_greedy(fn, gs(80), 8).indices


def test_stop_at_zero_defaults():
    # modular scores with a zero: monotone, so the zero item is still taken
    from subsum import ModularImportance

    fn = ModularImportance([3.0, 0.0])
    assert naive_greedy(fn, gs(2), 2).indices == [0, 1]
    assert naive_greedy(fn, gs(2), 2, stop_at_zero=True).indices == [0, 1]


def test_stop_at_zero_for_non_monotone():
    # MMR: the second item is fully redundant and irrelevant, so its gain is negative
    from subsum import MaxMarginalRelevance

    fn = MaxMarginalRelevance(np.ones((2, 2)), [1.0, 0.0], theta=0.5)
    assert naive_greedy(fn, gs(2), 2).indices == [0]
    assert naive_greedy(fn, gs(2), 2, stop_at_zero=False).indices == [0, 1]


def test_initial_and_candidates():
    fn = FacilityLocation(S3)
    sel = naive_greedy(fn, gs(3), 1, initial=[0])
    assert sel.indices == [2]
    sel = lazy_greedy(fn, gs(3), 1, candidates=[1, 2])
    assert sel.indices == [1]


# -- knapsack ------------------------------------------------------------------


def test_budget_with_unit_costs_matches_cardinality():
    fn = FacilityLocation(S3)
    assert budgeted_greedy(fn, gs(3), 2).indices == naive_greedy(fn, gs(3), 2).indices


def test_unaffordable_item_is_skipped():
    fn = FacilityLocation(S3)
    sel = budgeted_greedy(fn, new_ground_set(["a", "b", "c"], [1, 1, 10]), 2)
    assert 2 not in sel.indices


def test_zero_cost_rejected():
    with pytest.raises(InvalidCost):
        budgeted_greedy(FacilityLocation(S3), new_ground_set(["a", "b", "c"], [1, 0, 1]), 2)


def test_budget_must_be_positive():
    with pytest.raises(InvalidParam):
        budgeted_greedy(FacilityLocation(S3), gs(3), 0)


def test_knapsack_respects_budget_and_opens_with_best_ratio():
    rng = np.random.default_rng(6)
    for _ in range(40):
        fn, _ = random_instance("facility_location", 8, rng)
        costs = rng.uniform(0.5, 3.0, 8)
        g = new_ground_set([str(i) for i in range(8)], costs)
        B = float(rng.uniform(1.0, 6.0))
        sel = budgeted_greedy(fn, g, B)
        assert costs[sel.indices].sum() <= B + 1e-12
        ratios = [fn.evaluate([j]) / costs[j] if costs[j] <= B else -1.0 for j in range(8)]
        if max(ratios) >= 0:
            assert sel.indices[0] == int(np.argmax(ratios))


def test_knapsack_at_least_best_singleton_on_unit_costs():
    rng = np.random.default_rng(7)
    for _ in range(30):
        fn, _ = random_instance("saturated_coverage", 8, rng)
        sel = budgeted_greedy(fn, gs(8), 3)
        assert sel.value >= max(fn.evaluate([j]) for j in range(8)) - 1e-12


# -- cover ---------------------------------------------------------------------


def test_cover_set_cover_trace():
    fn = SetCover([[0, 1], [1, 2], [0]])
    sel = cover_greedy(fn, gs(3))
    assert sel.indices == [0, 1]
    assert sel.objective_trace == [2.0, 3.0]


def test_cover_all_zero_is_empty():
    sel = cover_greedy(SetCover([[], []], [1.0]), gs(2))
    assert sel.indices == []


def test_cover_fraction_facility_location():
    fn, _ = random_instance("facility_location", 30, np.random.default_rng(8))
    sel = cover_greedy(fn, gs(30), 0.9)
    assert sel.value >= 0.9 * fn.evaluate(range(30)) - 1e-9


def test_cover_needs_monotone():
    fn, _ = random_instance("disparity_min", 5, np.random.default_rng(0))
    with pytest.raises(Unsupported):
        cover_greedy(fn, gs(5))


# -- stream --------------------------------------------------------------------


def test_stream_hand_trace():
    assert stream_greedy(FacilityLocation(S3), gs(3), 1.5).indices == [0]


def test_stream_minus_infinity_takes_all():
    assert stream_greedy(FacilityLocation(S3), gs(3), -math.inf).indices == [0, 1, 2]


def test_stream_high_threshold_takes_none():
    assert stream_greedy(FacilityLocation(S3), gs(3), 5.0).indices == []


def test_stream_seeded_order_is_deterministic():
    fn, _ = random_instance("facility_location", 20, np.random.default_rng(9))
    a = stream_greedy(fn, gs(20), 0.3, seed=4)
    assert a.indices == stream_greedy(fn, gs(20), 0.3, seed=4).indices


def test_stream_rejects_coverage_models():
    with pytest.raises(Unsupported):
        stream_greedy(SetCover([[0], [1]]), gs(2), 0.5)


def test_stream_rejects_infinite_tau():
    with pytest.raises(InvalidParam):
        stream_greedy(FacilityLocation(S3), gs(3), math.inf)


# -- dispersion ----------------------------------------------------------------


def test_disparity_min_greedy_farthest_pair():
    assert disparity_min_greedy(DisparityMin(D3), gs(3), 2).indices == [0, 1]


def test_disparity_min_greedy_completion():
    sel = disparity_min_greedy(DisparityMin(D3), gs(3), 3)
    assert sel.indices == [0, 1, 2] and sel.value == 1.0


def test_disparity_min_greedy_line_extremes():
    from subsum import compute_distances

    d = compute_distances([[0.0], [1.0], [10.0]])
    assert sorted(disparity_min_greedy(DisparityMin(d), gs(3), 2).indices) == [0, 2]


def test_disparity_min_greedy_k_too_large():
    with pytest.raises(InvalidParam):
        disparity_min_greedy(DisparityMin(D3), gs(3), 4)


# -- brute force ---------------------------------------------------------------


def test_brute_force_identity_tie():
    assert brute_force_opt(FacilityLocation(np.eye(4)), gs(4), 2) == ((0, 1), 2.0)


def test_brute_force_full_set():
    fn, _ = random_instance("facility_location", 6, np.random.default_rng(10))
    _, v = brute_force_opt(fn, gs(6), 6)
    assert v == pytest.approx(fn.evaluate(range(6)))


def test_brute_force_guard():
    with pytest.raises(TooLarge):
        brute_force_opt(FacilityLocation(np.eye(30)), gs(30), 15)


@pytest.mark.parametrize("name", SUBMODULAR_MODELS)
def test_greedy_near_optimal_small(name):
    rng = np.random.default_rng(11)
    for _ in range(10):
        fn, _ = random_instance(name, 10, rng)
        k = int(rng.integers(1, 5))
        _, opt = brute_force_opt(fn, gs(10), k)
        assert lazy_greedy(fn, gs(10), k).value >= (1 - 1 / math.e) * opt - 1e-12


# -- compatibility and dispatch -------------------------------------------------


def test_compatibility_matrix():
    assert set(COMPATIBILITY["stream"]) == {"similarity", "distance", "modular"}
    assert "coverage" not in COMPATIBILITY["stream"]
    assert "distance" not in COMPATIBILITY["cover"]
    with pytest.raises(Unsupported):
        check_compatible(ModelInfo("set_cover", "coverage", True, True), "stream")
    check_compatible(ModelInfo("facility_location", "similarity", True, True), "stream")


def test_solver_config_validation():
    with pytest.raises(InvalidParam):
        SolverConfig("cardinality")
    with pytest.raises(InvalidParam):
        SolverConfig("knapsack", budget=0)
    with pytest.raises(InvalidParam):
        SolverConfig("cover", rho=0)
    with pytest.raises(InvalidParam):
        SolverConfig("stream")
    with pytest.raises(InvalidParam):
        SolverConfig("matroid")


def test_solve_dispatch():
    fn = FacilityLocation(S3)
    assert solve(fn, gs(3), SolverConfig("cardinality", k=2)).indices == [0, 2]
    assert solve(fn, gs(3), SolverConfig("knapsack", budget=2)).indices == [0, 2]
    assert solve(fn, gs(3), SolverConfig("stream", tau=1.5)).indices == [0]
    assert solve(DisparityMin(D3), gs(3), SolverConfig("cardinality", k=2)).indices == [0, 1]
    with pytest.raises(Unsupported):
        solve(SetCover([[0], [1]]), gs(2), SolverConfig("stream", tau=0.0))


def test_monotone_traces_non_decreasing():
    rng = np.random.default_rng(12)
    for name in ("facility_location", "set_cover", "feature_based"):
        fn, _ = random_instance(name, 15, rng)
        for sel in (lazy_greedy(fn, gs(15), 8), budgeted_greedy(fn, gs(15), 5), cover_greedy(fn, gs(15))):
            assert all(b >= a - 1e-12 for a, b in zip(sel.objective_trace, sel.objective_trace[1:]))
