"""Greedy maximizers: plain, lazy, budgeted, cover, stream, max-min dispersion.

All solvers break ties towards the lowest item index, so the lazy variants
return exactly the same sequence as the plain ones whenever the model is
submodular.  Models that are not flagged submodular make ``lazy=True`` fall
back to the plain scan because stale bounds are not upper bounds for them.
"""

from __future__ import annotations

import heapq
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import GroundSet, Memo, ModelInfo, ScratchMemo, Selection, SetFunction
from .errors import InvalidCost, InvalidParam, TooLarge, Unsupported
from .functions import DisparityMin

__all__ = [
    "SolverConfig",
    "ALGORITHMS",
    "COMPATIBILITY",
    "check_compatible",
    "naive_greedy",
    "lazy_greedy",
    "budgeted_greedy",
    "cover_greedy",
    "stream_greedy",
    "disparity_min_greedy",
    "brute_force_opt",
    "solve",
]

COVER_TOL = 1e-9
# relative width of the band in which stale lazy bounds are re-checked
LAZY_SLACK = 1e-12

# constraint mode -> model families allowed
COMPATIBILITY = {
    "cardinality": {"similarity", "coverage", "distance", "modular"},
    "knapsack": {"similarity", "coverage", "distance", "modular"},
    "cover": {"similarity", "coverage", "modular"},
    "stream": {"similarity", "distance", "modular"},
}

# command-line algorithm name -> constraint mode
ALGORITHMS = {
    "greedy": "cardinality",
    "lazy": "cardinality",
    "budgeted": "knapsack",
    "cover": "cover",
    "stream": "stream",
}


def check_compatible(info: ModelInfo, mode: str) -> None:
    """Raise :class:`Unsupported` if ``mode`` is not offered for the model."""
    if mode not in COMPATIBILITY:
        raise InvalidParam(f"unknown constraint mode {mode!r}")
    if info.family not in COMPATIBILITY[mode]:
        allowed = ", ".join(m for m, fams in COMPATIBILITY.items() if info.family in fams)
        raise Unsupported(
            f"{info.name} ({info.family}-based) has no {mode} solver; available: {allowed}"
        )
    if mode == "cover" and not info.monotone:
        raise Unsupported(f"cover greedy needs a monotone model; {info.name} is not")


@dataclass(frozen=True)
class SolverConfig:
    """Constraint plus solver switches.

    ``mode`` is one of ``cardinality`` (uses ``k``), ``knapsack`` (``budget``),
    ``cover`` (``rho``) or ``stream`` (``tau`` and optional ``seed``).
    ``stop_at_zero=None`` picks the default: off for monotone models, on
    otherwise.
    """

    mode: str = "cardinality"
    k: int | None = None
    budget: float | None = None
    rho: float = 1.0
    tau: float | None = None
    seed: int | None = None
    lazy: bool = True
    stop_at_zero: bool | None = None

    def __post_init__(self):
        if self.mode not in COMPATIBILITY:
            raise InvalidParam(f"unknown constraint mode {self.mode!r}")
        if self.mode == "cardinality" and (self.k is None or self.k < 1):
            raise InvalidParam("cardinality mode needs k >= 1")
        if self.mode == "knapsack" and (self.budget is None or not self.budget > 0):
            raise InvalidParam("knapsack mode needs budget > 0")
        if self.mode == "cover" and not 0 < self.rho <= 1:
            raise InvalidParam("cover mode needs rho in (0, 1]")
        if self.mode == "stream" and (self.tau is None or math.isnan(self.tau) or self.tau == math.inf):
            raise InvalidParam("stream mode needs a threshold tau < inf")

    def describe(self) -> dict:
        out = {"mode": self.mode, "lazy": self.lazy}
        if self.mode == "cardinality":
            out["k"] = self.k
        elif self.mode == "knapsack":
            out["budget"] = self.budget
        elif self.mode == "cover":
            out["rho"] = self.rho
        else:
            out["tau"] = self.tau
            out["seed"] = self.seed
        return out


# --------------------------------------------------------------------------
# shared machinery
# --------------------------------------------------------------------------


def _check_sizes(fn: SetFunction, gs: GroundSet) -> None:
    if fn.n != gs.n:
        raise InvalidParam(f"model covers {fn.n} items but the ground set has {gs.n}")


def _new_memo(fn: SetFunction, memoize: bool, initial: Sequence[int]) -> Memo:
    memo = fn.memo() if memoize else ScratchMemo(fn)
    for j in initial:
        memo.add(j)
    return memo


def _candidate_mask(n: int, candidates, memo: Memo) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    if candidates is None:
        mask[:] = True
    else:
        mask[np.asarray(candidates, dtype=np.intp)] = True
    mask &= ~memo.in_set
    return mask


def _scan(memo: Memo, cand: np.ndarray, threads: int) -> np.ndarray:
    if threads <= 1 or len(cand) < 2 * threads:
        return memo.gains(cand)
    parts = np.array_split(cand, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate(list(pool.map(memo.gains, parts)))


def _stop_default(fn: SetFunction, stop_at_zero: bool | None) -> bool:
    return (not fn.monotone) if stop_at_zero is None else stop_at_zero


def _stale_within(heap: list, bound: float, stamp: int) -> list[int]:
    """Positions of stale heap entries with key <= ``bound``.

    Walks only subtrees whose root is within the bound.
    """
    out, todo = [], [0]
    while todo:
        i = todo.pop()
        if i >= len(heap) or heap[i][0] > bound:
            continue
        if heap[i][2] != stamp:
            out.append(i)
        todo += (2 * i + 1, 2 * i + 2)
    return out


def _greedy(
    fn: SetFunction,
    costs: np.ndarray,
    *,
    budget: float = math.inf,
    max_items: int | None = None,
    target: float | None = None,
    lazy: bool = True,
    stop_at_zero: bool = False,
    memoize: bool = True,
    initial: Sequence[int] = (),
    candidates=None,
    threads: int = 1,
) -> Selection:
    """Cost-ratio greedy; the single loop behind every argmax-style solver.

    Stops when ``max_items`` picks were made, nothing feasible is left, the
    value reaches ``target`` or (with ``stop_at_zero``) the best gain is
    negative.
    """
    memo = _new_memo(fn, memoize, initial)
    remaining = budget - float(costs[list(initial)].sum()) if len(initial) else budget
    avail = _candidate_mask(fn.n, candidates, memo)
    max_items = int(avail.sum()) if max_items is None else max_items
    sel = Selection()

    def done() -> bool:
        return len(sel) >= max_items or (target is not None and memo.value >= target)

    def accept(j: int, g: float) -> bool:
        if stop_at_zero and g < 0:
            return False
        if target is not None and g <= 0:
            return False
        memo.add(j)
        sel.indices.append(j)
        sel.objective_trace.append(memo.value)
        return True

    if not (lazy and fn.submodular):
        while not done():
            cand = np.flatnonzero(avail & (costs <= remaining))
            if cand.size == 0:
                break
            g = _scan(memo, cand, threads)
            best = int(np.argmax(g / costs[cand]))
            j = int(cand[best])
            if not accept(j, float(g[best])):
                break
            avail[j] = False
            remaining -= costs[j]
        return sel

    sel.resorts = []
    cand = np.flatnonzero(avail & (costs <= remaining))
    g0 = memo.gains(cand)
    stamp = len(memo.selected)
    heap = [(-float(g / costs[j]), int(j), stamp) for j, g in zip(cand, g0)]
    heapq.heapify(heap)
    while heap and not done():
        stamp = len(memo.selected)
        resorts = 0
        while heap:
            neg, j, seen = heap[0]
            if costs[j] > remaining:
                heapq.heappop(heap)
            elif seen == stamp:
                # Rounding can leave a stale bound a few ulps under a fresh gain
                # it truly ties with; refresh those too so ties still go to the
                # lowest index exactly as in the plain scan.
                slack = LAZY_SLACK * max(1.0, abs(memo.value), abs(neg)) / float(costs.min())
                near = _stale_within(heap, neg + slack, stamp)
                if not near:
                    break
                for i in near:
                    j2 = heap[i][1]
                    heap[i] = (-memo.gain(j2) / costs[j2], j2, stamp)
                resorts += len(near)
                heapq.heapify(heap)
            else:
                g = memo.gain(j)
                heapq.heapreplace(heap, (-g / costs[j], j, stamp))
                resorts += 1
        if not heap:
            break
        neg, j, _ = heapq.heappop(heap)
        sel.resorts.append(resorts)
        if not accept(j, -neg * costs[j]):
            break
        remaining -= costs[j]
    return sel


# --------------------------------------------------------------------------
# public solvers
# --------------------------------------------------------------------------


def naive_greedy(
    fn: SetFunction,
    gs: GroundSet,
    k: int,
    *,
    stop_at_zero: bool | None = None,
    memoize: bool = True,
    initial: Sequence[int] = (),
    candidates=None,
    threads: int = 1,
) -> Selection:
    """``k`` rounds of exact argmax over fresh marginal gains.

    ``initial`` items count as already chosen and are not returned;
    ``candidates`` restricts which items may be picked.
    """
    _check_sizes(fn, gs)
    pool = gs.n - len(initial) if candidates is None else len(candidates)
    if not 1 <= k <= max(pool, 1):
        raise InvalidParam(f"k must satisfy 1 <= k <= {pool}, got {k}")
    return _greedy(
        fn,
        np.ones(gs.n),
        max_items=k,
        lazy=False,
        stop_at_zero=_stop_default(fn, stop_at_zero),
        memoize=memoize,
        initial=initial,
        candidates=candidates,
        threads=threads,
    )


def lazy_greedy(
    fn: SetFunction,
    gs: GroundSet,
    k: int,
    *,
    stop_at_zero: bool | None = None,
    memoize: bool = True,
    initial: Sequence[int] = (),
    candidates=None,
) -> Selection:
    """Priority-queue greedy; same output as :func:`naive_greedy`.

    ``Selection.resorts`` records how many stale bounds were refreshed in
    each round.  Non-submodular models use the plain scan.
    """
    _check_sizes(fn, gs)
    pool = gs.n - len(initial) if candidates is None else len(candidates)
    if not 1 <= k <= max(pool, 1):
        raise InvalidParam(f"k must satisfy 1 <= k <= {pool}, got {k}")
    return _greedy(
        fn,
        np.ones(gs.n),
        max_items=k,
        lazy=True,
        stop_at_zero=_stop_default(fn, stop_at_zero),
        memoize=memoize,
        initial=initial,
        candidates=candidates,
    )


def budgeted_greedy(
    fn: SetFunction,
    gs: GroundSet,
    budget: float,
    *,
    lazy: bool = True,
    stop_at_zero: bool | None = None,
    memoize: bool = True,
) -> Selection:
    """Pick the best gain-per-cost item that still fits until none does.

    This is the plain cost-benefit rule; it carries no approximation
    guarantee on its own (the classical fix compares against the best single
    item or enumerates small seeds, neither of which is done here).
    """
    _check_sizes(fn, gs)
    if not budget > 0:
        raise InvalidParam("budget must be > 0")
    if np.any(gs.costs <= 0):
        raise InvalidCost("budgeted greedy divides by cost; every cost must be > 0")
    return _greedy(
        fn,
        np.asarray(gs.costs, dtype=float),
        budget=float(budget),
        lazy=lazy,
        stop_at_zero=_stop_default(fn, stop_at_zero),
        memoize=memoize,
    )


def cover_greedy(
    fn: SetFunction,
    gs: GroundSet,
    rho: float = 1.0,
    *,
    lazy: bool = True,
    memoize: bool = True,
) -> Selection:
    """Add the best item until ``f(X) >= rho * f(V)`` (up to 1e-9)."""
    _check_sizes(fn, gs)
    check_compatible(fn.describe(), "cover")
    if not 0 < rho <= 1:
        raise InvalidParam("rho must lie in (0, 1]")
    target = rho * fn.evaluate(range(fn.n)) - COVER_TOL
    return _greedy(fn, np.ones(gs.n), target=target, lazy=lazy, memoize=memoize)


def stream_greedy(
    fn: SetFunction,
    gs: GroundSet,
    tau: float,
    seed: int | None = None,
    *,
    memoize: bool = True,
) -> Selection:
    """One pass in natural (or seeded shuffled) order, keeping gains >= tau."""
    _check_sizes(fn, gs)
    check_compatible(fn.describe(), "stream")
    if math.isnan(tau) or tau == math.inf:
        raise InvalidParam("tau must be a number below +inf")
    order = np.arange(fn.n) if seed is None else np.random.default_rng(seed).permutation(fn.n)
    memo = _new_memo(fn, memoize, ())
    sel = Selection()
    for j in order:
        j = int(j)
        if memo.gain(j) >= tau:
            memo.add(j)
            sel.indices.append(j)
            sel.objective_trace.append(memo.value)
    return sel


def disparity_min_greedy(
    fn: DisparityMin,
    gs: GroundSet,
    k: int,
    *,
    initial: Sequence[int] = (),
    candidates=None,
) -> Selection:
    """Max-min dispersion heuristic.

    Starts from the farthest pair (unless ``initial`` is given) and then adds
    the item farthest from its nearest chosen item.
    """
    _check_sizes(fn, gs)
    if not isinstance(fn, DisparityMin):
        raise Unsupported("disparity_min_greedy needs a DisparityMin model")
    if k > gs.n or (not initial and k < 2) or k < 1:
        raise InvalidParam(f"k must satisfy {1 if initial else 2} <= k <= {gs.n}, got {k}")
    d = fn.d
    memo = _new_memo(fn, True, initial)
    avail = _candidate_mask(fn.n, candidates, memo)
    if k > avail.sum():
        raise InvalidParam(f"only {int(avail.sum())} candidates for k={k}")
    sel = Selection()

    def take(j: int) -> None:
        memo.add(j)
        avail[j] = False
        sel.indices.append(j)
        sel.objective_trace.append(memo.value)

    if not memo.selected:
        sub = np.flatnonzero(avail)
        block = np.triu(d[np.ix_(sub, sub)], 1)
        a, b = np.unravel_index(int(np.argmax(block)), block.shape)
        take(int(sub[a]))
        take(int(sub[b]))
    nearest = d[:, memo.selected].min(axis=1)
    while len(sel) < k:
        cand = np.flatnonzero(avail)
        j = int(cand[np.argmax(nearest[cand])])
        take(j)
        np.minimum(nearest, d[:, j], out=nearest)
    return sel


def brute_force_opt(
    fn: SetFunction, gs: GroundSet, k: int, limit: int = 10**6
) -> tuple[tuple[int, ...], float]:
    """Exact maximizer over all ``k``-subsets; ties go to the first in lexicographic order."""
    _check_sizes(fn, gs)
    if not 0 <= k <= gs.n:
        raise InvalidParam(f"k must satisfy 0 <= k <= {gs.n}")
    count = math.comb(gs.n, k)
    if count > limit:
        raise TooLarge(f"C({gs.n}, {k}) = {count} subsets exceeds the limit {limit}")
    best, best_val = (), -math.inf
    for combo in itertools.combinations(range(gs.n), k):
        v = fn.evaluate(combo)
        if v > best_val:
            best, best_val = combo, v
    return best, best_val


def solve(fn: SetFunction, gs: GroundSet, config: SolverConfig, *, threads: int = 1) -> Selection:
    """Run the solver named by ``config`` after checking compatibility."""
    check_compatible(fn.describe(), config.mode)
    if config.mode == "cardinality":
        if isinstance(fn, DisparityMin) and config.k >= 2:
            return disparity_min_greedy(fn, gs, config.k)
        if config.lazy:
            return lazy_greedy(fn, gs, config.k, stop_at_zero=config.stop_at_zero)
        return naive_greedy(fn, gs, config.k, stop_at_zero=config.stop_at_zero, threads=threads)
    if config.mode == "knapsack":
        return budgeted_greedy(
            fn, gs, config.budget, lazy=config.lazy, stop_at_zero=config.stop_at_zero
        )
    if config.mode == "cover":
        return cover_greedy(fn, gs, config.rho, lazy=config.lazy)
    return stream_greedy(fn, gs, config.tau, config.seed)
