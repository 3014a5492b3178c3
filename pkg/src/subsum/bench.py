"""Memoized versus from-scratch gain timing.

Both runs use :func:`~subsum.optimize.lazy_greedy` on the same seeded
instance; the only difference is whether gains come from the model's memo or
from ``f(X + j) - f(X)`` evaluated from the definition.  Non-submodular
models run the plain greedy scan in both cases.
"""

from __future__ import annotations

import csv
import io
import json
import os
import platform
import statistics
import time
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import GroundSet, SetFunction
from .datasets import random_features
from .errors import BenchInvalid, InvalidParam
from .functions import ProbabilisticSetCover, SetCover
from .optimize import lazy_greedy
from .pipelines import ModelConfig, ModelInputs, build_model

__all__ = [
    "BenchReport",
    "DEFAULT_MODELS",
    "DEFAULT_FRACTIONS",
    "bench_function",
    "bench_matrix",
    "reports_to_csv",
    "reports_to_json",
    "synthetic_model",
]

DEFAULT_MODELS = (
    "facility_location",
    "saturated_coverage",
    "graph_cut",
    "feature_based",
    "set_cover",
    "probabilistic_set_cover",
    "disparity_min",
    "disparity_sum",
)
DEFAULT_FRACTIONS = (0.05, 0.15, 0.30)
CSV_COLUMNS = ("function", "n", "fraction", "k", "memo_seconds", "naive_seconds", "speedup", "selections_equal")


@dataclass(frozen=True)
class BenchReport:
    function: str
    n: int
    fraction: float
    k: int
    memo_seconds: float
    naive_seconds: float
    speedup: float
    selections_equal: bool
    environment: str


def _environment() -> str:
    return (
        f"{platform.machine()} {platform.processor() or 'cpu'}; {os.cpu_count()} cpus; "
        f"python {platform.python_version()}; numpy {np.__version__}; "
        "baseline: lazy greedy with scratch gains"
    )


def synthetic_model(name: str, n: int, seed: int) -> SetFunction:
    """Seeded random instance of ``name`` over ``n`` items."""
    rng = np.random.default_rng([seed, n])
    if name == "set_cover":
        universe = max(50, n // 4)
        sets = [rng.choice(universe, size=rng.integers(1, 9), replace=False) for _ in range(n)]
        return SetCover(sets, rng.uniform(0.5, 2.0, universe))
    if name == "probabilistic_set_cover":
        p = rng.random((n, 100)) * (rng.random((n, 100)) < 0.1)
        return ProbabilisticSetCover(p)
    inputs = ModelInputs(scores=rng.random(n))
    fn, _ = build_model(ModelConfig(name), random_features(seed, n), inputs)
    return fn


def _timed(fn: SetFunction, gs: GroundSet, k: int, memoize: bool, repeats: int):
    times, sel = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        sel = lazy_greedy(fn, gs, k, memoize=memoize)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), sel


def bench_function(model: str, n: int, fraction: float, seed: int = 0, repeats: int = 3) -> BenchReport:
    """Time one model at one budget; raises :class:`BenchInvalid` on divergence."""
    if n < 100:
        raise InvalidParam("benchmarks need n >= 100")
    if not 0 < fraction <= 1:
        raise InvalidParam("fraction must lie in (0, 1]")
    fn = synthetic_model(model, n, seed)
    gs = GroundSet.of_size(n)
    k = max(1, round(fraction * n))
    memo_t, memo_sel = _timed(fn, gs, k, True, repeats)
    naive_t, naive_sel = _timed(fn, gs, k, False, repeats)
    equal = memo_sel.indices == naive_sel.indices
    if not equal:
        raise BenchInvalid(f"{model}: memoized and scratch selections differ (n={n}, k={k})")
    return BenchReport(model, n, fraction, k, memo_t, naive_t, naive_t / memo_t, equal, _environment())


def bench_matrix(
    models: Sequence[str] = DEFAULT_MODELS,
    n: int = 7200,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 0,
    repeats: int = 3,
) -> list[BenchReport]:
    return [bench_function(m, n, f, seed, repeats) for m in models for f in fractions]


def reports_to_csv(reports: Sequence[BenchReport]) -> str:
    """Header plus one row per report; the function name is the id column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        w.writerow([
            r.function, r.n, r.fraction, r.k, repr(r.memo_seconds), repr(r.naive_seconds),
            repr(r.speedup), int(r.selections_equal),
        ])
    return buf.getvalue()


def reports_to_json(reports: Sequence[BenchReport]) -> str:
    return json.dumps([asdict(r) for r in reports], indent=2) + "\n"
