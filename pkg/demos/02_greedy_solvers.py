"""
Greedy under different constraints
==================================

The same objective can be maximized with a size limit, a cost budget, a
coverage target or in a single streaming pass.
"""

import numpy as np

from subsum import (
    FacilityLocation,
    GroundSet,
    SetCover,
    brute_force_opt,
    budgeted_greedy,
    compute_kernel,
    cover_greedy,
    lazy_greedy,
    naive_greedy,
    new_ground_set,
    stream_greedy,
)
from subsum.ingest import FeatureMatrix

rng = np.random.default_rng(4)
fm = FeatureMatrix(rng.random((12, 5)))
fn = FacilityLocation(compute_kernel(fm))
gs = GroundSet.of_size(12)

# Plain and lazy greedy return the same picks; lazy skips most rescoring.
plain = naive_greedy(fn, gs, 3)
lazy = lazy_greedy(fn, gs, 3)
print("naive:", plain.indices, " lazy:", lazy.indices, " refreshed per round:", lazy.resorts)

# On a dozen items the true optimum is cheap to enumerate.
best, opt = brute_force_opt(fn, gs, 3)
print(f"greedy {fn.evaluate(lazy.indices):.4f} vs optimum {opt:.4f} at {best}")

# Budget: items now carry costs.
costs = rng.uniform(0.5, 2.0, 12)
sel = budgeted_greedy(fn, new_ground_set(range(12), costs), budget=3.0)
print("budgeted:", sel.indices, "cost", round(float(costs[sel.indices].sum()), 3))

# Cover: smallest greedy set whose coverage matches the whole collection.
sc = SetCover([[0, 1], [1, 2], [3], [0, 3], [2]], np.ones(4))
print("cover:", cover_greedy(sc, GroundSet.of_size(5)).indices)

# Stream: one pass in a seeded order, keep anything that adds enough.
print("stream:", stream_greedy(fn, gs, tau=1.0, seed=0).indices)
