"""
Set functions and their marginal gains
======================================

Every model scores a subset of items.  Greedy solvers only ever ask one
question: how much does item ``j`` add to the current set?  Each model keeps
a small summary of the current set so it can answer without rescoring.
"""

import numpy as np

from subsum import FacilityLocation, DisparityMin, compute_kernel, compute_distances
from subsum.core import ScratchMemo
from subsum.datasets import planted_clusters

fm, labels = planted_clusters(0)
print("items:", fm.n, "features:", fm.d)

# A cosine kernel says how alike two items are.  Facility location rewards
# sets where every item has a close representative.
fl = FacilityLocation(compute_kernel(fm))
print(fl.describe())

# Ask for gains after committing two items.  The memo keeps the best
# similarity seen so far per item; the scratch version rescores both sets.
memo, scratch = fl.memo(), ScratchMemo(fl)
for j in (0, 1):
    memo.add(j)
    scratch.add(j)

for j in (2, 3, 4):
    print(f"gain of item {j}: memo {memo.gain(j):.6f}  scratch {scratch.gain(j):.6f}")

# Dispersion looks the other way: it wants the chosen items far apart.
dm = DisparityMin(compute_distances(fm))
far = int(np.flatnonzero(labels == -1)[0])
near = int(np.flatnonzero(labels == labels[0])[1])
print("min distance with the outlier:", dm.evaluate([0, far]))
print("min distance with a cluster mate:", dm.evaluate([0, near]))
