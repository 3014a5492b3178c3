"""
Diverse batches for active learning
===================================

A nearest-centroid classifier learns two classes, each spread over two
blobs.  Picking far-apart points finds every blob quickly; random picks
may keep sampling the same blob.
"""

import numpy as np

from subsum.datasets import class_clusters
from subsum.pipelines import dal_simulate

needed = {"submodular": [], "random": []}
for seed in range(10):
    fm, labels, _ = class_clusters(seed)
    for strategy in needed:
        log = dal_simulate(fm, labels, rounds=20, batch=1, strategy=strategy, seed=seed)
        reached = log.rounds_to_target(1.0)
        needed[strategy].append(21 if reached is None else reached)

for strategy, rounds in needed.items():
    print(f"{strategy:10s} rounds to perfect holdout accuracy: {rounds}  median {np.median(rounds):g}")

# the per-round log of the last run (random picks, seed 9)
print()
print(log.to_csv())
