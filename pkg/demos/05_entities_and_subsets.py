"""
Entities and training subsets
=============================

The same engine runs over face crops or over a labelled training pool.
"""

import numpy as np

from subsum import SolverConfig
from subsum.datasets import planted_clusters
from subsum.ingest import FeatureMatrix
from subsum.pipelines import entity_summarize, subset_select

# Three identities, ten crops each, and one detector false positive.
rng = np.random.default_rng(1)
ids = np.repeat(np.eye(8)[:3], 10, axis=0)
crops = np.abs(ids + 0.05 * rng.standard_normal(ids.shape))
junk = np.zeros((1, 8))
junk[0, 3:] = 3.0
faces = FeatureMatrix(np.vstack([crops, junk]))

for model in ("facility_location", "disparity_min"):
    man = entity_summarize(faces, model, SolverConfig("cardinality", k=3))
    print(f"{model:18s} crops {man.selected_indices}")
# facility location shows one face per person; dispersion surfaces the junk crop (30).

# Subset selection keeps 5% of a clustered pool.
fm, labels = planted_clusters(3, outlier=False)
man = subset_select(fm, "facility_location", 0.05, labels=[f"class{c}" for c in labels])
print("kept", len(man.selected_indices), "of", fm.n, "->", man.extra["class_counts"])
