"""
Summaries restricted by a tag query
===================================

Frames are grouped into snippets.  Only snippets with a frame tagged with
the query survive, and the model summarizes what is left.
"""

import numpy as np

from subsum import SolverConfig
from subsum.ingest import FeatureMatrix, SnippetIndex, TagTable
from subsum.pipelines import query_summarize

rng = np.random.default_rng(2)
fm = FeatureMatrix(rng.random((40, 6)) + 0.01)
snippets = SnippetIndex.fixed_size(40, 4)

# A detector said "beach" on a few frames, with some confidence.
tags = TagTable({f: [("beach", c)] for f, c in [(1, 0.9), (9, 0.4), (14, 0.8), (22, 0.95), (37, 0.7)]})

man = query_summarize(fm, snippets, tags, "beach", "facility_location", SolverConfig("cardinality", k=2))
print("snippets before / after filter:",
      man.extra["ground_set_before_filter"], "/", man.extra["ground_set_after_filter"])
print("chosen snippets:", man.selected_ids)
print("their frames:", man.extra["selected_frames"])
