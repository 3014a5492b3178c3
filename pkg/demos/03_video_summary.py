"""
Summarizing a frame sequence
============================

Frames become colour histograms, a model picks a handful, the picks are
tiled into a montage and scored against annotations.
"""

import tempfile
from pathlib import Path

import numpy as np

from subsum import SolverConfig
from subsum.ingest import load_frames_dir, write_ppm
from subsum.metrics import SegmentAnnotation, outlier_score, representation_score
from subsum.pipelines import extractive_summarize, montage

rng = np.random.default_rng(0)
workdir = Path(tempfile.mkdtemp())

# Four "scenes" of eight frames, each with its own dominant hue, and one
# odd frame in the middle.
scene_colors = [(200, 40, 40), (40, 200, 40), (40, 40, 200), (200, 200, 40)]
frame = 0
scenes = []
for color in scene_colors:
    members = []
    for _ in range(8):
        img = np.clip(np.array(color) + rng.integers(-20, 20, (16, 16, 3)), 0, 255).astype(np.uint8)
        (workdir / f"{frame:04d}.ppm").write_bytes(write_ppm(img))
        members.append(frame)
        frame += 1
    scenes.append(members)
odd = frame
(workdir / f"{odd:04d}.ppm").write_bytes(write_ppm(np.full((16, 16, 3), (200, 40, 200), dtype=np.uint8)))

fm, paths = load_frames_dir(workdir)
print("frames:", fm.n, "histogram bins:", fm.d)

scene_ann = SegmentAnnotation.of("scene", scenes)
odd_ann = SegmentAnnotation.of("outlier_event", [{odd}])

# Representative picks versus diverse picks.
for model in ("facility_location", "disparity_min"):
    man = extractive_summarize(fm, model, SolverConfig("cardinality", k=4))
    X = man.selected_indices
    print(f"{model:18s} picks {X}  scenes hit {representation_score(X, scene_ann):.2f}"
          f"  odd frame caught {outlier_score(X, odd_ann)}")

grid = montage([paths[i].read_bytes() for i in man.selected_indices], columns=2)
(workdir / "montage.ppm").write_bytes(grid)
print("montage written to", workdir / "montage.ppm")
