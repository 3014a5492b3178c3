"""End-to-end selection flows and their output records.

Recommended models by goal: representative summaries use
``facility_location``; concept coverage uses ``set_cover`` or
``feature_based``; outlier-seeking, maximally diverse summaries use
``disparity_min``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .core import GroundSet, ModelInfo, Selection, SetFunction
from .errors import (
    DimensionMismatch,
    EmptyGroundSet,
    InvalidParam,
    InvalidSelection,
)
from .functions import MODEL_CLASSES, DisparityMin, ModularImportance
from .ingest import (
    ConceptData,
    FeatureMatrix,
    SnippetIndex,
    TagTable,
    aggregate_snippets,
    filter_by_query,
    read_ppm,
    write_ppm,
)
from .optimize import SolverConfig, check_compatible, disparity_min_greedy, lazy_greedy, solve
from .similarity import Kernel, compute_distances, compute_kernel, sparsify_knn

__all__ = [
    "ModelConfig",
    "ModelInputs",
    "SelectionManifest",
    "ALRound",
    "ALRoundLog",
    "build_model",
    "extractive_summarize",
    "query_summarize",
    "entity_summarize",
    "subset_select",
    "dal_simulate",
    "montage",
    "features_digest",
]

SCHEMA_VERSION = 1

KERNEL_MODELS = {"facility_location", "saturated_coverage", "graph_cut", "max_marginal_relevance"}
DISTANCE_MODELS = {"disparity_min", "disparity_sum", "disparity_min_sum"}

CONVENTIONS = {
    "disparity_sum": "each unordered pair counted once",
    "disparity_min": "value 0 for fewer than two items",
    "disparity_min_sum": "inner minimum excludes the item itself; value 0 for fewer than two items",
    "max_marginal_relevance": "value is the sum of gains in selection order",
}


@dataclass(frozen=True)
class ModelConfig:
    """Model name plus every knob that shapes it."""

    name: str
    metric: str = "cosine"
    sigma: float | None = None
    knn: int | None = None
    distance: str = "euclidean"
    alpha: float = 0.5
    lam: float = 2.0
    psi: str = "sqrt"
    theta: float = 0.7

    def __post_init__(self):
        if self.name not in MODEL_CLASSES:
            raise InvalidParam(f"unknown model {self.name!r}; available: {', '.join(MODEL_CLASSES)}")

    def to_dict(self) -> dict:
        keep = {"name": self.name}
        if self.name in KERNEL_MODELS:
            keep.update(metric=self.metric, sigma=self.sigma, knn=self.knn)
        if self.name in DISTANCE_MODELS:
            keep["distance"] = self.distance
        if self.name == "saturated_coverage":
            keep["alpha"] = self.alpha
        if self.name == "graph_cut":
            keep["lambda"] = self.lam
        if self.name == "feature_based":
            keep["psi"] = self.psi
        if self.name == "max_marginal_relevance":
            keep["theta"] = self.theta
        return keep


@dataclass
class ModelInputs:
    """Side inputs some models need beyond the feature matrix."""

    concepts: ConceptData | None = None
    probabilities: np.ndarray | None = None
    scores: np.ndarray | None = None
    kernel: Kernel | None = None


def build_model(
    cfg: ModelConfig, features: FeatureMatrix | None, inputs: ModelInputs | None = None
) -> tuple[SetFunction, dict[str, float]]:
    """Construct the model; returns it with kernel/construction timings."""
    inputs = inputs or ModelInputs()
    cls = MODEL_CLASSES[cfg.name]
    t0 = time.perf_counter()
    timings = {}

    def need_features():
        if features is None:
            raise InvalidParam(f"{cfg.name} needs a feature matrix")
        return features

    if cfg.name in KERNEL_MODELS:
        if inputs.kernel is not None:
            kernel = inputs.kernel
        else:
            kernel = compute_kernel(need_features(), cfg.metric, cfg.sigma)
            if cfg.knn is not None:
                kernel = sparsify_knn(kernel, cfg.knn)
        timings["kernel"] = time.perf_counter() - t0
        if cfg.name == "facility_location":
            fn = cls(kernel)
        elif cfg.name == "saturated_coverage":
            fn = cls(kernel, cfg.alpha)
        elif cfg.name == "graph_cut":
            fn = cls(kernel, cfg.lam)
        else:
            if inputs.scores is None:
                raise InvalidParam("max_marginal_relevance needs relevance scores")
            fn = cls(kernel, inputs.scores, cfg.theta)
    elif cfg.name in DISTANCE_MODELS:
        dist = compute_distances(need_features(), cfg.distance)
        timings["kernel"] = time.perf_counter() - t0
        fn = cls(dist)
    elif cfg.name == "feature_based":
        fn = cls(need_features(), cfg.psi)
    elif cfg.name == "set_cover":
        if inputs.concepts is None:
            raise InvalidParam("set_cover needs concepts")
        fn = inputs.concepts.set_cover()
    elif cfg.name == "probabilistic_set_cover":
        if inputs.probabilities is None:
            raise InvalidParam("probabilistic_set_cover needs probabilities")
        fn = cls(inputs.probabilities)
    else:
        if inputs.scores is None:
            raise InvalidParam("modular_importance needs scores")
        fn = ModularImportance(inputs.scores)
    if features is not None and fn.n != features.n:
        raise InvalidParam(f"{cfg.name} covers {fn.n} items but there are {features.n} features")
    timings["construction"] = time.perf_counter() - t0
    return fn, timings


def features_digest(fm: FeatureMatrix) -> str:
    return hashlib.sha256(np.ascontiguousarray(fm.values, dtype="<f8").tobytes()).hexdigest()


def _plain(x):
    """Convert numpy scalars/arrays so ``json`` can serialize them."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


@dataclass
class SelectionManifest:
    """Everything needed to interpret and reproduce one selection."""

    kind: str
    model: dict
    algorithm: dict
    selected_ids: list[str]
    selected_indices: list[int]
    objective_trace: list[float]
    n: int
    timings: dict[str, float] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION

    @property
    def value(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else 0.0

    def to_dict(self, include_timings: bool = True) -> dict:
        d = _plain(asdict(self))
        if not include_timings:
            d.pop("timings")
        return d

    def to_json(self, include_timings: bool = True) -> str:
        """Canonical JSON: sorted keys, two-space indent, trailing newline."""
        return json.dumps(self.to_dict(include_timings), sort_keys=True, indent=2) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionManifest":
        return cls(**d)

    @classmethod
    def load(cls, path) -> "SelectionManifest":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _manifest(
    kind: str,
    cfg: ModelConfig,
    config: SolverConfig,
    sel: Selection,
    ids: Sequence[str],
    timings: dict,
    provenance: dict,
    extra: dict | None = None,
    warnings: Sequence[str] = (),
) -> SelectionManifest:
    extra = dict(extra or {})
    if cfg.name in CONVENTIONS:
        extra.setdefault("convention", CONVENTIONS[cfg.name])
    if sel.resorts is not None:
        extra["resorts"] = list(sel.resorts)
    return SelectionManifest(
        kind=kind,
        model=cfg.to_dict(),
        algorithm=config.describe(),
        selected_ids=[ids[i] for i in sel.indices],
        selected_indices=list(sel.indices),
        objective_trace=[float(v) for v in sel.objective_trace],
        n=len(ids),
        timings=timings,
        provenance=dict(provenance),
        warnings=list(warnings),
        extra=extra,
    )


def _run(
    kind: str,
    features: FeatureMatrix,
    cfg: ModelConfig,
    config: SolverConfig,
    inputs: ModelInputs | None,
    gs: GroundSet | None,
    provenance: dict | None,
    threads: int,
    extra: dict | None = None,
    warnings: Sequence[str] = (),
) -> SelectionManifest:
    # fail on an impossible pair before paying for the O(n^2) kernel
    check_compatible(_static_info(cfg), config.mode)
    fn, timings = build_model(cfg, features, inputs)
    gs = gs or features.ground_set()
    t0 = time.perf_counter()
    sel = solve(fn, gs, config, threads=threads)
    timings["solve"] = time.perf_counter() - t0
    prov = {"features": features_digest(features)}
    prov.update(provenance or {})
    return _manifest(kind, cfg, config, sel, gs.item_ids, timings, prov, extra, warnings)


def _static_info(cfg: ModelConfig):
    """Model metadata without building the kernel."""
    cls = MODEL_CLASSES[cfg.name]
    monotone = {
        "disparity_min": False,
        "disparity_min_sum": False,
        "max_marginal_relevance": False,
        "graph_cut": cfg.lam >= 2.0,
    }.get(cfg.name, True)
    submodular = cfg.name not in {"disparity_min", "disparity_sum", "disparity_min_sum", "max_marginal_relevance"}
    return ModelInfo(cfg.name, cls.family, monotone, submodular)


def extractive_summarize(
    features: FeatureMatrix,
    model: ModelConfig | str,
    config: SolverConfig,
    *,
    inputs: ModelInputs | None = None,
    costs: Sequence[float] | None = None,
    provenance: dict | None = None,
    threads: int = 1,
) -> SelectionManifest:
    """Select diverse and/or representative items from a feature matrix."""
    cfg = ModelConfig(model) if isinstance(model, str) else model
    gs = features.ground_set(costs)
    return _run("extractive", features, cfg, config, inputs, gs, provenance, threads)


def entity_summarize(
    entity_features: FeatureMatrix,
    model: ModelConfig | str,
    config: SolverConfig,
    *,
    inputs: ModelInputs | None = None,
    provenance: dict | None = None,
    threads: int = 1,
) -> SelectionManifest:
    """Same engine as :func:`extractive_summarize` over pre-cropped entities."""
    cfg = ModelConfig(model) if isinstance(model, str) else model
    return _run("entity", entity_features, cfg, config, inputs, None, provenance, threads)


def query_summarize(
    frame_features: FeatureMatrix,
    snippets: SnippetIndex,
    tags: TagTable,
    query: str,
    model: ModelConfig | str,
    config: SolverConfig,
    *,
    min_conf: float = 0.5,
    inputs: ModelInputs | None = None,
    provenance: dict | None = None,
    threads: int = 1,
) -> SelectionManifest:
    """Filter snippets by a tag query, average their frames, then select."""
    cfg = ModelConfig(model) if isinstance(model, str) else model
    check_compatible(_static_info(cfg), config.mode)
    filt = filter_by_query(snippets, tags, query, min_conf)
    if not len(filt.index):
        raise EmptyGroundSet(filt.warning or "query left no snippets")
    snippet_features, gs = aggregate_snippets(frame_features, filt.index)
    extra = {
        "query": query.strip().lower(),
        "min_conf": min_conf,
        "ground_set_before_filter": len(snippets),
        "ground_set_after_filter": len(filt.index),
        "kept_snippets": list(filt.kept),
    }
    man = _run("query", snippet_features, cfg, config, inputs, gs, provenance, threads, extra)
    man.extra["selected_frames"] = sorted(
        f for i in man.selected_indices for f in filt.index.snippets[i].frames
    )
    return man


def subset_select(
    features: FeatureMatrix,
    model: ModelConfig | str,
    fraction: float,
    *,
    labels: Sequence[str] | None = None,
    inputs: ModelInputs | None = None,
    lazy: bool = True,
    provenance: dict | None = None,
) -> SelectionManifest:
    """Pick ``ceil(fraction * n)`` training items."""
    if not 0 < fraction <= 1:
        raise InvalidParam("fraction must lie in (0, 1]")
    cfg = ModelConfig(model) if isinstance(model, str) else model
    k = math.ceil(fraction * features.n)
    config = SolverConfig("cardinality", k=k, lazy=lazy)
    extra: dict = {"fraction": fraction}
    man = _run("subset", features, cfg, config, inputs, None, provenance, 1, extra)
    if labels is not None:
        if len(labels) != features.n:
            raise InvalidSelection(f"{len(labels)} labels for {features.n} items")
        counts = Counter(str(labels[i]) for i in man.selected_indices)
        man.extra["class_counts"] = dict(sorted(counts.items()))
    return man


# --------------------------------------------------------------------------
# diversified active learning
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ALRound:
    round: int
    batch: tuple[int, ...]
    labeled: int
    holdout_acc: float


@dataclass
class ALRoundLog:
    strategy: str
    seed: int
    rounds: list[ALRound] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "batch", "labeled", "holdout_acc"])
        for r in self.rounds:
            w.writerow([r.round, " ".join(map(str, r.batch)), r.labeled, repr(r.holdout_acc)])
        return buf.getvalue()

    def to_json(self) -> str:
        d = {"strategy": self.strategy, "seed": self.seed, "rounds": [asdict(r) for r in self.rounds]}
        return json.dumps(_plain(d), sort_keys=True, indent=2) + "\n"

    def rounds_to_target(self, target: float) -> int | None:
        """First round whose holdout accuracy reaches ``target``."""
        return next((r.round for r in self.rounds if r.holdout_acc >= target), None)


class _CentroidProbe:
    """Nearest class centroid; classes without labels are never predicted."""

    def __init__(self, x: np.ndarray, y: np.ndarray):
        self.classes = np.unique(y)
        self.centroids = np.array([x[y == c].mean(axis=0) for c in self.classes])

    def distances(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x[:, None, :] - self.centroids[None, :, :], axis=2)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.classes[np.argmin(self.distances(x), axis=1)]


def dal_simulate(
    features: FeatureMatrix,
    labels: Sequence[str],
    rounds: int,
    batch: int,
    strategy: str = "submodular",
    *,
    model: ModelConfig | str = "disparity_min",
    holdout: float = 0.3,
    seed: int = 0,
) -> ALRoundLog:
    """Simulate pool-based active learning with a nearest-centroid probe.

    Each round the strategy picks ``batch`` unlabeled training items, their
    labels are revealed and the probe is scored on a fixed holdout split.
    ``random`` draws from a seeded stream, ``uncertainty`` takes the items
    with the smallest gap between the two closest class centroids (random
    until two classes are labeled), ``submodular`` greedily maximizes the
    model over the pool given what is already labeled.
    """
    y = np.asarray([str(v) for v in labels])
    x = features.values
    if y.shape[0] != x.shape[0]:
        raise InvalidParam(f"{y.shape[0]} labels for {x.shape[0]} items")
    if len(np.unique(y)) < 2:
        raise InvalidParam("active learning needs at least two classes")
    if strategy not in {"random", "uncertainty", "submodular"}:
        raise InvalidParam(f"unknown strategy {strategy!r}")
    if rounds < 1 or batch < 1:
        raise InvalidParam("rounds and batch must be >= 1")
    if not 0 < holdout < 1:
        raise InvalidParam("holdout must lie in (0, 1)")
    split_seq, pick_seq = np.random.SeedSequence(seed).spawn(2)
    perm = np.random.default_rng(split_seq).permutation(len(y))
    n_hold = math.ceil(holdout * len(y))
    hold, train = np.sort(perm[:n_hold]), np.sort(perm[n_hold:])
    if batch * rounds > len(train):
        raise InvalidParam(f"{rounds} rounds of {batch} exceed the pool of {len(train)}")
    rng = np.random.default_rng(pick_seq)

    cfg = ModelConfig(model) if isinstance(model, str) else model
    fn = None
    if strategy == "submodular":
        fn, _ = build_model(cfg, FeatureMatrix(x[train]))
        gs = GroundSet.of_size(len(train))

    labeled: list[int] = []  # positions into train
    log = ALRoundLog(strategy if strategy != "submodular" else f"submodular:{cfg.name}", seed)
    for r in range(1, rounds + 1):
        pool = np.setdiff1d(np.arange(len(train)), labeled)
        if batch > len(pool):
            raise InvalidParam(f"batch {batch} exceeds the remaining pool of {len(pool)}")
        if strategy == "random" or (strategy == "uncertainty" and len(set(y[train[labeled]])) < 2):
            picks = [int(i) for i in rng.choice(pool, batch, replace=False)]
        elif strategy == "uncertainty":
            probe = _CentroidProbe(x[train[labeled]], y[train[labeled]])
            d = np.sort(probe.distances(x[train[pool]]), axis=1)
            margin = d[:, 1] - d[:, 0]
            picks = [int(pool[i]) for i in np.argsort(margin, kind="stable")[:batch]]
        elif isinstance(fn, DisparityMin) and (labeled or batch >= 2):
            picks = disparity_min_greedy(fn, gs, batch, initial=labeled, candidates=pool).indices
        else:
            picks = lazy_greedy(fn, gs, batch, initial=labeled, candidates=pool).indices
        labeled.extend(picks)
        probe = _CentroidProbe(x[train[labeled]], y[train[labeled]])
        acc = float(np.mean(probe.predict(x[hold]) == y[hold]))
        log.rounds.append(ALRound(r, tuple(int(train[i]) for i in picks), len(labeled), acc))
    return log


# --------------------------------------------------------------------------
# montage
# --------------------------------------------------------------------------


def montage(frames: Sequence[bytes | np.ndarray], columns: int) -> bytes:
    """Row-major grid of equally sized frames as a P6 image; empty cells are black."""
    if columns < 1:
        raise InvalidParam("columns must be >= 1")
    if not frames:
        raise InvalidParam("montage needs at least one frame")
    imgs = [read_ppm(f) if isinstance(f, (bytes, bytearray)) else np.asarray(f, dtype=np.uint8) for f in frames]
    h, w = imgs[0].shape[:2]
    for i, img in enumerate(imgs):
        if img.shape != (h, w, 3):
            raise DimensionMismatch(f"frame {i} is {img.shape[1]}x{img.shape[0]}, expected {w}x{h}")
    cols = min(columns, len(imgs))
    rows = math.ceil(len(imgs) / cols)
    canvas = np.zeros((rows * h, cols * w, 3), dtype=np.uint8)
    for i, img in enumerate(imgs):
        r, c = divmod(i, cols)
        canvas[r * h : (r + 1) * h, c * w : (c + 1) * w] = img
    return write_ppm(canvas)
