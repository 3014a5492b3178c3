"""Command-line front end.

Every subcommand validates its flags, including the model/algorithm pairing,
before touching the filesystem.  Outputs are written in one step at the end,
so a failed run leaves no partial files behind.  Exit codes: 0 success,
2 usage error, 1 runtime error.  Errors go to stderr as one line,
``ERROR <Code>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .bench import DEFAULT_FRACTIONS, DEFAULT_MODELS, bench_matrix, reports_to_csv, reports_to_json
from .datasets import class_clusters
from .errors import InvalidParam, SubsumError, Unsupported
from .functions import MODEL_CLASSES
from .ingest import (
    MAGIC,
    FeatureMatrix,
    load_concepts,
    load_features_binary,
    load_features_csv,
    load_frames_dir,
    load_labels,
    load_probabilities,
    load_scores,
    load_snippets,
    load_tags,
    save_features_binary,
)
from .metrics import (
    coverage_score,
    cluster_diversity_score,
    f1_score,
    load_annotations,
    outlier_score,
    representation_score,
)
from .optimize import ALGORITHMS, COMPATIBILITY, SolverConfig, check_compatible
from .pipelines import (
    DISTANCE_MODELS,
    KERNEL_MODELS,
    ModelConfig,
    ModelInputs,
    SelectionManifest,
    _static_info,
    dal_simulate,
    entity_summarize,
    extractive_summarize,
    montage,
    query_summarize,
    subset_select,
)
from .similarity import Kernel, compute_kernel, sparsify_knn

__all__ = ["run", "main"]

KERNEL_METRICS = ("cosine", "gaussian")
DISTANCE_METRICS = ("euclidean", "one_minus_cosine")


class UsageError(SubsumError):
    pass


USAGE_ERRORS = (UsageError, InvalidParam, Unsupported)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# flags
# --------------------------------------------------------------------------


def _input_flags(p, frames=True):
    p.add_argument("--features", metavar="PATH", help="CSV or VDSF feature matrix")
    if frames:
        p.add_argument("--frames", metavar="DIR", help="directory of .ppm frames (colour histograms)")


def _model_flags(p, algos=tuple(ALGORITHMS)):
    p.add_argument("--model", required=True,
                   help=f"one of: {', '.join(MODEL_CLASSES)}")
    p.add_argument("--algo", choices=algos, default="lazy")
    p.add_argument("--k", type=int)
    p.add_argument("--budget", type=float)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--tau", type=float)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--psi", choices=("sqrt", "log1p", "inverse"), default="sqrt")
    p.add_argument("--theta", type=float, default=0.7)
    p.add_argument("--knn", type=int)
    p.add_argument("--metric", help="cosine|gaussian for kernels, euclidean|one_minus_cosine for distances")
    p.add_argument("--sigma", type=float)
    p.add_argument("--kernel", metavar="PATH", help="precomputed VDSF kernel (see the kernel subcommand)")
    p.add_argument("--scores", metavar="PATH")
    p.add_argument("--concepts", metavar="PATH")
    p.add_argument("--probs", metavar="PATH")
    p.add_argument("--costs", metavar="PATH", help="one cost per line, for --algo budgeted")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", metavar="PATH", help="manifest path (default: stdout)")
    p.add_argument("--no-timings", action="store_true", help="omit wall-clock timings (byte-stable manifests)")


def _parser() -> _Parser:
    root = _Parser(prog="subsum", description="Submodular data summarization.")
    root.add_argument("--version", action="version", version=f"subsum {__version__}")
    sub = root.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("summarize", help="extractive summary of a feature matrix or frame directory")
    _input_flags(p)
    _model_flags(p)
    p.add_argument("--montage", metavar="PATH", help="write the selected frames as a PPM grid (needs --frames)")
    p.add_argument("--cols", type=int, default=4)

    p = sub.add_parser("query", help="summary restricted to snippets tagged with a query")
    _input_flags(p)
    _model_flags(p)
    p.add_argument("--snippets", metavar="PATH", required=True)
    p.add_argument("--tags", metavar="PATH", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--min-conf", type=float, default=0.5)

    p = sub.add_parser("entity", help="summary over pre-cropped entities")
    _input_flags(p)
    _model_flags(p)

    p = sub.add_parser("subset", help="training subset selection")
    _input_flags(p, frames=False)
    _model_flags(p, algos=("greedy", "lazy"))
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--labels", metavar="PATH", help="one class label per line, for class counts")

    p = sub.add_parser("dal", help="simulated diversified active learning")
    _input_flags(p, frames=False)
    p.add_argument("--labels", metavar="PATH")
    p.add_argument("--model", default="disparity_min")
    p.add_argument("--metric", help="distance or kernel metric for the model")
    p.add_argument("--rounds", type=int, default=20)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--strategy", choices=("submodular", "random", "uncertainty"), default="submodular")
    p.add_argument("--holdout", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="JSON instead of CSV")
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("eval", help="score a manifest against annotations")
    p.add_argument("--annotations", metavar="PATH", required=True)
    p.add_argument("--manifest", metavar="PATH", required=True)
    p.add_argument("--concepts", metavar="PATH", help="concept sets, for coverage C")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("bench", help="memoized vs scratch gain timings")
    p.add_argument("--models", default=",".join(DEFAULT_MODELS))
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--fractions", default=",".join(str(f) for f in DEFAULT_FRACTIONS))
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", metavar="PATH")

    p = sub.add_parser("kernel", help="precompute a similarity kernel as VDSF")
    _input_flags(p)
    p.add_argument("--metric", choices=KERNEL_METRICS, default="cosine")
    p.add_argument("--sigma", type=float)
    p.add_argument("--knn", type=int)
    p.add_argument("--out", metavar="PATH", required=True)
    return root


# --------------------------------------------------------------------------
# validation (no I/O)
# --------------------------------------------------------------------------


def _one_source(a):
    given = [x for x in (a.features, getattr(a, "frames", None)) if x]
    if len(given) > 1:
        raise UsageError("give either --features or --frames, not both")
    if not given:
        raise UsageError("one of --features or --frames is required")


def _model_config(a) -> ModelConfig:
    if a.model not in MODEL_CLASSES:
        raise UsageError(f"unknown model {a.model!r}; available: {', '.join(MODEL_CLASSES)}")
    kw = {}
    if a.model in DISTANCE_MODELS:
        if a.metric is not None and a.metric not in DISTANCE_METRICS:
            raise UsageError(f"{a.model} takes --metric in {{{', '.join(DISTANCE_METRICS)}}}")
        kw["distance"] = a.metric or "euclidean"
    elif a.metric is not None:
        if a.metric not in KERNEL_METRICS:
            raise UsageError(f"--metric must be one of {', '.join(KERNEL_METRICS)}")
        kw["metric"] = a.metric
    for key in ("sigma", "knn", "alpha", "lam", "psi", "theta"):
        if getattr(a, key, None) is not None:
            kw[key] = getattr(a, key)
    return ModelConfig(a.model, **kw)


def _solver_config(a) -> SolverConfig:
    mode = ALGORITHMS[a.algo]
    if mode == "cardinality" and a.k is None:
        raise UsageError(f"--algo {a.algo} needs --k")
    if mode == "knapsack" and a.budget is None:
        raise UsageError("--algo budgeted needs --budget")
    if mode == "stream" and a.tau is None:
        raise UsageError("--algo stream needs --tau")
    return SolverConfig(mode, k=a.k, budget=a.budget, rho=a.rho, tau=a.tau, seed=a.seed, lazy=a.algo != "greedy")


def _check_pair(cfg: ModelConfig, mode: str) -> None:
    try:
        check_compatible(_static_info(cfg), mode)
    except Unsupported as exc:
        matrix = "; ".join(f"{m}: {', '.join(sorted(f))}" for m, f in COMPATIBILITY.items())
        raise Unsupported(f"{exc} (compatibility matrix: {matrix})") from None


def _check_side_inputs(a, cfg: ModelConfig) -> None:
    need = {
        "set_cover": ("concepts", "--concepts"),
        "probabilistic_set_cover": ("probs", "--probs"),
        "modular_importance": ("scores", "--scores"),
        "max_marginal_relevance": ("scores", "--scores"),
    }.get(cfg.name)
    if need and getattr(a, need[0], None) is None:
        raise UsageError(f"{cfg.name} needs {need[1]}")
    if getattr(a, "kernel", None) and cfg.name not in KERNEL_MODELS:
        raise UsageError(f"--kernel applies only to {', '.join(sorted(KERNEL_MODELS))}")
    if getattr(a, "costs", None) and a.algo != "budgeted":
        raise UsageError("--costs applies only to --algo budgeted")


# --------------------------------------------------------------------------
# I/O helpers
# --------------------------------------------------------------------------


def read_features(path) -> FeatureMatrix:
    """VDSF if the file starts with the magic bytes, CSV otherwise."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    return load_features_binary(path) if head == MAGIC else load_features_csv(path)


def _load_source(a):
    if getattr(a, "frames", None):
        fm, paths = load_frames_dir(a.frames)
        return fm, paths, {"frames": str(a.frames)}
    return read_features(a.features), None, {"features_path": str(a.features)}


def _inputs(a, fm: FeatureMatrix) -> ModelInputs:
    inputs = ModelInputs()
    if getattr(a, "concepts", None):
        inputs.concepts = load_concepts(a.concepts, item_ids=fm.ids())
    if getattr(a, "probs", None):
        inputs.probabilities = load_probabilities(a.probs).values
    if getattr(a, "scores", None):
        inputs.scores = load_scores(a.scores)
    if getattr(a, "kernel", None):
        inputs.kernel = Kernel(load_features_binary(a.kernel).values)
    return inputs


def _write(path, data: str | bytes) -> None:
    """Atomic write: a temp file in the target directory, then rename."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _emit(a, text: str) -> None:
    if a.out:
        _write(a.out, text)
    else:
        sys.stdout.write(text)


def _emit_manifest(a, man: SelectionManifest) -> None:
    _emit(a, man.to_json(include_timings=not a.no_timings))
    if a.out:
        print(f"selected {len(man.selected_indices)} of {man.n}; value {man.value:.6g}; wrote {a.out}")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _selection_prelude(a):
    _one_source(a)
    cfg = _model_config(a)
    config = _solver_config(a)
    _check_pair(cfg, config.mode)
    _check_side_inputs(a, cfg)
    if a.threads < 1:
        raise UsageError("--threads must be >= 1")
    return cfg, config


def cmd_summarize(a) -> int:
    cfg, config = _selection_prelude(a)
    if a.montage and not a.frames:
        raise UsageError("--montage needs --frames")
    if a.cols < 1:
        raise UsageError("--cols must be >= 1")
    fm, paths, prov = _load_source(a)
    costs = load_scores(a.costs) if a.costs else None
    man = extractive_summarize(fm, cfg, config, inputs=_inputs(a, fm), costs=costs, provenance=prov,
                               threads=a.threads)
    grid = montage([paths[i].read_bytes() for i in man.selected_indices], a.cols) if a.montage else None
    _emit_manifest(a, man)
    if grid is not None:
        _write(a.montage, grid)
    return 0


def cmd_query(a) -> int:
    cfg, config = _selection_prelude(a)
    # the ground set is whatever survives the filter, so per-item side files cannot line up
    side = [f for f in ("scores", "concepts", "probs", "kernel", "costs") if getattr(a, f)]
    if side or cfg.name in {"set_cover", "probabilistic_set_cover", "modular_importance", "max_marginal_relevance"}:
        raise UsageError(f"query works on snippet features only; {cfg.name} with {side or 'side inputs'} is not supported")
    if not a.query.strip():
        raise UsageError("--query must be non-empty")
    fm, _, prov = _load_source(a)
    snippets = load_snippets(a.snippets, fm.n)
    tags = load_tags(a.tags, item_ids=fm.ids())
    man = query_summarize(fm, snippets, tags, a.query, cfg, config, min_conf=a.min_conf,
                          provenance=prov, threads=a.threads)
    _emit_manifest(a, man)
    return 0


def cmd_entity(a) -> int:
    cfg, config = _selection_prelude(a)
    fm, _, prov = _load_source(a)
    man = entity_summarize(fm, cfg, config, inputs=_inputs(a, fm), provenance=prov, threads=a.threads)
    _emit_manifest(a, man)
    return 0


def cmd_subset(a) -> int:
    _one_source(a)
    if not 0 < a.fraction <= 1:
        raise UsageError("--fraction must lie in (0, 1]")
    cfg = _model_config(a)
    _check_pair(cfg, "cardinality")
    _check_side_inputs(a, cfg)
    fm, _, prov = _load_source(a)
    labels = load_labels(a.labels) if a.labels else None
    man = subset_select(fm, cfg, a.fraction, labels=labels, inputs=_inputs(a, fm), lazy=a.algo == "lazy",
                        provenance=prov)
    _emit_manifest(a, man)
    return 0


def cmd_dal(a) -> int:
    if bool(a.features) != bool(a.labels):
        raise UsageError("--features and --labels go together (omit both for the synthetic set)")
    if a.rounds < 1 or a.batch < 1:
        raise UsageError("--rounds and --batch must be >= 1")
    cfg = _model_config(a)
    if a.strategy == "submodular":
        _check_pair(cfg, "cardinality")
        _check_side_inputs(a, cfg)
    if a.features:
        fm, labels = read_features(a.features), load_labels(a.labels)
    else:
        fm, labels, _ = class_clusters(a.seed)
    log = dal_simulate(fm, labels, a.rounds, a.batch, a.strategy, model=cfg, holdout=a.holdout, seed=a.seed)
    _emit(a, log.to_json() if a.json else log.to_csv())
    return 0


def cmd_eval(a) -> int:
    anns = load_annotations(a.annotations)
    man = SelectionManifest.load(a.manifest)
    items = man.selected_indices
    frames = man.extra.get("selected_frames", items)
    results: dict[str, object] = {}
    if "scene" in anns:
        results["R"] = representation_score(items, anns["scene"])
    if a.concepts:
        concepts = load_concepts(a.concepts, n=man.n)
        results["C"] = coverage_score(items, concepts.concepts)
    if "outlier_event" in anns:
        results["D"] = outlier_score(items, anns["outlier_event"])
    if "groundtruth_summary" in anns:
        p, r, f = f1_score(frames, anns["groundtruth_summary"].items())
        results["F1"] = {"precision": p, "recall": r, "f1": f}
    if "cluster" in anns:
        results["M"] = cluster_diversity_score(items, anns["cluster"])
    if not results:
        raise UsageError("nothing to evaluate: no known annotation kinds and no --concepts")
    if a.json:
        print(json.dumps(results, sort_keys=True))
        return 0
    labels = {
        "R": "representation (scenes hit)",
        "C": "concept coverage",
        "D": f"outlier events hit (of {anns['outlier_event'].k})" if "D" in results else "",
        "M": "cluster hit fraction",
    }
    for key, val in results.items():
        if key == "F1":
            print(f"F1 {val['f1']:.6f} precision {val['precision']:.6f} recall {val['recall']:.6f}")
        elif key == "D":
            print(f"D {val} {labels['D']}")
        else:
            print(f"{key} {val:.6f} {labels[key]}")
    return 0


def cmd_bench(a) -> int:
    models = [m.strip() for m in a.models.split(",") if m.strip()]
    unknown = [m for m in models if m not in MODEL_CLASSES]
    if unknown or not models:
        raise UsageError(f"unknown models {unknown}; available: {', '.join(MODEL_CLASSES)}")
    try:
        fractions = [float(f) for f in a.fractions.split(",") if f.strip()]
    except ValueError:
        raise UsageError(f"--fractions must be comma-separated numbers, got {a.fractions!r}") from None
    if not fractions or any(not 0 < f <= 1 for f in fractions):
        raise UsageError("--fractions must lie in (0, 1]")
    if a.n < 100:
        raise UsageError("--n must be >= 100")
    if a.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    reports = bench_matrix(models, a.n, fractions, a.seed, a.repeats)
    _emit(a, reports_to_json(reports) if a.json else reports_to_csv(reports))
    return 0


def cmd_kernel(a) -> int:
    _one_source(a)
    if a.knn is not None and a.knn < 1:
        raise UsageError("--knn must be >= 1")
    fm, _, _ = _load_source(a)
    kernel = compute_kernel(fm, a.metric, a.sigma)
    if a.knn is not None:
        kernel = sparsify_knn(kernel, a.knn)
    dense = kernel.dense()
    tmp = Path(a.out)
    fd, name = tempfile.mkstemp(dir=tmp.parent or Path("."), prefix=f".{tmp.name}.")
    os.close(fd)
    try:
        save_features_binary(np.asarray(dense), name)
        os.replace(name, tmp)
    except BaseException:
        Path(name).unlink(missing_ok=True)
        raise
    print(f"wrote {kernel.n}x{kernel.n} {a.metric} kernel to {a.out}")
    return 0


COMMANDS = {
    "summarize": cmd_summarize,
    "query": cmd_query,
    "entity": cmd_entity,
    "subset": cmd_subset,
    "dal": cmd_dal,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "kernel": cmd_kernel,
}


def _fail(code: str, message: str, status: int) -> int:
    message = " ".join(str(message).split())
    print(f"ERROR {code}: {message}", file=sys.stderr)
    return status


def run(argv=None) -> int:
    """Parse ``argv`` and execute; returns the process exit code."""
    try:
        args = _parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except USAGE_ERRORS as exc:
        return _fail(exc.code, exc, 2)
    except SubsumError as exc:
        return _fail(exc.code, exc, 1)
    except OSError as exc:
        return _fail(type(exc).__name__, f"{exc.filename or ''}: {exc.strerror or exc}", 1)
    except (ValueError, KeyError, TypeError) as exc:
        return _fail(type(exc).__name__, exc, 1)


def main() -> None:
    sys.exit(run())
