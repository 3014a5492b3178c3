"""Reading and writing the on-disk formats.

Formats
-------
* feature CSV: optional header row, optional leading id column
* VDSF binary: ``b"VDSF"``, u32 version (1), u32 n, u32 d, then n*d float32,
  all little-endian, row-major
* concepts JSON-lines: ``{"item": id, "concepts": [...]}`` per item plus an
  optional ``{"weights": {concept: w}}`` record
* probability CSV: header of concept names, one row per item
* tags JSON-lines: ``{"item": id, "tags": [{"tag": s, "conf": x}, ...]}``
* snippets JSON-lines: ``{"id": s, "frames": [ints], "cost": seconds}``
* scores / labels: one value per line
* binary PPM (P6, maxval 255) images
"""

from __future__ import annotations

import csv
import json
import math
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import GroundSet, new_ground_set
from .errors import (
    FormatError,
    InvalidCost,
    InvalidFeature,
    InvalidParam,
    InvalidProbability,
    InvalidSnippet,
    InvalidWeight,
    ParseError,
    UnknownItem,
)
from .functions import SetCover

__all__ = [
    "FeatureMatrix",
    "ConceptData",
    "ProbabilityTable",
    "TagTable",
    "Snippet",
    "SnippetIndex",
    "QueryFilter",
    "load_features_csv",
    "save_features_csv",
    "load_features_binary",
    "save_features_binary",
    "load_concepts",
    "load_probabilities",
    "load_tags",
    "load_snippets",
    "load_scores",
    "load_labels",
    "read_ppm",
    "write_ppm",
    "rgb_to_hsv",
    "ppm_color_histogram",
    "load_frames_dir",
    "aggregate_snippets",
    "filter_by_query",
]

MAGIC = b"VDSF"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


@dataclass(frozen=True)
class FeatureMatrix:
    """``n x d`` finite feature values with optional item ids."""

    values: np.ndarray
    item_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise InvalidFeature("feature matrix must be 2-D with n*d > 0")
        if not np.all(np.isfinite(v)):
            raise InvalidFeature("feature values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.item_ids is not None:
            ids = tuple(str(i) for i in self.item_ids)
            if len(ids) != v.shape[0]:
                raise InvalidFeature(f"{len(ids)} ids for {v.shape[0]} rows")
            object.__setattr__(self, "item_ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def ids(self) -> tuple[str, ...]:
        return self.item_ids if self.item_ids is not None else tuple(str(i) for i in range(self.n))

    def ground_set(self, costs: Sequence[float] | None = None) -> GroundSet:
        return new_ground_set(self.ids(), costs)


# --------------------------------------------------------------------------
# features
# --------------------------------------------------------------------------


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_features_csv(path) -> FeatureMatrix:
    """Dense features from CSV; rejects ragged rows, NaN/inf and negatives.

    A header row and a leading id column are detected by non-numeric cells.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: no rows")
    rows = [[c.strip() for c in r] for r in rows]
    body = rows[1:] if len(rows) > 1 else rows
    has_ids = any(not _is_number(r[0]) for r in body)
    first = rows[0][1:] if has_ids else rows[0]
    has_header = any(not _is_number(c) for c in first)
    data = rows[1:] if has_header else rows
    if not data:
        raise ParseError(f"{path}: header without data rows")
    width = len(data[0])
    for lineno, r in enumerate(data, start=2 if has_header else 1):
        if len(r) != width:
            raise ParseError(f"{path}: row {lineno} has {len(r)} fields, expected {width}")
    if has_header and len(rows[0]) != width:
        raise ParseError(f"{path}: header has {len(rows[0])} fields, rows have {width}")
    ids = [r[0] for r in data] if has_ids else None
    cells = [r[1:] if has_ids else r for r in data]
    try:
        values = np.array(cells, dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if values.ndim != 2 or values.shape[1] == 0:
        raise ParseError(f"{path}: no feature columns")
    if not np.all(np.isfinite(values)):
        raise InvalidFeature(f"{path}: NaN or infinite feature value")
    if values.min() < 0:
        raise InvalidFeature(f"{path}: negative feature value")
    return FeatureMatrix(values, tuple(ids) if ids else None)


def save_features_csv(fm: FeatureMatrix, path, header: Sequence[str] | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for i, row in enumerate(fm.values):
            cells = [repr(float(x)) for x in row]
            w.writerow([fm.item_ids[i], *cells] if fm.item_ids is not None else cells)


def save_features_binary(fm: FeatureMatrix | np.ndarray, path) -> None:
    """Write the VDSF layout; also used for kernels and distance matrices."""
    values = np.asarray(getattr(fm, "values", fm))
    if hasattr(values, "toarray"):
        values = values.toarray()
    values = np.asarray(values, dtype="<f4")
    n, d = values.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, d))
        fh.write(np.ascontiguousarray(values).tobytes())


def load_features_binary(path) -> FeatureMatrix:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the VDSF header")
    magic, version, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported VDSF version {version}")
    expected = n * d * 4
    payload = raw[_HEADER.size :]
    if len(payload) != expected:
        raise FormatError(f"{path}: header promises {n}x{d} floats ({expected} bytes), got {len(payload)}")
    values = np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(float)
    return FeatureMatrix(values)


# --------------------------------------------------------------------------
# concepts, probabilities, tags, scores
# --------------------------------------------------------------------------


def _read_jsonl(path) -> list[tuple[int, dict]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc.msg}") from None
            if not isinstance(rec, dict):
                raise ParseError(f"{path}:{lineno}: expected a JSON object")
            out.append((lineno, rec))
    return out


def _resolve_item(item, item_ids: Sequence[str] | None, n: int | None, where: str) -> int:
    if isinstance(item, bool):
        raise ParseError(f"{where}: item must be an index or id")
    if isinstance(item, int):
        if item < 0 or (n is not None and item >= n):
            raise UnknownItem(f"{where}: item index {item} outside the ground set")
        return item
    if isinstance(item, str):
        if item_ids is not None and item in item_ids:
            return list(item_ids).index(item)
        raise UnknownItem(f"{where}: unknown item id {item!r}")
    raise ParseError(f"{where}: item must be an index or id")


@dataclass
class ConceptData:
    """Concept names per item plus concept weights (default 1)."""

    concepts: list[list[str]]
    weights: dict[str, float] = field(default_factory=dict)

    @property
    def universe(self) -> list[str]:
        return sorted({c for item in self.concepts for c in item})

    def weight_vector(self) -> np.ndarray:
        return np.array([self.weights.get(c, 1.0) for c in self.universe])

    def set_cover(self) -> SetCover:
        w = {c: self.weights.get(c, 1.0) for c in self.universe}
        return SetCover.from_names(self.concepts, w)


def load_concepts(path, item_ids: Sequence[str] | None = None, n: int | None = None) -> ConceptData:
    """Concept sets from JSON-lines; items never mentioned cover nothing."""
    if item_ids is not None:
        n = len(item_ids)
    per_item: dict[int, list[str]] = {}
    weights: dict[str, float] = {}
    for lineno, rec in _read_jsonl(path):
        where = f"{path}:{lineno}"
        if "weights" in rec:
            for concept, w in rec["weights"].items():
                if not isinstance(w, (int, float)) or not math.isfinite(w) or w < 0:
                    raise InvalidWeight(f"{where}: weight of {concept!r} must be >= 0")
                weights[str(concept)] = float(w)
            continue
        if "item" not in rec or "concepts" not in rec:
            raise ParseError(f"{where}: expected 'item' and 'concepts'")
        j = _resolve_item(rec["item"], item_ids, n, where)
        per_item.setdefault(j, []).extend(str(c) for c in rec["concepts"])
    size = n if n is not None else (max(per_item) + 1 if per_item else 0)
    return ConceptData([per_item.get(j, []) for j in range(size)], weights)


@dataclass(frozen=True)
class ProbabilityTable:
    values: np.ndarray
    concepts: tuple[str, ...]


def load_probabilities(path) -> ProbabilityTable:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [[c.strip() for c in r] for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header row and at least one data row")
    header, data = rows[0], rows[1:]
    for lineno, r in enumerate(data, start=2):
        if len(r) != len(header):
            raise ParseError(f"{path}: row {lineno} has {len(r)} fields, expected {len(header)}")
    try:
        p = np.array(data, dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(p)) or p.min() < 0 or p.max() > 1:
        raise InvalidProbability(f"{path}: probabilities must lie in [0, 1]")
    return ProbabilityTable(p, tuple(header))


@dataclass
class TagTable:
    """Per-item ``(tag, confidence)`` pairs; tags are lower-cased."""

    tags: dict[int, list[tuple[str, float]]] = field(default_factory=dict)

    def has(self, item: int, tag: str, min_conf: float = 0.5) -> bool:
        tag = tag.strip().lower()
        return any(t == tag and c >= min_conf for t, c in self.tags.get(item, ()))


def load_tags(path, item_ids: Sequence[str] | None = None, n: int | None = None) -> TagTable:
    table = TagTable()
    for lineno, rec in _read_jsonl(path):
        where = f"{path}:{lineno}"
        if "item" not in rec or "tags" not in rec:
            raise ParseError(f"{where}: expected 'item' and 'tags'")
        j = _resolve_item(rec["item"], item_ids, n, where)
        for t in rec["tags"]:
            conf = float(t.get("conf", 1.0))
            if not 0 <= conf <= 1:
                raise InvalidProbability(f"{where}: confidence {conf} outside [0, 1]")
            table.tags.setdefault(j, []).append((str(t["tag"]).strip().lower(), conf))
    return table


def load_scores(path) -> np.ndarray:
    """One relevance score per non-empty line."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            cell = line.strip().split(",")[0].strip()
            if not cell:
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: not a number: {cell!r}") from None
    if not values:
        raise ParseError(f"{path}: no scores")
    return np.array(values)


def load_labels(path) -> list[str]:
    """One class label per non-empty line."""
    with open(path, encoding="utf-8") as fh:
        labels = [line.strip() for line in fh if line.strip()]
    if not labels:
        raise ParseError(f"{path}: no labels")
    return labels


# --------------------------------------------------------------------------
# images
# --------------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def read_ppm(data: bytes) -> np.ndarray:
    """Decode a binary P6 image with maxval 255 into an ``h x w x 3`` array."""
    pos = 0
    tokens = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if not m:
            raise FormatError("truncated PPM header")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P6":
        raise FormatError(f"not a binary PPM (magic {tokens[0][:2]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("malformed PPM header") from None
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    if width <= 0 or height <= 0:
        raise FormatError("PPM image has no pixels")
    pos += 1  # single whitespace byte after maxval
    size = width * height * 3
    pixels = data[pos : pos + size]
    if len(pixels) != size:
        raise FormatError(f"PPM payload truncated: {len(pixels)} of {size} bytes")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width, 3)


def write_ppm(image: np.ndarray) -> bytes:
    img = np.asarray(image, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise InvalidParam("image must be h x w x 3")
    h, w, _ = img.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Hexcone conversion: H in [0, 360), S and V in [0, 1]."""
    x = np.asarray(rgb, dtype=float) / 255.0
    r, g, b = x[..., 0], x[..., 1], x[..., 2]
    v = x.max(axis=-1)
    c = v - x.min(axis=-1)
    safe = np.where(c > 0, c, 1.0)
    h = np.where(
        v == r,
        np.mod((g - b) / safe, 6.0),
        np.where(v == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0),
    )
    h = np.where(c > 0, 60.0 * h, 0.0)
    h = np.where(h >= 360.0, h - 360.0, h)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    return np.stack([h, s, v], axis=-1)


def ppm_color_histogram(data: bytes, bins_h: int = 16, bins_s: int = 16) -> np.ndarray:
    """L1-normalized hue/saturation histogram, flattened hue-major."""
    if bins_h < 1 or bins_s < 1:
        raise InvalidParam("bin counts must be >= 1")
    hsv = rgb_to_hsv(read_ppm(data)).reshape(-1, 3)
    hb = np.floor(hsv[:, 0] / 360.0 * bins_h).astype(int) % bins_h
    sb = np.minimum(np.floor(hsv[:, 1] * bins_s).astype(int), bins_s - 1)
    hist = np.bincount(hb * bins_s + sb, minlength=bins_h * bins_s).astype(float)
    return hist / hist.sum()


def load_frames_dir(directory, bins_h: int = 16, bins_s: int = 16) -> tuple[FeatureMatrix, list[Path]]:
    """Histogram features for every ``*.ppm`` in lexicographic order."""
    paths = sorted(Path(directory).glob("*.ppm"))
    if not paths:
        raise FormatError(f"{directory}: no .ppm frames")
    rows = [ppm_color_histogram(p.read_bytes(), bins_h, bins_s) for p in paths]
    return FeatureMatrix(np.array(rows), tuple(p.stem for p in paths)), paths


# --------------------------------------------------------------------------
# snippets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Snippet:
    id: str
    frames: tuple[int, ...]
    cost: float = 1.0


@dataclass(frozen=True)
class SnippetIndex:
    snippets: tuple[Snippet, ...]
    frame_count: int

    def __post_init__(self):
        object.__setattr__(self, "snippets", tuple(self.snippets))
        for s in self.snippets:
            if not s.frames:
                raise InvalidSnippet(f"snippet {s.id!r} has no frames")
            if min(s.frames) < 0 or max(s.frames) >= self.frame_count:
                raise InvalidSnippet(f"snippet {s.id!r} references a frame outside [0, {self.frame_count})")
            if not s.cost > 0:
                raise InvalidCost(f"snippet {s.id!r} needs a positive cost")
        ids = [s.id for s in self.snippets]
        if len(set(ids)) != len(ids):
            raise InvalidSnippet("snippet ids must be unique")

    def __len__(self) -> int:
        return len(self.snippets)

    @classmethod
    def fixed_size(cls, frame_count: int, size: int, seconds_per_frame: float = 1.0) -> "SnippetIndex":
        """Consecutive snippets of ``size`` frames (the last may be shorter)."""
        snippets = [
            Snippet(str(i), tuple(range(start, min(start + size, frame_count))),
                    seconds_per_frame * (min(start + size, frame_count) - start))
            for i, start in enumerate(range(0, frame_count, size))
        ]
        return cls(tuple(snippets), frame_count)


def load_snippets(path, frame_count: int) -> SnippetIndex:
    snippets = []
    for lineno, rec in _read_jsonl(path):
        try:
            snippets.append(
                Snippet(str(rec["id"]), tuple(int(f) for f in rec["frames"]), float(rec.get("cost", 1.0)))
            )
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"{path}:{lineno}: expected 'id', 'frames' and optional 'cost'") from None
    if not snippets:
        raise InvalidSnippet(f"{path}: no snippets")
    return SnippetIndex(tuple(snippets), frame_count)


def aggregate_snippets(frame_features: FeatureMatrix, idx: SnippetIndex) -> tuple[FeatureMatrix, GroundSet]:
    """Mean frame feature per snippet, plus a ground set carrying snippet costs."""
    if idx.frame_count > frame_features.n:
        raise InvalidSnippet(f"index covers {idx.frame_count} frames, features have {frame_features.n}")
    if not len(idx):
        raise InvalidSnippet("no snippets to aggregate")
    rows = np.array([frame_features.values[list(s.frames)].mean(axis=0) for s in idx.snippets])
    ids = tuple(s.id for s in idx.snippets)
    return FeatureMatrix(rows, ids), new_ground_set(ids, [s.cost for s in idx.snippets])


@dataclass(frozen=True)
class QueryFilter:
    """Snippets kept by a query and their positions in the unfiltered index."""

    index: SnippetIndex
    kept: tuple[int, ...]
    warning: str | None = None


def filter_by_query(idx: SnippetIndex, tags: TagTable, query: str, min_conf: float = 0.5) -> QueryFilter:
    """Keep snippets with at least one frame tagged ``query`` at ``>= min_conf``."""
    query = query.strip().lower()
    if not query:
        raise InvalidParam("query must be non-empty")
    kept = [i for i, s in enumerate(idx.snippets) if any(tags.has(f, query, min_conf) for f in s.frames)]
    warning = None if kept else f"query {query!r} matched no snippet"
    return QueryFilter(SnippetIndex(tuple(idx.snippets[i] for i in kept), idx.frame_count), tuple(kept), warning)
