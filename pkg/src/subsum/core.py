"""Ground sets, selections and the objective-function interface.

Every model is a :class:`SetFunction`.  It evaluates a subset from scratch
with :meth:`SetFunction.evaluate` and hands out a :class:`Memo`, a small
mutable object holding the precomputed statistics for the current selection
so that marginal gains are cheap.  Set functions themselves are immutable;
a memo belongs to exactly one solver run.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import AlreadySelected, DuplicateItem, InvalidCost, InvalidSelection

__all__ = [
    "GroundSet",
    "Selection",
    "ModelInfo",
    "SetFunction",
    "Memo",
    "ScratchMemo",
    "new_ground_set",
    "selection_total_cost",
]

FAMILIES = ("similarity", "coverage", "distance", "modular")


@dataclass(frozen=True)
class GroundSet:
    """The selectable items: external ids plus a non-negative cost each."""

    item_ids: tuple[str, ...]
    costs: np.ndarray

    @property
    def n(self) -> int:
        return len(self.item_ids)

    @classmethod
    def of_size(cls, n: int) -> "GroundSet":
        """Unit-cost ground set with ids ``"0" .. "n-1"``."""
        return new_ground_set([str(i) for i in range(n)])

    def index_of(self, item_id: str) -> int:
        try:
            return self.item_ids.index(item_id)
        except ValueError:
            raise KeyError(item_id) from None


def new_ground_set(item_ids: Sequence[str], costs: Sequence[float] | None = None) -> GroundSet:
    ids = tuple(str(i) for i in item_ids)
    if not ids:
        raise InvalidSelection("ground set needs at least one item")
    if len(set(ids)) != len(ids):
        seen: set[str] = set()
        dup = next(i for i in ids if i in seen or seen.add(i))
        raise DuplicateItem(f"duplicate item id {dup!r}")
    if costs is None:
        c = np.ones(len(ids))
    else:
        c = np.asarray(costs, dtype=float)
        if c.shape != (len(ids),):
            raise InvalidCost(f"expected {len(ids)} costs, got {c.size}")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise InvalidCost("costs must be finite and non-negative")
    c.setflags(write=False)
    return GroundSet(ids, c)


@dataclass
class Selection:
    """Ordered selection plus the objective value after every addition.

    ``resorts`` holds, per iteration, how many stale priority-queue entries
    were re-evaluated (lazy solvers only).
    """

    indices: list[int] = field(default_factory=list)
    objective_trace: list[float] = field(default_factory=list)
    resorts: list[int] | None = None

    @property
    def value(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else 0.0

    def __len__(self) -> int:
        return len(self.indices)

    def validate(self, n: int) -> None:
        _check_indices(self.indices, n)
        if len(self.objective_trace) != len(self.indices):
            raise InvalidSelection("objective trace and indices differ in length")


def selection_total_cost(sel: Selection | Sequence[int], gs: GroundSet) -> float:
    indices = _check_indices(sel.indices if isinstance(sel, Selection) else sel, gs.n)
    return float(gs.costs[indices].sum()) if indices else 0.0


def _check_indices(indices: Iterable[int], n: int) -> list[int]:
    out = [int(i) for i in indices]
    for i in out:
        if not 0 <= i < n:
            raise InvalidSelection(f"index {i} outside [0, {n})")
    if len(set(out)) != len(out):
        raise InvalidSelection("selection contains repeated indices")
    return out


@dataclass(frozen=True)
class ModelInfo:
    """What optimizers need to know about a model."""

    name: str
    family: str
    monotone: bool
    submodular: bool


class SetFunction(abc.ABC):
    """Interface shared by every objective model."""

    name: str = "set_function"
    family: str = "similarity"

    n: int

    @abc.abstractmethod
    def _evaluate(self, X: list[int]) -> float:
        """Objective value of ``X`` computed from the definition."""

    @abc.abstractmethod
    def memo(self) -> "Memo":
        """Fresh memoized state at the empty set."""

    @property
    def monotone(self) -> bool:
        return True

    @property
    def submodular(self) -> bool:
        return True

    def evaluate(self, X: Sequence[int]) -> float:
        """Exact value of ``X`` without any cached statistics."""
        idx = _check_indices(X, self.n)
        if not idx:
            return 0.0
        return float(self._evaluate(idx))

    def describe(self) -> ModelInfo:
        return ModelInfo(self.name, self.family, self.monotone, self.submodular)

    def params(self) -> dict:
        """Model parameters recorded in manifests."""
        return {}


class Memo(abc.ABC):
    """Precomputed statistics for one growing selection.

    ``gain`` and ``gains`` never touch the statistics; ``add`` updates them
    in the same complexity class as a single gain.
    """

    def __init__(self, fn: SetFunction):
        self.fn = fn
        self.n = fn.n
        self.reset()

    def reset(self) -> None:
        self.selected: list[int] = []
        self.in_set = np.zeros(self.n, dtype=bool)
        self.value = 0.0
        self._reset_stats()

    @abc.abstractmethod
    def _reset_stats(self) -> None: ...

    @abc.abstractmethod
    def _gain(self, j: int) -> float: ...

    @abc.abstractmethod
    def _commit(self, j: int) -> None: ...

    def _gains(self, candidates: np.ndarray) -> np.ndarray:
        return np.fromiter((self._gain(int(j)) for j in candidates), float, len(candidates))

    def gain(self, j: int) -> float:
        j = int(j)
        if not 0 <= j < self.n:
            raise InvalidSelection(f"index {j} outside [0, {self.n})")
        if self.in_set[j]:
            raise AlreadySelected(f"item {j} is already selected")
        return float(self._gain(j))

    def gains(self, candidates: Sequence[int] | np.ndarray) -> np.ndarray:
        """Marginal gains for many unselected candidates at once."""
        cand = np.asarray(candidates, dtype=np.intp)
        if cand.size == 0:
            return np.zeros(0)
        if self.in_set[cand].any():
            raise AlreadySelected("candidate list contains selected items")
        return np.asarray(self._gains(cand), dtype=float)

    def _exact_value(self) -> float | None:
        """Current value read off the statistics, when that is cheap."""
        return None

    def add(self, j: int) -> float:
        """Commit ``j``; returns the gain it contributed."""
        g = self.gain(j)
        self._commit(int(j))
        self.selected.append(int(j))
        self.in_set[j] = True
        exact = self._exact_value()
        self.value = self.value + g if exact is None else float(exact)
        return g


class ScratchMemo(Memo):
    """Memo that keeps no statistics: every gain is two full evaluations.

    This is the reference path used to check and benchmark the memoized
    implementations.
    """

    def _reset_stats(self) -> None:
        pass

    def _gain(self, j: int) -> float:
        return self.fn.evaluate(self.selected + [j]) - self.fn.evaluate(self.selected)

    def _commit(self, j: int) -> None:
        pass
