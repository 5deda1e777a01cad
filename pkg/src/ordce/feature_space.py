"""Feature metadata, dataset ingestion, and finite per-feature action grids."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


class Kind(str, Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


class Actionability(str, Enum):
    FREE = "free"
    INCREASE_ONLY = "increase_only"
    DECREASE_ONLY = "decrease_only"
    FIXED = "fixed"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: Kind = Kind.CONTINUOUS
    lower: float = 0.0
    upper: float = 1.0
    actionability: Actionability = Actionability.FREE
    grid_size: int = 5

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "actionability", Actionability(self.actionability))
        if self.kind is Kind.BINARY:
            if (self.lower, self.upper) not in ((0.0, 1.0), (0, 1)):
                raise ValueError(f"binary feature {self.name!r} must have bounds [0, 1]")
        if not self.lower <= self.upper:
            raise ValueError(f"feature {self.name!r}: lower {self.lower} > upper {self.upper}")
        if int(self.grid_size) < 1:
            raise ValueError(f"feature {self.name!r}: grid_size must be >= 1")

    @property
    def integral(self) -> bool:
        return self.kind is not Kind.CONTINUOUS

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpec":
        return cls(
            name=d["name"],
            kind=d.get("kind", "continuous"),
            lower=float(d["lower"]),
            upper=float(d["upper"]),
            actionability=d.get("actionability", "free"),
            grid_size=int(d.get("grid_size", 5)),
        )

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind.value, "lower": self.lower,
                "upper": self.upper, "actionability": self.actionability.value,
                "grid_size": self.grid_size}


def check_instance(x, specs: Sequence[FeatureSpec]) -> np.ndarray:
    """Return ``x`` as a float array after checking it against ``specs``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(specs),):
        raise ValueError(f"instance has {x.size} values, expected {len(specs)}")
    for d, (v, spec) in enumerate(zip(x, specs)):
        if not spec.lower <= v <= spec.upper:
            raise ValueError(f"feature {spec.name!r} value {v} outside [{spec.lower}, {spec.upper}]")
        if spec.integral and v != round(v):
            raise ValueError(f"feature {spec.name!r} expects an integral value, got {v}")
    return x


@dataclass(frozen=True)
class DatasetStats:
    sorted_values: tuple[np.ndarray, ...]
    median: np.ndarray
    mad: np.ndarray
    std: np.ndarray

    @classmethod
    def from_matrix(cls, X) -> "DatasetStats":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise DatasetError("no instances")
        cols = tuple(np.sort(X[:, d]) for d in range(X.shape[1]))
        med = np.array([_median_sorted(c) for c in cols])
        mad = np.array([_median_sorted(np.sort(np.abs(c - m))) for c, m in zip(cols, med)])
        return cls(cols, med, mad, X.std(axis=0))

    def cdf(self, d: int, value: float) -> float:
        """Empirical CDF of feature ``d`` with linear interpolation between order statistics."""
        s = self.sorted_values[d]
        n = s.size
        if n == 1:
            return 1.0 if value >= s[0] else 0.0
        # order statistic k sits at quantile k/(n-1); ties take their upper position
        hi = np.searchsorted(s, value, side="right")
        if hi == 0:
            return 0.0
        if hi >= n:
            return 1.0
        lo = hi - 1
        left, right = s[lo], s[hi]
        frac = 0.0 if right == left else (value - left) / (right - left)
        return float((lo + frac) / (n - 1))


def _median_sorted(s: np.ndarray) -> float:
    n = s.size
    mid = n // 2
    return float(s[mid]) if n % 2 else float(0.5 * (s[mid - 1] + s[mid]))


def load_dataset(source, specs: Sequence[FeatureSpec]) -> tuple[np.ndarray, DatasetStats]:
    """Parse a CSV with a header row into an ``(n, D)`` instance matrix plus statistics.

    ``source`` is a path or a text stream. Columns beyond the declared features
    are tolerated (one of them is the label) and ignored.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            return _parse_csv(fh, specs)
    return _parse_csv(source, specs)


def _parse_csv(fh: Iterable[str], specs: Sequence[FeatureSpec]):
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DatasetError("empty file: header row required") from None
    col_of = {}
    for spec in specs:
        if spec.name not in header:
            raise DatasetError(f"missing column {spec.name!r} in header")
        col_of[spec.name] = header.index(spec.name)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DatasetError(f"row {lineno}: expected {len(header)} cells, got {len(row)}")
        values = []
        for spec in specs:
            cell = row[col_of[spec.name]].strip()
            try:
                v = float(cell)
            except ValueError:
                raise DatasetError(f"row {lineno}, column {spec.name!r}: non-numeric cell {cell!r}") from None
            if not math.isfinite(v) or not spec.lower <= v <= spec.upper:
                raise DatasetError(f"row {lineno}, column {spec.name!r}: value {v} outside "
                                   f"[{spec.lower}, {spec.upper}]")
            values.append(v)
        rows.append(values)
    if not rows:
        raise DatasetError("no instances")
    X = np.array(rows, dtype=float)
    return X, DatasetStats.from_matrix(X)


def load_dataset_text(text: str, specs: Sequence[FeatureSpec]):
    return _parse_csv(io.StringIO(text), specs)


@dataclass(frozen=True)
class ActionSet:
    """Per-feature candidate perturbations; ``candidates[d][0] == 0`` always."""

    candidates: tuple[np.ndarray, ...]

    def __post_init__(self):
        for d, c in enumerate(self.candidates):
            if c.size == 0 or c[0] != 0.0:
                raise ValueError(f"feature {d}: candidate list must start with 0")

    def __len__(self) -> int:
        return len(self.candidates)

    def __getitem__(self, d: int) -> np.ndarray:
        return self.candidates[d]

    @property
    def sizes(self) -> list[int]:
        return [c.size for c in self.candidates]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([c.min() for c in self.candidates]),
                np.array([c.max() for c in self.candidates]))

    @classmethod
    def from_lists(cls, lists) -> "ActionSet":
        out = []
        for c in lists:
            c = np.unique(np.asarray(c, dtype=float))
            out.append(np.concatenate([[0.0], c[c != 0.0]]))
        return cls(tuple(out))


def build_action_set(instance, specs: Sequence[FeatureSpec], stats: DatasetStats | None = None) -> ActionSet:
    """Evenly spaced candidate grid over each feature's feasible perturbation range.

    Continuous features get ``grid_size`` candidates counting the null action:
    the grid itself when it passes through 0, otherwise ``grid_size - 1``
    evenly spaced points plus 0. Integer features step by whole units, thinned
    the same way when the range holds more than ``grid_size`` integers.
    ``stats`` is accepted for interface symmetry; the grid does not use it.
    """
    x = np.asarray(instance, dtype=float)
    out = []
    for v, spec in zip(x, specs):
        lo, hi = spec.lower - v, spec.upper - v
        act = spec.actionability
        if act is Actionability.INCREASE_ONLY:
            lo = max(lo, 0.0)
        elif act is Actionability.DECREASE_ONLY:
            hi = min(hi, 0.0)
        if act is Actionability.FIXED or spec.grid_size == 1 or hi - lo <= 0:
            out.append(np.zeros(1))
            continue
        if spec.integral:
            lo_i, hi_i = math.ceil(lo - 1e-9), math.floor(hi + 1e-9)
            if hi_i - lo_i + 1 <= spec.grid_size:
                pts = np.arange(lo_i, hi_i + 1, dtype=float)
            else:
                pts = np.unique(np.round(np.linspace(lo_i, hi_i, spec.grid_size - 1)))
        else:
            pts = np.linspace(lo, hi, spec.grid_size)
            if not np.any(np.abs(pts) <= 1e-12 * max(1.0, hi - lo)):
                pts = np.linspace(lo, hi, spec.grid_size - 1)
        pts = pts[np.abs(pts) > 1e-12 * max(1.0, hi - lo)]
        pts = np.unique([_clamp_step(v, p, spec.lower, spec.upper) for p in pts])
        out.append(np.concatenate([[0.0], pts]))
    return ActionSet(tuple(out))


def _clamp_step(x: float, step: float, lower: float, upper: float) -> float:
    # float rounding can push x + step a hair outside the box
    while x + step > upper:
        step = np.nextafter(step, -np.inf)
    while x + step < lower:
        step = np.nextafter(step, np.inf)
    return float(step)


def support(a) -> set[int]:
    return {d for d, v in enumerate(np.asarray(a, dtype=float)) if v != 0.0}
