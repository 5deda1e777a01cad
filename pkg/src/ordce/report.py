"""Per-instance result rows and their aggregates for comparisons and gamma sweeps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .formulation import Extraction

METRICS = ("cost_total", "cost_ord", "cost_dist", "time")


@dataclass(frozen=True)
class ResultRow:
    instance: int
    method: str
    status: str
    cost_dist: float = math.nan
    cost_ord: float = math.nan
    cost_total: float = math.nan
    time: float = math.nan
    nodes: int = 0

    @property
    def solved(self) -> bool:
        return math.isfinite(self.cost_total)

    @classmethod
    def from_extraction(cls, instance: int, ext: Extraction, wall_time: float) -> "ResultRow":
        nodes = ext.solver.nodes if ext.solver is not None else 0
        if ext.action is None:
            return cls(instance, ext.method, ext.status, time=wall_time, nodes=nodes)
        a = ext.action
        return cls(instance, ext.method, ext.status, a.cost_dist, a.cost_ord, a.cost_total, wall_time, nodes)


@dataclass(frozen=True)
class Aggregate:
    n_solved: int
    n_failed: int
    mean: dict[str, float]
    std: dict[str, float]


def aggregate(rows) -> Aggregate:
    """Mean and population std over solved rows; failed rows are only counted."""
    solved = [r for r in rows if r.solved]
    mean, std = {}, {}
    for m in METRICS:
        vals = np.array([getattr(r, m) for r in solved], dtype=float)
        mean[m] = float(vals.mean()) if vals.size else math.nan
        std[m] = float(vals.std()) if vals.size else math.nan
    return Aggregate(len(solved), len(rows) - len(solved), mean, std)


@dataclass
class ComparisonReport:
    rows: list[ResultRow] = field(default_factory=list)

    @property
    def methods(self) -> list[str]:
        return list(dict.fromkeys(r.method for r in self.rows))

    def aggregate(self, method: str) -> Aggregate:
        return aggregate([r for r in self.rows if r.method == method])

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["instance", "method", "status", "cost_dist", "cost_ord", "cost_total", "time", "nodes"])
        for r in self.rows:
            w.writerow([r.instance, r.method, r.status, repr(r.cost_dist), repr(r.cost_ord),
                        repr(r.cost_total), f"{r.time:.6f}", r.nodes])
        return buf.getvalue()

    def summary(self) -> dict:
        out = {}
        for m in self.methods:
            agg = self.aggregate(m)
            out[m] = {"n_solved": agg.n_solved, "n_failed": agg.n_failed,
                      "mean": _clean(agg.mean), "std": _clean(agg.std)}
        return out

    def table(self) -> str:
        """Fixed-width mean +- std table, one line per method."""
        head = f"{'method':<12}{'C_OrdCE':>22}{'C_ord':>22}{'C_dist':>22}{'time [s]':>22}{'failed':>8}"
        lines = [head, "-" * len(head)]
        for m in self.methods:
            agg = self.aggregate(m)
            cells = "".join(f"{agg.mean[k]:>11.4f} +-{agg.std[k]:>8.4f}" for k in METRICS)
            lines.append(f"{m:<12}{cells}{agg.n_failed:>8}")
        return "\n".join(lines)


def sweep_table(gammas, rows_by_gamma) -> str:
    """CSV with per-gamma means of the cost components over solved instances."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "mean_cost_dist", "mean_cost_ord", "mean_cost_total", "n_solved", "n_failed"])
    for g, rows in zip(gammas, rows_by_gamma):
        agg = aggregate(rows)
        w.writerow([repr(float(g)), repr(agg.mean["cost_dist"]), repr(agg.mean["cost_ord"]),
                    repr(agg.mean["cost_total"]), agg.n_solved, agg.n_failed])
    return buf.getvalue()


def _clean(d: dict) -> dict:
    return {k: (v if math.isfinite(v) else None) for k, v in d.items()}
