"""Solver-agnostic mixed-integer linear program container."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse


class Relation(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float
    upper: float
    integer: bool = False


@dataclass(frozen=True)
class Constraint:
    name: str
    coefs: dict[int, float]
    relation: Relation
    rhs: float


class ModelError(ValueError):
    pass


@dataclass
class MilpModel:
    """Minimization model built incrementally, then frozen into arrays.

    Every variable must carry finite bounds. Constraint rows are sparse
    ``{column: coefficient}`` maps in declaration order.
    """

    name: str = "model"
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def add_var(self, name: str, lower: float, upper: float, integer: bool = False) -> int:
        if name in self._index:
            raise ModelError(f"duplicate variable name {name!r}")
        if not (math.isfinite(lower) and math.isfinite(upper)):
            raise ModelError(f"variable {name!r} needs finite bounds, got [{lower}, {upper}]")
        if lower > upper:
            raise ModelError(f"variable {name!r} has empty domain [{lower}, {upper}]")
        self.variables.append(Variable(name, float(lower), float(upper), integer))
        self._index[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_binary(self, name: str) -> int:
        return self.add_var(name, 0.0, 1.0, integer=True)

    def add_constraint(self, coefs, relation, rhs: float, name: str | None = None) -> int:
        row: dict[int, float] = {}
        for j, v in dict(coefs).items():
            if not 0 <= j < len(self.variables):
                raise ModelError(f"column index {j} out of range")
            v = float(v)
            if v != 0.0:
                row[j] = row.get(j, 0.0) + v
        name = name or f"c{len(self.constraints)}"
        self.constraints.append(Constraint(name, row, Relation(relation), float(rhs)))
        return len(self.constraints) - 1

    def set_objective(self, coefs) -> None:
        self.objective = {}
        for j, v in dict(coefs).items():
            if not 0 <= j < len(self.variables):
                raise ModelError(f"column index {j} out of range")
            if v != 0.0:
                self.objective[j] = self.objective.get(j, 0.0) + float(v)

    def index(self, name: str) -> int:
        return self._index[name]

    @property
    def num_vars(self) -> int:
        return len(self.variables)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def arrays(self) -> "ModelArrays":
        n, m = self.num_vars, self.num_constraints
        rows, cols, vals = [], [], []
        for i, con in enumerate(self.constraints):
            for j, v in con.coefs.items():
                rows.append(i)
                cols.append(j)
                vals.append(v)
        A = sparse.csr_matrix((vals, (rows, cols)), shape=(m, n), dtype=float)
        c = np.zeros(n)
        for j, v in self.objective.items():
            c[j] = v
        sense = np.array([{"<=": -1, "=": 0, ">=": 1}[con.relation.value] for con in self.constraints],
                         dtype=np.int8)
        return ModelArrays(
            c=c,
            A=A,
            sense=sense,
            b=np.array([con.rhs for con in self.constraints], dtype=float),
            lower=np.array([v.lower for v in self.variables], dtype=float),
            upper=np.array([v.upper for v in self.variables], dtype=float),
            integer=np.array([v.integer for v in self.variables], dtype=bool),
        )

    def evaluate(self, x) -> float:
        return float(sum(v * x[j] for j, v in self.objective.items()))

    def violations(self, x, tol: float = 1e-6) -> list[str]:
        """Names of rows, bounds, or integrality conditions ``x`` violates."""
        bad = []
        for j, var in enumerate(self.variables):
            if x[j] < var.lower - tol or x[j] > var.upper + tol:
                bad.append(f"bound:{var.name}")
            if var.integer and abs(x[j] - round(x[j])) > tol:
                bad.append(f"integrality:{var.name}")
        for con in self.constraints:
            lhs = sum(v * x[j] for j, v in con.coefs.items())
            scale = max(1.0, abs(con.rhs))
            if con.relation is Relation.LE and lhs > con.rhs + tol * scale:
                bad.append(con.name)
            elif con.relation is Relation.GE and lhs < con.rhs - tol * scale:
                bad.append(con.name)
            elif con.relation is Relation.EQ and abs(lhs - con.rhs) > tol * scale:
                bad.append(con.name)
        return bad


@dataclass(frozen=True)
class ModelArrays:
    """Array view of a model. ``sense`` is -1 for <=, 0 for =, +1 for >=."""

    c: np.ndarray
    A: sparse.csr_matrix
    sense: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
