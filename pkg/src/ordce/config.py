"""Run configuration: a YAML or JSON document plus command-line overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .classifiers import AdditiveClassifier, load_model
from .cost_model import DistanceCost, default_scaling, load_cost_table, mad_cost, table_cost, tlps_cost
from .feature_space import DatasetStats, FeatureSpec, build_action_set, load_dataset
from .formulation import OrdceProblem, SolverParams
from .interaction import load_interaction

COSTS = ("tlps", "mad", "table")
SCALINGS = ("inverse_std", "unit", "table")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dataset: Path
    model: Path
    interaction: Path
    features: tuple[FeatureSpec, ...]
    cost: str = "tlps"
    cost_table: Path | None = None
    scaling: str = "inverse_std"
    scaling_table: dict = field(default_factory=dict)
    gamma: float = 1.0
    K: int = 4
    onehot_groups: tuple[tuple[str, ...], ...] = ()
    max_instances: int | None = None
    rows: tuple[int, ...] | None = None
    solver: SolverParams = field(default_factory=SolverParams)
    output: Path = Path("results")
    seed: int = 0

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")
        if self.K < 1:
            raise ConfigError("K must be >= 1")
        if self.solver.time_limit <= 0:
            raise ConfigError("time limit must be > 0")
        if self.solver.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.cost not in COSTS:
            raise ConfigError(f"cost must be one of {COSTS}, got {self.cost!r}")
        if self.cost == "table" and self.cost_table is None:
            raise ConfigError("cost 'table' needs a cost_table path")
        if self.scaling not in SCALINGS:
            raise ConfigError(f"scaling must be one of {SCALINGS}, got {self.scaling!r}")
        if self.max_instances is not None and self.max_instances < 1:
            raise ConfigError("max_instances must be >= 1")

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    def override(self, **changes) -> "RunConfig":
        """Copy with the non-``None`` entries of ``changes`` applied."""
        changes = {k: v for k, v in changes.items() if v is not None}
        solver_keys = {"time_limit", "threads", "gap_tol"}
        solver = replace(self.solver, **{k: changes.pop(k) for k in list(changes) if k in solver_keys})
        try:
            return replace(self, solver=solver, **changes)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    """Read a config document; relative paths resolve against its directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    return config_from_dict(doc, path.parent)


def config_from_dict(doc: dict, base: Path = Path(".")) -> RunConfig:
    def resolve(p):
        return None if p is None else (base / p if not os.path.isabs(p) else Path(p))

    try:
        features = tuple(FeatureSpec.from_dict(f) for f in doc["features"])
        solver_doc = doc.get("solver", {}) or {}
        inst = doc.get("instances", {}) or {}
        return RunConfig(
            dataset=resolve(doc["dataset"]),
            model=resolve(doc["model"]),
            interaction=resolve(doc["interaction"]),
            features=features,
            cost=doc.get("cost", "tlps"),
            cost_table=resolve(doc.get("cost_table")),
            scaling=doc.get("scaling", "inverse_std"),
            scaling_table=dict(doc.get("scaling_table", {}) or {}),
            gamma=float(doc.get("gamma", 1.0)),
            K=int(doc.get("K", 4)),
            onehot_groups=tuple(tuple(g) for g in doc.get("onehot_groups", []) or []),
            max_instances=inst.get("max"),
            rows=tuple(int(r) for r in inst["rows"]) if inst.get("rows") is not None else None,
            solver=SolverParams(float(solver_doc.get("time_limit", 300.0)),
                                float(solver_doc.get("gap", 1e-6)),
                                int(solver_doc.get("threads", 1))),
            output=resolve(doc.get("output", "results")),
            seed=int(doc.get("seed", 0)),
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing required field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None


@dataclass
class Workspace:
    """Everything a run needs once the input files are loaded."""

    config: RunConfig
    X: np.ndarray
    stats: DatasetStats
    classifier: AdditiveClassifier
    M: np.ndarray
    cost_table: dict | None

    @classmethod
    def load(cls, config: RunConfig) -> "Workspace":
        X, stats = load_dataset(config.dataset, config.features)
        clf = load_model(config.model)
        if clf.n_features != len(config.features):
            raise ConfigError(f"model has {clf.n_features} features, config declares {len(config.features)}")
        M = load_interaction(config.interaction, config.feature_names)
        table = load_cost_table(config.cost_table) if config.cost == "table" else None
        return cls(config, X, stats, clf, M, table)

    def select_rows(self) -> list[int]:
        """Rows to explain: the configured ones, else negatives (a seeded subset when capped)."""
        cfg = self.config
        if cfg.rows is not None:
            bad = [r for r in cfg.rows if not 0 <= r < len(self.X)]
            if bad:
                raise ConfigError(f"rows {bad} are out of range for {len(self.X)} instances")
            return list(cfg.rows)
        neg = [i for i, x in enumerate(self.X) if self.classifier.predict(x) == -1]
        if cfg.max_instances is not None and len(neg) > cfg.max_instances:
            rng = np.random.default_rng(cfg.seed)
            neg = sorted(int(i) for i in rng.choice(neg, cfg.max_instances, replace=False))
        return neg

    def scaling(self) -> np.ndarray:
        cfg = self.config
        if cfg.scaling == "inverse_std":
            return default_scaling(self.stats)
        if cfg.scaling == "unit":
            return np.ones(len(cfg.features))
        try:
            return np.array([float(cfg.scaling_table[n]) for n in cfg.feature_names])
        except KeyError as exc:
            raise ConfigError(f"scaling_table has no entry for {exc}") from None

    def distance(self, action_set, x) -> DistanceCost:
        cfg = self.config
        if cfg.cost == "tlps":
            return tlps_cost(action_set, x, self.stats)
        if cfg.cost == "mad":
            return mad_cost(action_set, self.stats)
        return table_cost(action_set, cfg.feature_names, self.cost_table)

    def problem(self, row: int) -> OrdceProblem:
        cfg = self.config
        x = self.X[row]
        action_set = build_action_set(x, cfg.features, self.stats)
        index = {n: i for i, n in enumerate(cfg.feature_names)}
        try:
            groups = tuple(tuple(index[n] for n in g) for g in cfg.onehot_groups)
        except KeyError as exc:
            raise ConfigError(f"one-hot group names unknown feature {exc}") from None
        return OrdceProblem(self.classifier, x, action_set, self.M, self.distance(action_set, x),
                            self.scaling(), cfg.gamma, min(cfg.K, len(cfg.features)), groups, cfg.solver)


def dump_config(doc: dict, path) -> None:
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")
