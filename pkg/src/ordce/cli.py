"""Command-line entry point: ``ordce {demo,extract,compare,sweep,export-mps}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

from . import synthetic
from .baselines import BudgetExceeded, brute_force, greedy
from .classifiers import save_model
from .config import ConfigError, Workspace, dump_config, load_config
from .formulation import Extraction, ProblemError, build_milo, extract
from .interaction import dag_document
from .milp.mps import write_mps
from .report import ComparisonReport, ResultRow, sweep_table

log = logging.getLogger("ordce")

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED = 0, 2, 3


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_json(path: Path, doc) -> None:
    write_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


# -- demo ------------------------------------------------------------------------

def cmd_demo(args) -> int:
    if args.n_samples < 1:
        raise ConfigError("--n-samples must be >= 1")
    out = Path(args.out)
    X, y = synthetic.demo_dataset(args.n_samples, args.seed)
    clf = synthetic.train_logistic(X, y)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "credit.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*synthetic.DEMO_FEATURES, "label"])
        for row, label in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    write_json(out / "dag.json", dag_document(synthetic.DEMO_FEATURES, synthetic.demo_adjacency()))
    save_model(clf, out / "model.json")
    config = {
        "dataset": "credit.csv", "model": "model.json", "interaction": "dag.json",
        "features": [s.to_dict() for s in synthetic.demo_specs(X)],
        "cost": "tlps", "scaling": "inverse_std", "gamma": 1.0, "K": 4,
        "instances": {"max": 20},
        "solver": {"time_limit": 300.0, "gap": 1e-6, "threads": 1},
        "output": "results", "seed": args.seed,
    }
    dump_config(config, out / "config.yaml")
    accuracy = sum(clf.predict(x) == t for x, t in zip(X, y)) / len(y)
    print(f"wrote demo data to {out} ({len(X)} rows, model training accuracy {accuracy:.3f})")
    return EXIT_OK


# -- shared pipeline ---------------------------------------------------------------

def run_method(ws: Workspace, row: int, method: str, gamma: float | None = None) -> tuple[Extraction, float]:
    """Solve one instance; solver and problem errors become a failed extraction."""
    start = time.perf_counter()
    try:
        problem = ws.problem(row)
        if gamma is not None:
            problem = problem.with_gamma(gamma)
        if method == "ordce":
            ext = extract(problem)
        elif method == "greedy":
            ext = greedy(problem)
        else:
            ext = brute_force(problem)
    except ConfigError:
        raise
    except (ProblemError, BudgetExceeded, RuntimeError, ValueError) as exc:
        log.warning("instance %d (%s): %s", row, method, exc)
        ext = Extraction(f"error: {exc}", None, method="brute_force" if method == "brute" else method)
    return ext, time.perf_counter() - start


def prepare(args) -> tuple[Workspace, list[int], Path]:
    cfg = load_config(args.config)
    cfg = cfg.override(gamma=args.gamma, K=args.k, cost=args.cost, time_limit=args.time_limit,
                       seed=args.seed, threads=args.threads,
                       output=Path(args.out) if args.out else None)
    ws = Workspace.load(cfg)
    rows = ws.select_rows()
    log.info("%d instances selected", len(rows))
    return ws, rows, cfg.output


class TimingLog:
    """Wall times and timestamps, kept apart from the reproducible result documents."""

    def __init__(self, path: Path):
        path.parent.mkdir(parents=True, exist_ok=True)
        self.fh = open(path, "w", newline="", encoding="utf-8")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.w.writerow(["timestamp", "instance", "method", "gamma", "seconds"])

    def add(self, row: int, method: str, gamma: float, seconds: float) -> None:
        self.w.writerow([time.strftime("%Y-%m-%dT%H:%M:%S"), row, method, gamma, f"{seconds:.6f}"])
        self.fh.flush()

    def close(self) -> None:
        self.fh.close()


def cmd_extract(args) -> int:
    ws, rows, out = prepare(args)
    names = ws.config.feature_names
    timing = TimingLog(out / "timings.csv")
    summary = []
    try:
        for r in rows:
            if args.export_mps:
                _export_one(ws, r, out)
            ext, secs = run_method(ws, r, args.method)
            timing.add(r, ext.method, ws.config.gamma, secs)
            doc = {"instance": r, **ext.to_dict(names, include_time=False)}
            write_json(out / f"instance_{r}_{ext.method}.json", doc)
            summary.append({"instance": r, "status": ext.status, "ok": ext.ok,
                            "cost_total": ext.action.cost_total if ext.ok else None})
            print(f"instance {r}: {ext.status}" + (f" C_OrdCE={ext.action.cost_total:.6f}" if ext.ok else ""))
    finally:
        timing.close()
    n_ok = sum(s["ok"] for s in summary)
    write_json(out / "summary.json", {"method": args.method, "gamma": ws.config.gamma, "K": ws.config.K,
                                      "n_instances": len(summary), "n_solved": n_ok, "instances": summary})
    print(f"{n_ok}/{len(summary)} instances solved; results in {out}")
    return EXIT_OK if n_ok else EXIT_ALL_FAILED


def cmd_compare(args) -> int:
    ws, rows, out = prepare(args)
    report = ComparisonReport()
    for method in ("ordce", "greedy"):
        for r in rows:
            ext, secs = run_method(ws, r, method)
            report.rows.append(ResultRow.from_extraction(r, ext, secs))
    write_atomic(out / "comparison_rows.csv", report.rows_csv())
    write_json(out / "comparison_summary.json", report.summary())
    print(report.table())
    return EXIT_OK if any(row.solved for row in report.rows) else EXIT_ALL_FAILED


def parse_gammas(text: str) -> list[float]:
    try:
        gammas = [float(g) for g in text.split(",") if g.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse gamma list {text!r}") from None
    if not gammas or any(g < 0 for g in gammas) or gammas != sorted(gammas):
        raise ConfigError("gamma list must be non-empty, non-negative and ascending")
    return gammas


def cmd_sweep(args) -> int:
    gammas = parse_gammas(args.gammas)
    ws, rows, out = prepare(args)
    timing = TimingLog(out / "timings.csv")
    by_gamma = []
    try:
        for g in gammas:
            results = []
            for r in rows:
                ext, secs = run_method(ws, r, args.method, gamma=g)
                timing.add(r, ext.method, g, secs)
                results.append(ResultRow.from_extraction(r, ext, secs))
            by_gamma.append(results)
    finally:
        timing.close()
    table = sweep_table(gammas, by_gamma)
    write_atomic(out / "sweep.csv", table)
    print(table, end="")
    return EXIT_OK if any(r.solved for rs in by_gamma for r in rs) else EXIT_ALL_FAILED


def _export_one(ws: Workspace, row: int, out: Path) -> bool:
    try:
        model, _ = build_milo(ws.problem(row))
    except ProblemError as exc:
        log.warning("instance %d: %s", row, exc)
        return False
    path = out / f"instance_{row}.mps"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        write_mps(model, fh)
    return True


def cmd_export_mps(args) -> int:
    ws, rows, out = prepare(args)
    n = sum(_export_one(ws, r, out) for r in rows)
    print(f"wrote {n} MPS files to {out}")
    return EXIT_OK if n else EXIT_ALL_FAILED


# -- argument parsing ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ordce", description="Ordered counterfactual explanations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="write the synthetic credit dataset, DAG, model and config")
    demo.add_argument("--out", default="demo", help="output directory")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--n-samples", type=int, default=1000)
    demo.set_defaults(func=cmd_demo)

    def common(sp, method=True):
        sp.add_argument("config", help="YAML or JSON run configuration")
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--k", type=int, help="maximum number of perturbed features")
        sp.add_argument("--cost", choices=("tlps", "mad", "table"))
        sp.add_argument("--time-limit", type=float, help="per-instance solver time limit in seconds (default 300)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out", help="output directory (overrides the config)")
        if method:
            sp.add_argument("--method", choices=("ordce", "greedy", "brute"), default="ordce")

    ext = sub.add_parser("extract", help="explain each selected instance")
    common(ext)
    ext.add_argument("--export-mps", action="store_true", help="also write each instance's model as MPS")
    ext.set_defaults(func=cmd_extract)

    cmp_ = sub.add_parser("compare", help="OrdCE versus the greedy baseline")
    common(cmp_, method=False)
    cmp_.set_defaults(func=cmd_compare)

    sw = sub.add_parser("sweep", help="mean cost components across a gamma list")
    common(sw)
    sw.add_argument("--gammas", default="0,0.5,1,2,4", help="comma-separated ascending list")
    sw.set_defaults(func=cmd_sweep)

    mps = sub.add_parser("export-mps", help="write each instance's model as an MPS file")
    common(mps, method=False)
    mps.set_defaults(func=cmd_export_mps)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, KeyError) as exc:
        # unreadable or malformed input files
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
