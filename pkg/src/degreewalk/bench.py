"""Benchmark grids comparing fixed and degree-proportional walk schedules.

A plan is a flat key=value file (lists comma-separated).  Every
(task, strategy, walk_length, seed) cell runs corpus generation, training,
and evaluation, then persists its result as a JSON marker so reruns perform
no new computation.  Aggregation emits a comparison table per (task,
walk_length) with decrease/gain computed against the fixed-strategy row, a
long-format sweep CSV (mean accuracy by walk length and strategy), and
per-stage wall-clock timings.
"""

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import TrainConfig, train
from .evaluation import (EvalReport, classify_nodes, make_link_split,
                         predict_links_report, write_report_csv, EDGE_OPERATORS)
from .graph import DegreewalkError, karate_club, largest_connected_component, load_edge_list, load_labels
from .walks import DegreeBased, Fixed, WalkConfig, generate_corpus, total_walk_count

logger = logging.getLogger(__name__)

_TRUE = {"true", "yes", "1", "on"}
_FALSE = {"false", "no", "0", "off"}


@dataclass
class BenchmarkPlan:
    dataset: str
    output: str
    labels: str | None = None
    use_lcc: bool = True
    strategies: list = field(default_factory=list)
    walk_lengths: list = field(default_factory=list)
    tasks: list = field(default_factory=lambda: ["nc"])
    seeds: list = field(default_factory=list)
    walk_p: float = 1.0
    walk_q: float = 1.0
    dim: int = 128
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    lr_floor: float = 1e-4
    shrink_window: bool = True
    split_ratio: float = 0.8
    test_fraction: float = 0.2
    link_operator: str = "hadamard"

    def validate(self):
        if not self.strategies:
            raise DegreewalkError("plan needs at least one strategy")
        if not self.walk_lengths:
            raise DegreewalkError("plan needs at least one walk length")
        if not self.seeds:
            raise DegreewalkError("plan needs at least one seed")
        for t in self.tasks:
            if t not in ("nc", "lp"):
                raise DegreewalkError(f"unknown task {t!r} (use nc, lp)")
        if self.link_operator not in EDGE_OPERATORS:
            raise DegreewalkError(f"unknown link operator {self.link_operator!r}")


def parse_strategy(text):
    """'fixed:20' -> Fixed(20); 'degree:3' -> DegreeBased(3)."""
    kind, _, num = text.partition(":")
    kind = kind.strip().lower()
    try:
        value = int(num)
    except ValueError:
        raise DegreewalkError(f"bad strategy {text!r}: expected kind:count") from None
    if kind == "fixed":
        return Fixed(value)
    if kind in ("degree", "degree-based", "degreebased"):
        return DegreeBased(value)
    raise DegreewalkError(f"unknown strategy kind {kind!r} (use fixed or degree)")


def _parse_bool(value, key):
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise DegreewalkError(f"plan key {key}: cannot parse boolean {value!r}")


def parse_plan(text):
    """Parse the flat key=value plan format ('#' comments, comma lists)."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DegreewalkError(f"plan line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        raw[key.strip().lower()] = value.strip()
    if "dataset" not in raw or "output" not in raw:
        raise DegreewalkError("plan needs 'dataset' and 'output' keys")
    plan = BenchmarkPlan(dataset=raw.pop("dataset"), output=raw.pop("output"))
    parsers = {
        "labels": str,
        "use_lcc": lambda v: _parse_bool(v, "use_lcc"),
        "strategies": lambda v: [s.strip() for s in v.split(",") if s.strip()],
        "walk_lengths": lambda v: [int(x) for x in v.split(",")],
        "tasks": lambda v: [s.strip().lower() for s in v.split(",") if s.strip()],
        "seeds": lambda v: [int(x) for x in v.split(",")],
        "walk_p": float, "walk_q": float,
        "dim": int, "window": int, "negatives": int, "epochs": int,
        "lr": float, "lr_floor": float,
        "shrink_window": lambda v: _parse_bool(v, "shrink_window"),
        "split_ratio": float, "test_fraction": float,
        "link_operator": str,
    }
    for key, value in raw.items():
        if key not in parsers:
            raise DegreewalkError(f"unknown plan key {key!r}")
        try:
            setattr(plan, key, parsers[key](value))
        except (ValueError, TypeError) as e:
            raise DegreewalkError(f"plan key {key}: {e}") from e
    for s in plan.strategies:
        parse_strategy(s)
    plan.validate()
    return plan


def load_plan(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DegreewalkError(f"cannot read plan {path}: {e}") from e
    return parse_plan(text)


def load_dataset(dataset, labels=None, use_lcc=True):
    """Resolve a builtin name or edge-list path into a ready Graph."""
    if dataset == "karate":
        g = karate_club()
    else:
        g = load_edge_list(dataset)
        if labels:
            g = load_labels(labels, g)
    if use_lcc:
        g, _ = largest_connected_component(g)
    return g


_GRAPH_CACHE = {}


def _cached_graph(plan):
    key = (plan.dataset, plan.labels, plan.use_lcc)
    if key not in _GRAPH_CACHE:
        _GRAPH_CACHE[key] = load_dataset(plan.dataset, plan.labels, plan.use_lcc)
    return _GRAPH_CACHE[key]


def _cell_id(task, strategy_text, walk_length, seed):
    return f"{task}_{strategy_text.replace(':', '-')}_wl{walk_length}_seed{seed}"


def run_cell(plan, task, strategy_text, walk_length, seed):
    """One grid cell: corpus -> train -> evaluate, with stage timings."""
    g = _cached_graph(plan)
    strategy = parse_strategy(strategy_text)
    result = {
        "task": task, "strategy": strategy_text, "walk_length": walk_length,
        "seed": seed, "status": "ok",
    }
    try:
        tcfg = TrainConfig(dimension=plan.dim, window=plan.window,
                           negatives=plan.negatives, epochs=plan.epochs,
                           learning_rate=plan.lr, lr_floor=plan.lr_floor,
                           shrink_window=plan.shrink_window, seed=seed)
        wcfg = WalkConfig(strategy=strategy, walk_length=walk_length,
                          p=plan.walk_p, q=plan.walk_q, seed=seed)
        if task == "lp":
            split = make_link_split(g, plan.test_fraction, seed)
            walk_graph = split.train_graph
        else:
            split = None
            walk_graph = g
        t0 = time.perf_counter()
        corpus = generate_corpus(walk_graph, wcfg)
        t1 = time.perf_counter()
        emb = train(corpus, tcfg)
        t2 = time.perf_counter()
        if task == "nc":
            if g.labels is None:
                raise DegreewalkError("node classification needs labels")
            acc = classify_nodes(emb, g.labels, plan.split_ratio, seed)
            auc = None
        else:
            acc, auc = predict_links_report(emb, split, plan.link_operator, seed)
        t3 = time.perf_counter()
        result.update({
            "accuracy": acc,
            "auc": auc,
            "total_walks": int(total_walk_count(strategy, walk_graph)),
            "timings": {
                "walk_ms": 1e3 * (t1 - t0),
                "train_ms": 1e3 * (t2 - t1),
                "eval_ms": 1e3 * (t3 - t2),
            },
        })
    except Exception as e:  # cell failures are recorded, the grid continues
        logger.exception("cell %s failed", _cell_id(task, strategy_text, walk_length, seed))
        result.update({"status": f"error: {e}", "accuracy": None, "auc": None,
                       "total_walks": None, "timings": None})
    return result


def _run_cell_job(args):
    plan_dict, task, strategy_text, walk_length, seed = args
    plan = BenchmarkPlan(**plan_dict)
    return run_cell(plan, task, strategy_text, walk_length, seed)


def run_plan(plan, workers=1):
    """Run the whole grid (resumable) and write the aggregate CSVs."""
    plan.validate()
    out = Path(plan.output)
    cell_dir = out / "cells"
    cell_dir.mkdir(parents=True, exist_ok=True)
    cells = [(task, s, wl, seed)
             for task in plan.tasks
             for s in plan.strategies
             for wl in plan.walk_lengths
             for seed in plan.seeds]
    pending = [c for c in cells if not (cell_dir / (_cell_id(*c) + ".json")).exists()]
    logger.info("benchmark grid: %d cells (%d cached)", len(cells), len(cells) - len(pending))
    if pending:
        if workers > 1:
            jobs = [(plan.__dict__, *c) for c in pending]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_cell_job, jobs))
        else:
            results = [run_cell(plan, *c) for c in pending]
        for cell, result in zip(pending, results):
            path = cell_dir / (_cell_id(*cell) + ".json")
            path.write_text(json.dumps(result, indent=2), encoding="utf-8")
    all_results = []
    for cell in cells:
        path = cell_dir / (_cell_id(*cell) + ".json")
        all_results.append(json.loads(path.read_text(encoding="utf-8")))
    aggregate(plan, all_results, out)
    return all_results


def aggregate(plan, results, out):
    """Write table_<task>.csv, sweep_<task>.csv, and timings.csv."""
    out = Path(out)
    by_key = {}
    for r in results:
        by_key.setdefault((r["task"], r["strategy"], r["walk_length"]), []).append(r)
    fixed_strategies = [s for s in plan.strategies if parse_strategy(s).__class__ is Fixed]
    baseline_strategy = fixed_strategies[0] if fixed_strategies else None
    for task in plan.tasks:
        reports = []
        sweep_rows = []
        for wl in plan.walk_lengths:
            wl_reports = []
            for s in plan.strategies:
                cells = by_key.get((task, s, wl), [])
                accs = [c["accuracy"] for c in cells if c["status"] == "ok"]
                n_err = sum(1 for c in cells if c["status"] != "ok")
                strategy = parse_strategy(s)
                tnw = next((c["total_walks"] for c in cells if c["status"] == "ok"), None)
                rep = EvalReport(
                    task=task,
                    strategy="fixed" if isinstance(strategy, Fixed) else "degree",
                    nwpd_or_fixed=(strategy.walks_per_node if isinstance(strategy, Fixed)
                                   else strategy.walks_per_degree),
                    walk_length=wl,
                    total_walks=tnw if tnw is not None else 0,
                    accuracy=float(np.mean(accs)) if accs else float("nan"),
                    status="ok" if n_err == 0 else f"errors:{n_err}/{len(cells)}",
                )
                wl_reports.append((s, rep))
                if accs:
                    sweep_rows.append({
                        "walk_length": wl,
                        "strategy": s,
                        "mean_accuracy": float(np.mean(accs)),
                        "stddev": float(np.std(accs)),
                    })
            baseline = next((rep for s, rep in wl_reports
                             if s == baseline_strategy and np.isfinite(rep.accuracy)
                             and rep.total_walks), None)
            for _, rep in wl_reports:
                if baseline is not None and np.isfinite(rep.accuracy) and rep.total_walks:
                    rep.against_baseline(baseline)
            reports.extend(rep for _, rep in wl_reports)
        with open(out / f"table_{task}.csv", "w", newline="", encoding="utf-8") as fh:
            write_report_csv(reports, fh, extra_status=True)
        with open(out / f"sweep_{task}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["walk_length", "strategy",
                                               "mean_accuracy", "stddev"],
                           lineterminator="\n")
            w.writeheader()
            for row in sweep_rows:
                w.writerow({**row, "mean_accuracy": f"{row['mean_accuracy']:.4f}",
                            "stddev": f"{row['stddev']:.4f}"})
    with open(out / "timings.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task", "strategy", "walk_length", "seed",
                    "walk_ms", "train_ms", "eval_ms", "total_walks"])
        for r in sorted(results, key=lambda r: (r["task"], r["strategy"],
                                                r["walk_length"], r["seed"])):
            t = r.get("timings") or {}
            w.writerow([r["task"], r["strategy"], r["walk_length"], r["seed"],
                        _fmt_ms(t.get("walk_ms")), _fmt_ms(t.get("train_ms")),
                        _fmt_ms(t.get("eval_ms")), r.get("total_walks", "")])


def _fmt_ms(v):
    return "" if v is None else f"{v:.1f}"
