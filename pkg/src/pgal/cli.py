"""Command-line benchmark harness.

Verbs:
  run       execute a strategy x budget x seed matrix from a JSON config
  gen-synth write a synthetic graph as nodes.jsonl + edges.csv
  scaling   time budget-20 selection on synthetic graphs of growing edge count
  ablation  run the raw-centrality and perturbation-count variants

All outputs are plain CSV/JSONL. Exit code 2 signals an invalid config and
the message names the offending field.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from pgal import gcn, loop, metrics
from pgal.centrality import CentralityConfig
from pgal.graph import (Graph, SyntheticParams, generate_synthetic, load_graph,
                        save_graph)
from pgal.perturb import PerturbationConfig

RESULTS_HEADER = "dataset,strategy,centrality,budget,seed,accuracy,macro_f1,elapsed_ms"
AGGREGATE_HEADER = ("dataset,strategy,centrality,budget,n_runs,"
                    "accuracy_mean,accuracy_std,macro_f1_mean,macro_f1_std")
SCALING_HEADER = "edges,total_selection_time_ms"

ABLATION_VARIANTS = (
    ("raw-10", True, (4, 3, 3)),
    ("perturb-5", False, (2, 2, 1)),
    ("perturb-10", False, (4, 3, 3)),
    ("perturb-15", False, (6, 5, 4)),
)


class ConfigError(ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_name: str
    synthetic: SyntheticParams | None
    nodes_path: str | None
    edges_path: str | None
    strategies: tuple
    budgets: tuple
    batch_size: int
    initial_labeled: int
    perturbation: PerturbationConfig
    centrality: CentralityConfig
    gcn_hyper: gcn.GcnHyper
    beta_start: float
    beta_end: float
    seeds: tuple
    output_dir: str

    def loop_config(self) -> loop.LoopConfig:
        return loop.LoopConfig(initial_labeled=self.initial_labeled,
                               perturbation=self.perturbation,
                               centrality=self.centrality,
                               gcn=self.gcn_hyper,
                               beta_start=self.beta_start,
                               beta_end=self.beta_end)

    def load_dataset(self) -> Graph:
        if self.synthetic is not None:
            return generate_synthetic(self.synthetic)
        return load_graph(self.nodes_path, self.edges_path)


def _section(doc, key):
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(key, "must be an object")
    return value


def _build(field, factory, kwargs):
    try:
        return factory(**kwargs)
    except TypeError as exc:
        raise ConfigError(field, f"unknown key ({exc})") from exc
    except ValueError as exc:
        raise ConfigError(field, str(exc)) from exc


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")

    dataset = doc.get("dataset")
    if not isinstance(dataset, dict):
        raise ConfigError("dataset", "required object with 'synthetic' or 'nodes'/'edges'")
    synthetic = None
    nodes_path = edges_path = None
    if "synthetic" in dataset:
        synthetic = _build("dataset.synthetic", SyntheticParams, dataset["synthetic"])
    elif "nodes" in dataset and "edges" in dataset:
        nodes_path, edges_path = dataset["nodes"], dataset["edges"]
    else:
        raise ConfigError("dataset", "needs either 'synthetic' or both 'nodes' and 'edges'")
    default_name = "synthetic" if synthetic is not None else Path(nodes_path).stem
    dataset_name = dataset.get("name", default_name)

    strategies = doc.get("strategies")
    if not strategies or not isinstance(strategies, list):
        raise ConfigError("strategies", "required nonempty list")
    for s in strategies:
        try:
            loop.strategy_from_name(s)
        except ValueError as exc:
            raise ConfigError("strategies", str(exc)) from exc

    budgets = doc.get("budgets")
    if not budgets or not isinstance(budgets, list):
        raise ConfigError("budgets", "required nonempty list")
    if any(not isinstance(b, int) or b < 1 for b in budgets):
        raise ConfigError("budgets", "budgets must be positive integers")

    seeds = doc.get("seeds")
    if not seeds or not isinstance(seeds, list):
        raise ConfigError("seeds", "required nonempty list")
    if any(not isinstance(s, int) or s < 0 for s in seeds):
        raise ConfigError("seeds", "seeds must be nonnegative integers")

    batch_size = doc.get("batch_size", 5)
    if not isinstance(batch_size, int) or batch_size < 1:
        raise ConfigError("batch_size", "must be a positive integer")
    initial_labeled = doc.get("initial_labeled", 2)
    if not isinstance(initial_labeled, int) or initial_labeled < 1:
        raise ConfigError("initial_labeled", "must be a positive integer")

    perturbation = _build("perturbation", PerturbationConfig, _section(doc, "perturbation"))
    centrality = _build("centrality", CentralityConfig, _section(doc, "centrality"))
    hyper = _build("gcn", gcn.GcnHyper, _section(doc, "gcn"))

    schedule = _section(doc, "schedule")
    beta_start = schedule.get("beta_start", 9.0)
    beta_end = schedule.get("beta_end", 0.25)
    if not (isinstance(beta_start, (int, float)) and isinstance(beta_end, (int, float))
            and beta_start >= beta_end > 0):
        raise ConfigError("schedule", "needs beta_start >= beta_end > 0")

    output_dir = doc.get("output_dir", "out")
    return ExperimentConfig(dataset_name, synthetic, nodes_path, edges_path,
                            tuple(strategies), tuple(budgets), batch_size,
                            initial_labeled, perturbation, centrality, hyper,
                            float(beta_start), float(beta_end), tuple(seeds),
                            str(output_dir))


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("<config>", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<config>", f"invalid JSON: {exc}") from exc
    return parse_config(doc)


# -- matrix execution --------------------------------------------------------


def _run_cell(args):
    """One (strategy, budget, seed) cell; top-level for process pools."""
    cfg, strategy_name, budget, seed, variant = args
    g = cfg.load_dataset()
    strategy = loop.strategy_from_name(strategy_name)
    loop_cfg = cfg.loop_config()
    if variant is not None:
        _, raw, (de, ea, pd_) = variant
        strategy = replace(strategy, raw_centrality=raw)
        loop_cfg = replace(loop_cfg, perturbation=replace(
            loop_cfg.perturbation, edge_drop_count=de, edge_add_count=ea,
            path_drop_count=pd_))

    start = time.perf_counter()
    labeled, trace = loop.run_active_learning(g, strategy, budget,
                                              cfg.batch_size, loop_cfg, seed)
    eval_hyper = replace(cfg.gcn_hyper, init_seed=loop.derive_eval_seed(seed))
    report = metrics.evaluate(g, labeled, eval_hyper)
    elapsed_ms = (time.perf_counter() - start) * 1e3

    trace_rows = loop.trace_round_dicts(trace, g)
    centrality_name = strategy.metric or ""
    variant_name = variant[0] if variant is not None else None
    return {"variant": variant_name, "strategy": strategy_name,
            "centrality": centrality_name, "budget": budget, "seed": seed,
            "accuracy": report.accuracy, "macro_f1": report.macro_f1,
            "elapsed_ms": elapsed_ms, "trace_rows": trace_rows}


def _execute_matrix(cfg: ExperimentConfig, cells, jobs: int):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]
    # stable output order regardless of scheduling
    results.sort(key=lambda r: (r["variant"] or "", r["strategy"], r["budget"], r["seed"]))
    return results


def _write_results(cfg, results, out_dir: Path, with_variant=False):
    out_dir.mkdir(parents=True, exist_ok=True)
    traces_dir = out_dir / "traces"
    traces_dir.mkdir(exist_ok=True)

    prefix = "ablation_" if with_variant else ""
    results_path = out_dir / f"{prefix}results.csv"
    with results_path.open("w", newline="") as fh:
        header = RESULTS_HEADER if not with_variant else "variant," + RESULTS_HEADER
        fh.write(header + "\n")
        for r in results:
            row = (f"{cfg.dataset_name},{r['strategy']},{r['centrality']},"
                   f"{r['budget']},{r['seed']},{r['accuracy']:.6f},"
                   f"{r['macro_f1']:.6f},{r['elapsed_ms']:.3f}")
            if with_variant:
                row = f"{r['variant']}," + row
            fh.write(row + "\n")

    groups = {}
    for r in results:
        key = (r["variant"], r["strategy"], r["centrality"], r["budget"])
        groups.setdefault(key, []).append(r)
    agg_path = out_dir / f"{prefix}aggregate.csv"
    with agg_path.open("w", newline="") as fh:
        header = AGGREGATE_HEADER if not with_variant else "variant," + AGGREGATE_HEADER
        fh.write(header + "\n")
        for key in sorted(groups, key=lambda k: (k[0] or "", k[1], k[3])):
            variant, strategy, cent, budget = key
            rows = groups[key]
            acc = np.array([x["accuracy"] for x in rows])
            f1 = np.array([x["macro_f1"] for x in rows])
            acc_std = acc.std(ddof=1) if len(rows) > 1 else 0.0
            f1_std = f1.std(ddof=1) if len(rows) > 1 else 0.0
            row = (f"{cfg.dataset_name},{strategy},{cent},{budget},{len(rows)},"
                   f"{acc.mean():.6f},{acc_std:.6f},{f1.mean():.6f},{f1_std:.6f}")
            if with_variant:
                row = f"{variant}," + row
            fh.write(row + "\n")

    for r in results:
        tag = f"{r['variant']}_" if r["variant"] else ""
        name = f"{tag}{r['strategy']}_b{r['budget']}_s{r['seed']}.jsonl"
        with (traces_dir / name).open("w") as fh:
            for rec in r["trace_rows"]:
                fh.write(json.dumps(rec) + "\n")
    return results_path, agg_path


def _resolve_out_dir(cfg, out_override):
    # precedence: --out flag, PGAL_OUT env var, config output_dir
    return Path(out_override or os.environ.get("PGAL_OUT") or cfg.output_dir)


def cmd_run(config_path, out_override=None, jobs=1, seed_offset=0) -> int:
    cfg = load_config(config_path)
    out_dir = _resolve_out_dir(cfg, out_override)
    seeds = [s + seed_offset for s in cfg.seeds]
    cells = [(cfg, strat, budget, seed, None)
             for strat in cfg.strategies for budget in cfg.budgets for seed in seeds]
    results = _execute_matrix(cfg, cells, jobs)
    results_path, agg_path = _write_results(cfg, results, out_dir)
    print(f"wrote {results_path} ({len(results)} runs) and {agg_path}")
    return 0


def cmd_ablation(config_path, out_override=None, jobs=1, seed_offset=0) -> int:
    cfg = load_config(config_path)
    out_dir = _resolve_out_dir(cfg, out_override)
    seeds = [s + seed_offset for s in cfg.seeds]
    strategies = [s for s in cfg.strategies if s.startswith("ours-")]
    if not strategies:
        raise ConfigError("strategies", "ablation needs at least one ours-* strategy")
    cells = [(cfg, strat, budget, seed, variant)
             for variant in ABLATION_VARIANTS
             for strat in strategies for budget in cfg.budgets for seed in seeds]
    results = _execute_matrix(cfg, cells, jobs)
    results_path, agg_path = _write_results(cfg, results, out_dir, with_variant=True)
    print(f"wrote {results_path} ({len(results)} runs) and {agg_path}")
    return 0


def cmd_gen_synth(params: SyntheticParams, out_dir) -> int:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    g = generate_synthetic(params)
    save_graph(g, out_dir / "nodes.jsonl", out_dir / "edges.csv")
    print(f"wrote {out_dir}/nodes.jsonl and {out_dir}/edges.csv "
          f"({g.n} nodes, {g.edge_count} edges)")
    return 0


def scaling_params(target_edges: int, seed: int = 77) -> SyntheticParams:
    """Synthetic config hitting a target edge count with dense user activity,
    so node count (and Brandes cost) grows sublinearly in |E|."""
    mean_posts = 24.0
    users_per_side = max(1, int(round(target_edges / (2 * mean_posts))))
    return SyntheticParams(users_per_side=users_per_side, assertions_per_side=250,
                           mean_posts_per_user=mean_posts, in_side_probability=0.9,
                           seed=seed)


def cmd_scaling(sizes, metric, out_path, budget=20, batch_size=5, epochs=50,
                perturb=(2, 2, 1)) -> int:
    """Time a full budget-`budget` selection per target edge count.

    The perturbed-set size scales both metrics' centrality cost by the same
    factor, so the smaller five-graph preset keeps the study quick without
    touching the measured trend.
    """
    if len(sizes) < 2:
        print("scaling needs at least 2 sizes", file=sys.stderr)
        return 2
    de, ea, pd_ = perturb
    rows = []
    for size in sizes:
        g = generate_synthetic(scaling_params(size))
        cfg = loop.LoopConfig(centrality=CentralityConfig(metric=metric),
                              gcn=gcn.GcnHyper(epochs=epochs),
                              perturbation=PerturbationConfig(
                                  edge_drop_count=de, edge_add_count=ea,
                                  path_drop_count=pd_))
        strategy = loop.strategy_from_name(f"ours-{metric}")
        start = time.perf_counter()
        loop.run_active_learning(g, strategy, budget, batch_size, cfg, master_seed=0)
        elapsed_ms = (time.perf_counter() - start) * 1e3
        rows.append((g.edge_count, elapsed_ms))
        print(f"metric={metric} edges={g.edge_count} nodes={g.n} "
              f"selection={elapsed_ms:.1f} ms")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", newline="") as fh:
        fh.write(SCALING_HEADER + "\n")
        for edges, ms in rows:
            fh.write(f"{edges},{ms:.3f}\n")
    print(f"wrote {out_path}")
    return 0


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pgal",
                                     description="Graph active-learning benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment matrix from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="override the config output_dir")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--seed-offset", type=int, default=0)

    p_abl = sub.add_parser("ablation", help="run raw-centrality and perturbation-count variants")
    p_abl.add_argument("--config", required=True)
    p_abl.add_argument("--out", default=None)
    p_abl.add_argument("--jobs", type=int, default=1)
    p_abl.add_argument("--seed-offset", type=int, default=0)

    p_gen = sub.add_parser("gen-synth", help="write a synthetic graph to disk")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--users-per-side", type=int, default=400)
    p_gen.add_argument("--assertions-per-side", type=int, default=250)
    p_gen.add_argument("--mean-posts-per-user", type=float, default=6.0)
    p_gen.add_argument("--in-side-probability", type=float, default=0.9)
    p_gen.add_argument("--seed", type=int, default=42)

    p_sc = sub.add_parser("scaling", help="selection-time scaling study for one metric")
    p_sc.add_argument("--sizes", required=True,
                      help="comma-separated target edge counts, e.g. 5000,20000,80000")
    p_sc.add_argument("--metric", choices=("pagerank", "betweenness"), required=True)
    p_sc.add_argument("--out", required=True, help="output CSV path")
    p_sc.add_argument("--budget", type=int, default=20)
    p_sc.add_argument("--batch-size", type=int, default=5)
    p_sc.add_argument("--epochs", type=int, default=50)
    p_sc.add_argument("--perturb", default="2,2,1",
                      help="edge-drop,edge-add,path-drop graph counts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config, args.out, args.jobs, args.seed_offset)
        if args.command == "ablation":
            return cmd_ablation(args.config, args.out, args.jobs, args.seed_offset)
        if args.command == "gen-synth":
            params = SyntheticParams(users_per_side=args.users_per_side,
                                     assertions_per_side=args.assertions_per_side,
                                     mean_posts_per_user=args.mean_posts_per_user,
                                     in_side_probability=args.in_side_probability,
                                     seed=args.seed)
            return cmd_gen_synth(params, args.out)
        if args.command == "scaling":
            sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
            perturb = tuple(int(x) for x in args.perturb.split(","))
            if len(perturb) != 3:
                raise ConfigError("perturb", "expected three comma-separated counts")
            return cmd_scaling(sizes, args.metric, args.out, args.budget,
                               args.batch_size, args.epochs, perturb)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
