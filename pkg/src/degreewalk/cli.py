"""Command-line front end.

Subcommands: walk, embed, eval nc, eval lp, bench, analyze scalefree,
fetch-instructions.  Exit codes: 0 success, 2 usage/input error, 1 internal
error.  DEGREEWALK_OUT sets the default output directory.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .embedding import TrainConfig, load_word2vec, train, save_word2vec, EmbeddingMatrix
from .evaluation import (EDGE_OPERATORS, EvalReport, classify_nodes,
                         make_link_split, predict_links_report,
                         report_csv_text, report_json_text)
from .graph import DegreewalkError, save_edge_list
from .scalefree import scalefree_rows
from .walks import (DegreeBased, Fixed, WalkConfig, generate_corpus,
                    load_corpus, total_walk_count)

logger = logging.getLogger(__name__)


def _out_dir():
    return Path(os.environ.get("DEGREEWALK_OUT", "."))


def _add_dataset_args(p):
    p.add_argument("--dataset", required=True,
                   help="edge-list path or the builtin name 'karate'")
    p.add_argument("--labels", help="label file (node token ... class token)")
    p.add_argument("--lcc", action=argparse.BooleanOptionalAction, default=True,
                   help="restrict to the largest connected component")


def _load_graph(args):
    return bench_mod.load_dataset(args.dataset, getattr(args, "labels", None), args.lcc)


def _strategy_from_args(args, parser):
    if args.strategy == "fixed":
        if args.walks_per_degree is not None:
            parser.error("--walks-per-degree applies to --strategy degree")
        return Fixed(args.walks_per_node if args.walks_per_node is not None else 20)
    if args.walks_per_node is not None:
        parser.error("--walks-per-node applies to --strategy fixed")
    return DegreeBased(args.walks_per_degree if args.walks_per_degree is not None else 5)


def cmd_walk(args, parser):
    g = _load_graph(args)
    strategy = _strategy_from_args(args, parser)
    cfg = WalkConfig(strategy=strategy, walk_length=args.walk_length,
                     p=args.p, q=args.q, seed=args.seed)
    t0 = time.perf_counter()
    corpus = generate_corpus(g, cfg, workers=args.workers)
    elapsed = 1e3 * (time.perf_counter() - t0)
    out = Path(args.output) if args.output else _out_dir() / "walks.txt"
    corpus.save(out, g.tokens)
    json.dump({"total_walks": len(corpus), "tokens": int(corpus.num_tokens),
               "elapsed_ms": round(elapsed, 1), "output": str(out)},
              sys.stdout)
    sys.stdout.write("\n")
    return 0


def cmd_embed(args, parser):
    corpus, tokens = load_corpus(args.corpus)
    cfg = TrainConfig(dimension=args.dim, window=args.window,
                      negatives=args.negatives, epochs=args.epochs,
                      learning_rate=args.lr, lr_floor=args.lr_floor,
                      seed=args.seed, shrink_window=not args.no_shrink,
                      workers=args.workers)
    emb = train(corpus, cfg)
    out = Path(args.output) if args.output else _out_dir() / "embedding.txt"
    save_word2vec(emb, tokens, out)
    json.dump({"nodes": len(emb), "dimension": emb.dimension, "output": str(out)},
              sys.stdout)
    sys.stdout.write("\n")
    return 0


def _load_embedding_for(graph, path):
    vectors, tokens = load_word2vec(path)
    node_ids = []
    rows = []
    for row, tok in enumerate(tokens):
        node = graph.token_ids.get(tok)
        if node is not None:
            node_ids.append(node)
            rows.append(row)
    if not node_ids:
        raise DegreewalkError(f"{path}: no embedding token matches the graph")
    order = np.argsort(node_ids)
    node_ids = np.array(node_ids, dtype=np.int32)[order]
    vectors = vectors[np.array(rows)[order]]
    return EmbeddingMatrix(vectors=vectors, context=np.zeros_like(vectors),
                           node_ids=node_ids)


def _emit_report(args, report):
    if args.format == "json":
        sys.stdout.write(report_json_text([report]) + "\n")
    else:
        sys.stdout.write(report_csv_text([report]))


def cmd_eval_nc(args, parser):
    g = _load_graph(args)
    if g.labels is None:
        raise DegreewalkError("node classification needs --labels (or builtin labels)")
    emb = _load_embedding_for(g, args.embedding)
    acc = classify_nodes(emb, g.labels, args.split_ratio, args.seed)
    report = EvalReport(task="nc", strategy=args.strategy_name, nwpd_or_fixed=0,
                        walk_length=0, total_walks=args.total_walks, accuracy=acc)
    _emit_report(args, report)
    return 0


def cmd_eval_lp(args, parser):
    g = _load_graph(args)
    split = make_link_split(g, args.test_fraction, args.seed)
    if args.write_train_edges:
        save_edge_list(split.train_graph, args.write_train_edges)
        json.dump({"train_edges": int(split.train_graph.num_edges),
                   "test_pos": len(split.test_pos), "test_neg": len(split.test_neg),
                   "output": str(args.write_train_edges)}, sys.stdout)
        sys.stdout.write("\n")
        if not args.embedding:
            return 0
    if not args.embedding:
        parser.error("--embedding is required unless --write-train-edges is used alone")
    emb = _load_embedding_for(g, args.embedding)
    acc, auc = predict_links_report(emb, split, args.operator, args.seed)
    report = EvalReport(task=f"lp-{args.operator}", strategy=args.strategy_name,
                        nwpd_or_fixed=0, walk_length=0,
                        total_walks=args.total_walks, accuracy=acc)
    _emit_report(args, report)
    sys.stderr.write(f"auc: {auc:.4f}\n")
    return 0


def cmd_bench(args, parser):
    plan = bench_mod.load_plan(args.plan)
    results = bench_mod.run_plan(plan, workers=args.workers)
    n_err = sum(1 for r in results if r["status"] != "ok")
    json.dump({"cells": len(results), "errors": n_err, "output": plan.output},
              sys.stdout)
    sys.stdout.write("\n")
    return 0


def cmd_analyze_scalefree(args, parser):
    if any(gm <= 1 for gm in args.gamma):
        parser.error("--gamma values must exceed 1")
    rows = scalefree_rows(args.gamma, args.kmin, args.n)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["N", "gamma", "k_min", "k_max_pred", "avg_k_finite",
                "avg_k_asymptotic", "tnw_per_nwpd", "log_form"])
    for r in rows:
        w.writerow([r["N"], r["gamma"], r["k_min"], f"{r['k_max_pred']:.6g}",
                    f"{r['avg_k_finite']:.6g}",
                    "" if r["avg_k_asymptotic"] is None else f"{r['avg_k_asymptotic']:.6g}",
                    f"{r['tnw_per_nwpd']:.6g}", int(r["log_form"])])
    return 0


FETCH_NOTES = """\
degreewalk does not download datasets.  Expected layouts:

karate          builtin; no files needed (34 nodes, 78 edges, 2 classes).

CORA            directory with:
                  cora.cites    edge list: '<cited> <citing>' per line
                  cora.content  '<paper> <1433 features> <class>' per line
                loads to 2,708 nodes / 5,429 edges / 7 classes;
                largest component: 2,485 nodes / 5,069 edges.

CiteSeer        directory with:
                  citeseer.cites
                  citeseer.content
                loads to 3,327 nodes / 4,732 edges / 6 classes;
                largest component: 2,110 nodes / 3,694 edges (after removing
                duplicate citations and self-citations).

Both citation datasets are distributed by the LINQS group
(https://linqs-data.soe.ucsc.edu/public/lbc/).  Verify a download by loading
it: `degreewalk walk --dataset <dir>/cora.cites ...` logs the node/edge
counts, which must match the numbers above.  Point the benchmark suite at
the files with DEGREEWALK_DATA=<directory holding cora/ and citeseer/>.
"""


def cmd_fetch_instructions(args, parser):
    sys.stdout.write(FETCH_NOTES)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="degreewalk",
        description="Degree-proportional random-walk scheduling for node embeddings.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("walk", help="generate a walk corpus")
    _add_dataset_args(p)
    p.add_argument("--strategy", choices=["fixed", "degree"], default="degree")
    p.add_argument("--walks-per-node", type=int, default=None)
    p.add_argument("--walks-per-degree", type=int, default=None)
    p.add_argument("--walk-length", type=int, default=30)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", help="corpus file (default $DEGREEWALK_OUT/walks.txt)")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("embed", help="train SGNS embeddings from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--lr-floor", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-shrink", action="store_true",
                   help="use the full window instead of a uniform shrink")
    p.add_argument("--workers", type=int, default=1,
                   help=">1 enables racy parallel training (nondeterministic)")
    p.add_argument("--output", help="embedding file (default $DEGREEWALK_OUT/embedding.txt)")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("eval", help="evaluate an embedding")
    esub = p.add_subparsers(dest="eval_task", required=True)

    pnc = esub.add_parser("nc", help="node classification accuracy")
    _add_dataset_args(pnc)
    pnc.add_argument("--embedding", required=True)
    pnc.add_argument("--split-ratio", type=float, default=0.8)
    pnc.add_argument("--seed", type=int, default=0)
    pnc.add_argument("--format", choices=["csv", "json"], default="csv")
    pnc.add_argument("--strategy-name", default="unknown")
    pnc.add_argument("--total-walks", type=int, default=0)
    pnc.set_defaults(func=cmd_eval_nc)

    plp = esub.add_parser("lp", help="link prediction accuracy")
    _add_dataset_args(plp)
    plp.add_argument("--embedding",
                     help="embedding trained on the pruned graph (see --write-train-edges)")
    plp.add_argument("--operator", choices=list(EDGE_OPERATORS), default="hadamard")
    plp.add_argument("--test-fraction", type=float, default=0.2)
    plp.add_argument("--seed", type=int, default=0)
    plp.add_argument("--write-train-edges",
                     help="write the pruned training edge list here (walk on this file)")
    plp.add_argument("--format", choices=["csv", "json"], default="csv")
    plp.add_argument("--strategy-name", default="unknown")
    plp.add_argument("--total-walks", type=int, default=0)
    plp.set_defaults(func=cmd_eval_lp)

    p = sub.add_parser("bench", help="run a benchmark plan file")
    p.add_argument("plan")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("analyze", help="analytic tools")
    asub = p.add_subparsers(dest="analyze_what", required=True)
    psf = asub.add_parser("scalefree", help="power-law degree predictions as CSV")
    psf.add_argument("--gamma", type=float, nargs="+", required=True)
    psf.add_argument("--kmin", type=float, default=1.0)
    psf.add_argument("--n", type=int, nargs="+", required=True)
    psf.set_defaults(func=cmd_analyze_scalefree)

    p = sub.add_parser("fetch-instructions",
                       help="how to obtain and verify the citation datasets")
    p.set_defaults(func=cmd_fetch_instructions)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args, parser)
    except (DegreewalkError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except Exception:
        logging.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
