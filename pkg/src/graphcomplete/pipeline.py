"""The three-step process: inductive training, enrichment, transductive training.

``run_pipeline`` trains the inductive model on a node-basis split of the
original graph, enriches the original graph with it, then trains every
requested GNN kind on the original and on the enriched structure.

Two comparisons are reported per GNN kind:

``shared``
    One edge-basis split of the *original* graph. The enriched run trains
    on that split's training graph plus the added edges and is tested on
    the same fixed test pairs as the original run.
``own``
    Each graph is split independently with the same seed and fractions,
    so the enriched test set also contains added edges.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .deal import DealConfig, evaluate_deal, save_deal, train_deal
from .enrich import EnrichConfig, enrich_graph, enrich_report_format
from .gnn import GnnConfig, evaluate, save_gnn, train_gnn
from .graphstore import FeatureMatrix, Graph, save_graph, write_pairs
from .splitkit import TransductiveSplit, save_split, split_inductive, split_transductive

log = logging.getLogger(__name__)

__all__ = ["PipelineConfig", "enriched_shared_split", "run_pipeline", "write_history"]


@dataclass
class PipelineConfig:
    seed: int = 0
    inductive_val_frac: float = 0.1
    inductive_test_frac: float = 0.1
    val_frac: float = 0.05
    test_frac: float = 0.10
    kinds: tuple = ("gcn", "sage", "gat")
    deal: DealConfig = field(default_factory=DealConfig)
    gnn: GnnConfig = field(default_factory=GnnConfig)
    enrich: EnrichConfig = field(default_factory=EnrichConfig)


def enriched_shared_split(base: TransductiveSplit, added_pairs) -> TransductiveSplit:
    """Same evaluation pairs as ``base``; training graph and positives gain ``added_pairs``."""
    added = np.asarray(added_pairs, dtype=np.int64).reshape(-1, 2)
    train_pos = np.concatenate([base.train_pos, added]) if len(added) else base.train_pos
    g = Graph(base.train_graph.num_nodes, train_pos)
    return TransductiveSplit(g, g.pairs(), base.val_pos, base.val_neg, base.test_pos, base.test_neg,
                             base.seed, base.val_frac, base.test_frac)


def write_history(history, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,loss,val_auc\n")
        for r in history:
            fh.write(f"{r['epoch']},{r['loss']!r},{r['val_auc']!r}\n")


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return None if not np.isfinite(x) else float(x)
    return x


def dump_json(obj, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n")


def run_pipeline(g: Graph, X: FeatureMatrix, cfg: PipelineConfig, out_dir=None) -> dict:
    """Run all three steps; returns the metrics document (also written when ``out_dir`` is set)."""
    out = Path(out_dir) if out_dir is not None else None
    s = cfg.seed

    ind = split_inductive(g, cfg.inductive_val_frac, cfg.inductive_test_frac, seed=s)
    model, hist = train_deal(ind.train_graph, X, cfg.deal, node_ids=ind.train_nodes,
                             val=(ind.val_pos, ind.val_neg))
    deal_metrics = evaluate_deal(model, X, ind.test_pos, ind.test_neg, ind)
    log.info("inductive test ROC-AUC %.4f", deal_metrics["roc_auc"])

    g_enr, report = enrich_graph(g, model, X, cfg.enrich)
    log.info("enrichment added %d edges", report.edges_added)

    base = split_transductive(g, cfg.val_frac, cfg.test_frac, seed=s)
    shared_enr = enriched_shared_split(base, report.added_pairs)
    own_enr = split_transductive(g_enr, cfg.val_frac, cfg.test_frac, seed=s) if g_enr.num_edges >= 10 else base

    results = {}
    for kind in cfg.kinds:
        gcfg = GnnConfig(**{**asdict(cfg.gnn), "kind": kind})
        runs = {"original": base, "enriched_shared": shared_enr, "enriched_own": own_enr}
        res = {}
        for name, sp in runs.items():
            m, h = train_gnn(sp, X, gcfg)
            res[name] = evaluate(m, sp, X)
            if out is not None:
                save_gnn(m, out / kind / name / "model.bin")
                write_history(h, out / kind / name / "history.csv")
        res["delta_shared"] = res["enriched_shared"]["roc_auc"] - res["original"]["roc_auc"]
        res["delta_own"] = res["enriched_own"]["roc_auc"] - res["original"]["roc_auc"]
        results[kind] = res
        log.info("%s original %.4f shared %.4f own %.4f", kind, res["original"]["roc_auc"],
                 res["enriched_shared"]["roc_auc"], res["enriched_own"]["roc_auc"])

    doc = {
        "seed": s,
        "inductive": deal_metrics,
        "enrichment": report.as_dict(),
        "transductive": results,
        "split_sizes": {
            "inductive": {"train_nodes": int(ind.train_nodes.size), "val_pos": len(ind.val_pos),
                          "test_pos": len(ind.test_pos)},
            "transductive": {"train": len(base.train_pos), "val": len(base.val_pos), "test": len(base.test_pos)},
        },
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        save_deal(model, out / "deal" / "model.bin")
        write_history(hist, out / "deal" / "history.csv")
        save_split(ind, out / "deal" / "split")
        save_split(base, out / "split")
        save_graph(g_enr, out / "enriched_edges.csv")
        write_pairs(out / "added_edges.csv", report.added_pairs)
        text, js = enrich_report_format(report)
        (out / "report.json").write_text(js + "\n")
        (out / "report.txt").write_text(text + "\n")
        dump_json(doc, out / "metrics.json")
    return doc
