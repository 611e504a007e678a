"""Seeded random hyperparameter search ranked by validation ROC-AUC."""

from __future__ import annotations

import csv
from dataclasses import replace
from pathlib import Path

import numpy as np

from .deal import evaluate_deal, train_deal
from .gnn import evaluate, train_gnn
from .graphstore import FeatureMatrix, Graph
from .splitkit import split_inductive, split_transductive

__all__ = ["DEFAULT_SPACES", "sample_trials", "random_search", "write_trials"]

DEFAULT_SPACES = {
    "deal": {
        "lr": [1e-3, 5e-3, 1e-2],
        "embed_dim": [32, 64, 128],
        "lambda_align": [0.1, 1.0],
        "theta_r": [5.0, 10.0],
    },
    "gnn": {
        "lr": [1e-3, 5e-3, 1e-2],
        "out_dim": [32, 64, 128],
    },
}


def sample_trials(space: dict, trials: int, seed: int) -> list[dict]:
    """Draw ``trials`` settings, one value per key, in a seed-determined order."""
    rng = np.random.default_rng(seed)
    keys = sorted(space)
    out = []
    for _ in range(trials):
        out.append({k: space[k][int(rng.integers(len(space[k])))] for k in keys})
    return out


def random_search(g: Graph, X: FeatureMatrix, target: str, base, trials: int = 10, seed: int = 0,
                  space: dict | None = None, val_frac: float | None = None,
                  test_frac: float | None = None) -> list[dict]:
    """Train one model per sampled setting; rows come back best first.

    ``target`` is ``"deal"`` (node-basis split) or ``"gnn"`` (edge-basis
    split). Every trial shares the same split, drawn from ``seed``.
    """
    if target not in DEFAULT_SPACES:
        raise ValueError(f"target must be 'deal' or 'gnn', got {target!r}")
    space = DEFAULT_SPACES[target] if space is None else space
    settings = sample_trials(space, trials, seed)
    rows = []
    if target == "deal":
        split = split_inductive(g, val_frac or 0.1, test_frac or 0.1, seed=seed)
        for i, params in enumerate(settings):
            cfg = replace(base, **params)
            m, hist = train_deal(split.train_graph, X, cfg, node_ids=split.train_nodes,
                                 val=(split.val_pos, split.val_neg))
            best = max((h["val_auc"] for h in hist if np.isfinite(h["val_auc"])), default=float("nan"))
            test = evaluate_deal(m, X, split.test_pos, split.test_neg)["roc_auc"]
            rows.append({"trial": i, **params, "val_auc": best, "test_auc": test})
    else:
        split = split_transductive(g, val_frac or 0.05, test_frac or 0.10, seed=seed)
        for i, params in enumerate(settings):
            cfg = replace(base, **params)
            m, hist = train_gnn(split, X, cfg)
            best = max((h["val_auc"] for h in hist if np.isfinite(h["val_auc"])), default=float("nan"))
            rows.append({"trial": i, **params, "val_auc": best, "test_auc": evaluate(m, split, X)["roc_auc"]})
    rows.sort(key=lambda r: (-r["val_auc"], r["trial"]))
    for rank, r in enumerate(rows, start=1):
        r["rank"] = rank
    return rows


def write_trials(rows: list[dict], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fields = ["rank", "trial"] + [k for k in rows[0] if k not in ("rank", "trial")] if rows else ["rank"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
