"""Command-line entry point: ``graphcomplete <command> [options]``.

Configuration is a flat JSON object with dotted keys (``"deal.embed_dim":
32``). Every key can also be given as a flag (``--deal.embed_dim 32``);
flags win over the file, the file wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .deal import DealConfig, evaluate_deal, load_deal, save_deal, train_deal
from .enrich import PRESETS, EnrichConfig, enrich_graph, enrich_report_format
from .gnn import GnnConfig, evaluate, load_gnn, save_gnn, train_gnn
from .graphstore import (GraphError, load_features, load_graph, save_features, save_graph, stats,
                         stats_from_counts, write_pairs)
from .pipeline import PipelineConfig, dump_json, run_pipeline, write_history
from .sbm import SbmSpec, sbm_generate
from .search import random_search, write_trials
from .splitkit import load_split, save_split, split_inductive, split_transductive

log = logging.getLogger("graphcomplete")


class ConfigError(ValueError):
    pass


def _section(prefix: str, cls, skip=("seed",)) -> dict:
    out = {}
    for f in fields(cls):
        if f.name in skip:
            continue
        base = str(f.type).split("|")[0].strip()
        typ = {"int": int, "float": float, "str": str, "bool": bool}.get(base)
        if typ is None:
            continue
        out[f"{prefix}.{f.name}"] = (typ, f.default)
    return out


# key -> (type, default)
KEYS: dict[str, tuple] = {
    "seed": (int, 0),
    "dataset": (str, None),
    "graph.edges": (str, None),
    "graph.num_nodes": (int, None),
    "graph.features": (str, None),
    "graph.feature_dim": (int, None),
    "graph.features_binary": (bool, False),
    "split.kind": (str, "transductive"),
    "split.val_frac": (float, 0.05),
    "split.test_frac": (float, 0.10),
    "split.inductive_val_frac": (float, 0.1),
    "split.inductive_test_frac": (float, 0.1),
    **_section("deal", DealConfig),
    **_section("gnn", GnnConfig),
    "enrich.preset": (str, None),
    **_section("enrich", EnrichConfig, skip=()),
    **_section("sbm", SbmSpec),
    "search.target": (str, "deal"),
    "search.trials": (int, 10),
    "search.space": (str, None),
    "pipeline.kinds": (str, "gcn,sage,gat"),
}

# friendly aliases used in the docs
ALIASES = {
    "graph": "graph.edges",
    "features": "graph.features",
    "num-nodes": "graph.num_nodes",
    "feature-dim": "graph.feature_dim",
    "d-max": "enrich.d_max",
    "p-min": "enrich.p_min",
    "c-max": "enrich.c_max",
    "kind": None,  # per command
}

SECTIONS = {
    "sbm": ["sbm"],
    "stats": ["graph"],
    "split": ["graph", "split"],
    "train-inductive": ["graph", "split", "deal"],
    "enrich": ["graph", "enrich"],
    "train-transductive": ["graph", "split", "gnn"],
    "evaluate": ["graph"],
    "search": ["graph", "split", "deal", "gnn", "search"],
    "pipeline": ["graph", "split", "deal", "gnn", "enrich", "sbm", "pipeline"],
}


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _coerce(key: str, value):
    typ, _ = KEYS[key]
    if value is None:
        return None
    try:
        if typ is bool:
            return value if isinstance(value, bool) else _parse_bool(value)
        if typ is int and isinstance(value, float) and not value.is_integer():
            raise ValueError
        return typ(value)
    except (ValueError, TypeError, argparse.ArgumentTypeError):
        raise ConfigError(f"config key {key!r}: cannot interpret {value!r} as {typ.__name__}") from None


def resolve_config(args) -> dict:
    cfg = {k: d for k, (_, d) in KEYS.items()}
    if args.config:
        path = Path(args.config)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a flat JSON object")
        for k, v in data.items():
            if k not in KEYS:
                raise ConfigError(f"{path}: unknown config key {k!r}")
            cfg[k] = _coerce(k, v)
    dataset = getattr(args, "dataset", None) or cfg.get("dataset")
    if dataset:
        meta_path = Path(dataset) / "dataset.json"
        if not meta_path.exists():
            raise ConfigError(f"dataset directory {dataset} has no dataset.json")
        meta = json.loads(meta_path.read_text())
        cfg["graph.edges"] = str(Path(dataset) / "edges.csv")
        cfg["graph.features"] = str(Path(dataset) / "features.csv")
        cfg["graph.num_nodes"] = meta["num_nodes"]
        cfg["graph.feature_dim"] = meta["feature_dim"]
    for k, v in vars(args).items():
        key = k.replace("__", ".")
        if key in KEYS and v is not None and key != "dataset":
            cfg[key] = _coerce(key, v)
    if cfg["enrich.preset"]:
        name = cfg["enrich.preset"].lower()
        if name not in PRESETS:
            raise ConfigError(f"unknown enrich.preset {name!r}; choose from {sorted(PRESETS)}")
        d_max, p_min = PRESETS[name]
        if getattr(args, "enrich__d_max", None) is None:
            cfg["enrich.d_max"] = d_max
        if getattr(args, "enrich__p_min", None) is None:
            cfg["enrich.p_min"] = p_min
    return cfg


def _build(cls, cfg: dict, prefix: str, seed_key: str | None = "seed"):
    kw = {f.name: cfg[f"{prefix}.{f.name}"] for f in fields(cls) if f"{prefix}.{f.name}" in cfg}
    if seed_key is not None and "seed" in {f.name for f in fields(cls)}:
        kw["seed"] = cfg[seed_key]
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {prefix} settings: {exc}") from None


def _need(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) in (None, "")]
    if missing:
        flags = ", ".join(f"--{k}" for k in missing)
        raise ConfigError(f"missing required setting(s): {', '.join(missing)} (use {flags} or --dataset)")


def _load_inputs(cfg: dict, need_features: bool = True):
    _need(cfg, "graph.edges", "graph.num_nodes")
    for key in ("graph.edges",) + (("graph.features",) if need_features else ()):
        if cfg.get(key) and not Path(cfg[key]).exists():
            raise ConfigError(f"{key}: file {cfg[key]} does not exist")
    g = load_graph(cfg["graph.edges"], cfg["graph.num_nodes"])
    X = None
    if need_features:
        _need(cfg, "graph.features", "graph.feature_dim")
        X = load_features(cfg["graph.features"], cfg["graph.num_nodes"], cfg["graph.feature_dim"],
                          binary=cfg["graph.features_binary"])
    return g, X


def _out(args) -> Path:
    if not args.out:
        raise ConfigError("--out DIR is required for this command")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_sbm(args, cfg):
    spec = _build(SbmSpec, cfg, "sbm")
    data = sbm_generate(spec)
    out = _out(args)
    save_graph(data.graph, out / "edges.csv")
    save_features(data.features, out / "features.csv")
    write_pairs(out / "hidden_edges.csv", data.hidden)
    np.savetxt(out / "blocks.csv", data.blocks, fmt="%d")
    meta = {"num_nodes": spec.n, "feature_dim": spec.feature_dim, "sbm": asdict(spec),
            "num_edges": data.graph.num_edges, "num_hidden": len(data.hidden)}
    dump_json(meta, out / "dataset.json")
    print(f"wrote SBM graph with {spec.n} nodes, {data.graph.num_edges} edges "
          f"({len(data.hidden)} hidden) to {out}")


def cmd_stats(args, cfg):
    if args.counts:
        try:
            n, r, z = (int(x) for x in args.counts.split(","))
        except ValueError:
            raise ConfigError("--counts expects NODES,EDGE_RECORDS,ZERO_DEGREE") from None
        st = stats_from_counts(n, r, z)
    else:
        g, _ = _load_inputs(cfg, need_features=False)
        st = stats(g)
    for name, value in st.rows():
        print(f"{name:<34}{value:>14}")
    if args.out:
        dump_json(st.as_dict(), _out(args) / "stats.json")


def cmd_split(args, cfg):
    g, _ = _load_inputs(cfg, need_features=False)
    if cfg["split.kind"] == "inductive":
        sp = split_inductive(g, cfg["split.inductive_val_frac"], cfg["split.inductive_test_frac"], cfg["seed"])
    elif cfg["split.kind"] == "transductive":
        sp = split_transductive(g, cfg["split.val_frac"], cfg["split.test_frac"], cfg["seed"])
    else:
        raise ConfigError(f"split.kind must be 'inductive' or 'transductive', got {cfg['split.kind']!r}")
    save_split(sp, _out(args))
    print(f"wrote {sp.kind} split: {len(sp.val_pos)} val / {len(sp.test_pos)} test positives")


def cmd_train_inductive(args, cfg):
    g, X = _load_inputs(cfg)
    out = _out(args)
    if args.split:
        sp = load_split(args.split)
        if sp.kind != "inductive":
            raise ConfigError(f"{args.split}: expected an inductive split, found {sp.kind}")
    else:
        sp = split_inductive(g, cfg["split.inductive_val_frac"], cfg["split.inductive_test_frac"], cfg["seed"])
        save_split(sp, out / "split")
    dcfg = _build(DealConfig, cfg, "deal")
    model, hist = train_deal(sp.train_graph, X, dcfg, node_ids=sp.train_nodes, val=(sp.val_pos, sp.val_neg))
    save_deal(model, out / "model.bin")
    write_history(hist, out / "history.csv")
    metrics = {"test": evaluate_deal(model, X, sp.test_pos, sp.test_neg, sp), "seed": cfg["seed"],
               "split_sizes": {"train_nodes": int(sp.train_nodes.size), "val_pos": len(sp.val_pos),
                               "test_pos": len(sp.test_pos)}}
    if len(sp.val_pos) and len(sp.val_neg):
        metrics["val"] = evaluate_deal(model, X, sp.val_pos, sp.val_neg, sp, which="val")
    dump_json(metrics, out / "metrics.json")
    print(f"inductive test ROC-AUC {metrics['test']['roc_auc']:.4f}, AP {metrics['test']['ap']:.4f}")


def cmd_enrich(args, cfg):
    if not args.model:
        raise ConfigError("--model PATH is required")
    if not Path(args.model).exists():
        raise ConfigError(f"model checkpoint {args.model} does not exist")
    g, X = _load_inputs(cfg)
    model = load_deal(args.model)
    ecfg = _build(EnrichConfig, cfg, "enrich", seed_key=None)
    g2, report = enrich_graph(g, model, X, ecfg)
    out = _out(args)
    save_graph(g2, out / "enriched_edges.csv")
    write_pairs(out / "added_edges.csv", report.added_pairs)
    text, js = enrich_report_format(report)
    (out / "report.json").write_text(js + "\n")
    print(text)


def cmd_train_transductive(args, cfg):
    g, X = _load_inputs(cfg)
    out = _out(args)
    if args.split:
        sp = load_split(args.split)
        if sp.kind != "transductive":
            raise ConfigError(f"{args.split}: expected a transductive split, found {sp.kind}")
    else:
        sp = split_transductive(g, cfg["split.val_frac"], cfg["split.test_frac"], cfg["seed"])
    save_split(sp, out / "split")
    gcfg = _build(GnnConfig, cfg, "gnn")
    model, hist = train_gnn(sp, X, gcfg)
    save_gnn(model, out / "model.bin")
    write_history(hist, out / "history.csv")
    metrics = {**evaluate(model, sp, X), "seed": cfg["seed"], "kind": gcfg.kind,
               "split_sizes": {"train": len(sp.train_pos), "val": len(sp.val_pos), "test": len(sp.test_pos)}}
    dump_json(metrics, out / "metrics.json")
    print(f"{gcfg.kind} test ROC-AUC {metrics['roc_auc']:.4f}, AP {metrics['ap']:.4f}, "
          f"accuracy {metrics['accuracy']:.4f}")


def cmd_evaluate(args, cfg):
    runs = list(args.run or [])
    if args.model:
        if not args.split:
            raise ConfigError("--model needs --split DIR")
        runs.append((args.model, args.split))
    if not runs:
        raise ConfigError("give at least one --run DIR or --model PATH --split DIR")
    _need(cfg, "graph.features", "graph.num_nodes", "graph.feature_dim")
    X = load_features(cfg["graph.features"], cfg["graph.num_nodes"], cfg["graph.feature_dim"],
                      binary=cfg["graph.features_binary"])
    results = []
    for run in runs:
        model_path, split_dir = (Path(run) / "model.bin", Path(run) / "split") if isinstance(run, str) else run
        if not Path(model_path).exists():
            raise ConfigError(f"model checkpoint {model_path} does not exist")
        model, sp = load_gnn(model_path), load_split(split_dir)
        res = {"run": str(run if isinstance(run, str) else model_path), "kind": model.config.kind,
               **evaluate(model, sp, X)}
        results.append(res)
        print(f"{res['run']:<40} {res['kind']:<5} acc {res['accuracy']:.4f}  "
              f"roc_auc {res['roc_auc']:.4f}  ap {res['ap']:.4f}")
    if args.out:
        dump_json({"results": results}, _out(args) / "metrics.json")


def cmd_search(args, cfg):
    g, X = _load_inputs(cfg)
    target = cfg["search.target"]
    space = json.loads(cfg["search.space"]) if cfg["search.space"] else None
    if target == "deal":
        base = _build(DealConfig, cfg, "deal")
        fracs = (cfg["split.inductive_val_frac"], cfg["split.inductive_test_frac"])
    elif target == "gnn":
        base = _build(GnnConfig, cfg, "gnn")
        fracs = (cfg["split.val_frac"], cfg["split.test_frac"])
    else:
        raise ConfigError(f"search.target must be 'deal' or 'gnn', got {target!r}")
    rows = random_search(g, X, target, base, cfg["search.trials"], cfg["seed"], space, *fracs)
    out = _out(args)
    write_trials(rows, out / "trials.csv")
    best = rows[0]
    print(f"best trial {best['trial']}: val ROC-AUC {best['val_auc']:.4f} "
          f"({', '.join(f'{k}={best[k]}' for k in best if k not in ('trial', 'rank', 'val_auc', 'test_auc'))})")


def cmd_pipeline(args, cfg):
    out = _out(args)
    if cfg.get("graph.edges"):
        g, X = _load_inputs(cfg)
    else:
        data = sbm_generate(_build(SbmSpec, cfg, "sbm"))
        g, X = data.graph, data.features
        save_graph(g, out / "original_edges.csv")
    kinds = tuple(k.strip() for k in cfg["pipeline.kinds"].split(",") if k.strip())
    pcfg = PipelineConfig(
        seed=cfg["seed"],
        inductive_val_frac=cfg["split.inductive_val_frac"],
        inductive_test_frac=cfg["split.inductive_test_frac"],
        val_frac=cfg["split.val_frac"],
        test_frac=cfg["split.test_frac"],
        kinds=kinds,
        deal=_build(DealConfig, cfg, "deal"),
        gnn=_build(GnnConfig, cfg, "gnn"),
        enrich=_build(EnrichConfig, cfg, "enrich", seed_key=None),
    )
    doc = run_pipeline(g, X, pcfg, out)
    print((out / "report.txt").read_text())
    for kind, r in doc["transductive"].items():
        print(f"{kind:<5} original {r['original']['roc_auc']:.4f}  enriched(shared split) "
              f"{r['enriched_shared']['roc_auc']:.4f}  enriched(own split) {r['enriched_own']['roc_auc']:.4f}")


COMMANDS = {
    "sbm": (cmd_sbm, "generate a synthetic block-model graph with features"),
    "stats": (cmd_stats, "print node/edge/zero-degree/sparsity statistics"),
    "split": (cmd_split, "write an inductive or transductive split"),
    "train-inductive": (cmd_train_inductive, "train the dual-encoder inductive model"),
    "enrich": (cmd_enrich, "add high-confidence edges with a trained inductive model"),
    "train-transductive": (cmd_train_transductive, "train a GCN/SAGE/GAT link predictor"),
    "evaluate": (cmd_evaluate, "evaluate trained transductive runs on their fixed test pairs"),
    "search": (cmd_search, "seeded random hyperparameter search"),
    "pipeline": (cmd_pipeline, "inductive training, enrichment and transductive comparison"),
}


def _add_key_flag(p, key: str) -> None:
    typ, default = KEYS[key]
    dest = key.replace(".", "__")
    kw = {"dest": dest, "default": None, "help": f"(default: {default})"}
    kw["type"] = _parse_bool if typ is bool else typ
    names = [f"--{key}"]
    names += [f"--{alias}" for alias, target in ALIASES.items() if target == key]
    p.add_argument(*names, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphcomplete", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat JSON config with dotted keys")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output directory")
        p.add_argument("--dataset", help="directory written by the sbm command")
        for key in KEYS:
            section = key.split(".")[0]
            if "." in key and section in SECTIONS[name]:
                _add_key_flag(p, key)
        if name in ("enrich", "evaluate"):
            p.add_argument("--model", help="model checkpoint (model.bin)")
        if name in ("train-inductive", "train-transductive", "evaluate"):
            p.add_argument("--split", help="split directory to reuse")
        if name == "evaluate":
            p.add_argument("--run", action="append", help="run directory with model.bin and split/")
        if name == "stats":
            p.add_argument("--counts", help="NODES,EDGE_RECORDS,ZERO_DEGREE instead of a graph file")
        if name == "train-transductive":
            p.add_argument("--kind", dest="gnn__kind", choices=["gcn", "sage", "gat"])
        if name == "split":
            p.add_argument("--kind", dest="split__kind", choices=["inductive", "transductive"])
        if name == "enrich":
            p.add_argument("--preset", dest="enrich__preset", choices=sorted(PRESETS))
    return parser


def _limit_threads():
    n = os.environ.get("GRAPHCOMPLETE_THREADS")
    if not n:
        return None
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    limiter = _limit_threads()
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command][0](args, cfg)
    except (ConfigError, GraphError, ValueError, KeyError, FloatingPointError, OSError) as exc:
        print(f"graphcomplete {args.command}: error: {exc}", file=sys.stderr)
        return 2
    finally:
        if limiter is not None:
            limiter.unregister()
    return 0


if __name__ == "__main__":
    sys.exit(main())
