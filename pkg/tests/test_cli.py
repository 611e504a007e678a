import csv
import json

import pytest

from graphcomplete.cli import build_parser, main, resolve_config

SMALL = ["--sbm.n", "120", "--sbm.k", "4", "--sbm.p_in", "0.3"]


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "data"
    assert main(["sbm", "--seed", "1", "--out", str(out), *SMALL]) == 0
    return out


def run(*args):
    return main([str(a) for a in args])


def test_sbm_writes_dataset(dataset):
    meta = json.loads((dataset / "dataset.json").read_text())
    assert meta["num_nodes"] == 120 and meta["feature_dim"] == 4
    for name in ("edges.csv", "features.csv", "hidden_edges.csv"):
        assert (dataset / name).exists()


def test_stats_from_counts(capsys):
    assert run("stats", "--counts", "22912,290514,5420") == 0
    out = capsys.readouterr().out
    assert "23.65%" in out and "99.94%" in out


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"deal.embed_dim": 16, "deal.lr": 0.01, "seed": 5}))
    args = build_parser().parse_args(["train-inductive", "--config", str(cfg), "--deal.embed_dim", "8"])
    resolved = resolve_config(args)
    assert resolved["deal.embed_dim"] == 8 and resolved["deal.lr"] == 0.01 and resolved["seed"] == 5


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("stats", "--config", bad, "--counts", "1,0,1") != 0
    assert "malformed JSON" in capsys.readouterr().err
    bad.write_text(json.dumps({"deal.embed_dim": "wide"}))
    assert run("train-inductive", "--config", bad) != 0
    assert "deal.embed_dim" in capsys.readouterr().err
    assert run("train-inductive", "--out", tmp_path / "x") != 0
    assert "graph.edges" in capsys.readouterr().err


def test_feature_dimension_mismatch_is_reported(dataset, tmp_path, capsys):
    code = run("train-inductive", "--graph", dataset / "edges.csv", "--num-nodes", 120,
               "--features", dataset / "features.csv", "--feature-dim", 5, "--out", tmp_path / "x")
    assert code != 0
    assert "features.csv" in capsys.readouterr().err


def test_inductive_enrich_transductive_evaluate(dataset, tmp_path):
    d = tmp_path
    assert run("split", "--dataset", dataset, "--kind", "inductive", "--out", d / "isplit") == 0
    assert run("train-inductive", "--dataset", dataset, "--split", d / "isplit", "--deal.epochs", 20,
               "--deal.embed_dim", 8, "--deal.mlp_hidden", 16, "--out", d / "deal") == 0
    for name in ("model.bin", "history.csv", "metrics.json"):
        assert (d / "deal" / name).exists()
    assert run("enrich", "--dataset", dataset, "--model", d / "deal" / "model.bin", "--d-max", 5,
               "--p-min", 0.85, "--out", d / "enr") == 0
    rep = json.loads((d / "enr" / "report.json").read_text())
    assert rep["thresholds"]["d_max"] == 5
    with open(d / "enr" / "added_edges.csv") as fh:
        added = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    assert len(added) == rep["edges_added"]
    for kind in ("gcn", "sage"):
        assert run("train-transductive", "--dataset", dataset, "--kind", kind, "--gnn.epochs", 10,
                   "--gnn.hidden_dim", 8, "--gnn.out_dim", 4, "--out", d / kind) == 0
    assert run("evaluate", "--dataset", dataset, "--run", d / "gcn", "--run", d / "sage", "--out", d / "ev") == 0
    res = json.loads((d / "ev" / "metrics.json").read_text())["results"]
    assert [r["kind"] for r in res] == ["gcn", "sage"]
    again = json.loads((d / "gcn" / "metrics.json").read_text())
    assert res[0]["roc_auc"] == again["roc_auc"]


def test_enrich_missing_model(dataset, tmp_path, capsys):
    assert run("enrich", "--dataset", dataset, "--model", tmp_path / "none.bin", "--out", tmp_path / "x") != 0
    assert "none.bin" in capsys.readouterr().err


def test_search_is_deterministic(dataset, tmp_path):
    args = ["search", "--dataset", dataset, "--search.trials", 3, "--search.target", "gnn", "--gnn.epochs", 5,
            "--gnn.hidden_dim", 8]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    a, b = (tmp_path / "a" / "trials.csv").read_bytes(), (tmp_path / "b" / "trials.csv").read_bytes()
    assert a == b
    with open(tmp_path / "a" / "trials.csv") as fh:
        rows = list(csv.DictReader(fh))
    aucs = [float(r["val_auc"]) for r in rows]
    assert aucs == sorted(aucs, reverse=True) and [r["rank"] for r in rows] == ["1", "2", "3"]


def test_pipeline_rerun_identical(tmp_path, monkeypatch):
    monkeypatch.setenv("GRAPHCOMPLETE_THREADS", "1")
    args = ["pipeline", *SMALL, "--deal.epochs", 15, "--deal.embed_dim", 8, "--deal.mlp_hidden", 16,
            "--gnn.epochs", 8, "--gnn.hidden_dim", 8, "--gnn.out_dim", 4, "--pipeline.kinds", "gcn,gat"]
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    for name in ("metrics.json", "enriched_edges.csv", "added_edges.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    doc = json.loads((tmp_path / "a" / "metrics.json").read_text())
    assert set(doc["transductive"]) == {"gcn", "gat"}
