"""Link prediction with graph enrichment for sparse item-compatibility graphs.

A dual-encoder inductive model scores pairs from node attributes, confident
predictions are added around low-degree nodes, and GCN, GraphSAGE or GAT
link predictors are then trained on the denser graph.
"""

from .deal import DealConfig, DealModel, evaluate_deal, link_probability, load_deal, save_deal, train_deal
from .enrich import PRESETS, EnrichConfig, EnrichReport, enrich_graph
from .evalkit import accuracy, average_precision, binary_metrics, roc_auc
from .gnn import GnnConfig, GnnModel, evaluate, load_gnn, save_gnn, train_gnn
from .graphstore import FeatureMatrix, Graph, GraphError, GraphStats, load_features, load_graph, stats
from .pipeline import PipelineConfig, run_pipeline
from .sbm import SbmData, SbmSpec, sbm_generate
from .splitkit import NegativeSampler, sample_negatives, split_inductive, split_transductive

__version__ = "0.1.0"

__all__ = [
    "DealConfig", "DealModel", "evaluate_deal", "link_probability", "load_deal", "save_deal", "train_deal",
    "PRESETS", "EnrichConfig", "EnrichReport", "enrich_graph",
    "accuracy", "average_precision", "binary_metrics", "roc_auc",
    "GnnConfig", "GnnModel", "evaluate", "load_gnn", "save_gnn", "train_gnn",
    "FeatureMatrix", "Graph", "GraphError", "GraphStats", "load_features", "load_graph", "stats",
    "PipelineConfig", "run_pipeline",
    "SbmData", "SbmSpec", "sbm_generate",
    "NegativeSampler", "sample_negatives", "split_inductive", "split_transductive",
]
