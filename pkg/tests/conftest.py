import itertools
import sys

import numpy as np
import pytest
from hypothesis import settings

from graphcomplete.graphstore import FeatureMatrix, Graph

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


def gnp(n, p, seed):
    """Erdos-Renyi graph from a seeded generator."""
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    return Graph(n, pairs)


def pair_set(pairs):
    return {(min(int(u), int(v)), max(int(u), int(v))) for u, v in np.asarray(pairs).reshape(-1, 2)}


def two_block(n, seed, p_in=0.5, p_out=0.02, noise=0.1):
    """Two planted blocks with noisy indicator features."""
    rng = np.random.default_rng(seed)
    blocks = np.arange(n) * 2 // n
    pairs = [(i, j) for i, j in itertools.combinations(range(n), 2)
             if rng.random() < (p_in if blocks[i] == blocks[j] else p_out)]
    X = np.eye(2)[blocks] + noise * rng.standard_normal((n, 2))
    return Graph(n, pairs), FeatureMatrix(X), blocks


@pytest.fixture
def triangle():
    return Graph(3, [(0, 1), (1, 2), (0, 2)])


def random_enrich_case(seed):
    """A random (graph, untrained-or-briefly-trained model, features, thresholds) instance."""
    from graphcomplete.deal import DealConfig, init_deal, train_deal

    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 40))
    g = gnp(n, float(rng.uniform(0.02, 0.3)), seed)
    dim = int(rng.integers(2, 6))
    X = FeatureMatrix(rng.standard_normal((n, dim)))
    cfg = DealConfig(encoder_kind=("mlp", "embedding")[seed % 2], embed_dim=4, mlp_hidden=8, seed=seed,
                     epochs=int(rng.integers(0, 15)), w_cross=float(rng.choice([0.0, 0.5])))
    if g.num_edges and cfg.epochs:
        m, _ = train_deal(g, X, cfg)
    else:
        m = init_deal(cfg, dim, np.arange(n))
        m.params["calib.c"][0, 0] = float(rng.uniform(-2, 2))
    d_max = int(rng.integers(0, 6))
    p_min = float(rng.uniform(0.3, 0.99))
    return g, m, X, d_max, p_min


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
