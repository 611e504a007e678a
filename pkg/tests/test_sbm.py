import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import pair_set
from graphcomplete.graphstore import GraphError
from graphcomplete.sbm import SbmSpec, sbm_generate


def test_two_disjoint_cliques():
    d = sbm_generate(SbmSpec(n=10, k=2, p_in=1.0, p_out=0.0, hide_frac=0.0))
    expect = {(i, j) for i in range(10) for j in range(i + 1, 10) if i // 5 == j // 5}
    assert pair_set(d.graph.pairs()) == expect and len(d.hidden) == 0


def test_hide_everything_intra():
    spec = SbmSpec(n=60, k=3, p_in=0.5, p_out=0.05, hide_frac=1.0, sparse_frac=1.0, hide_scope="intra", seed=2)
    d = sbm_generate(spec)
    blocks = d.blocks
    assert all(blocks[u] == blocks[v] for u, v in d.hidden.tolist())
    assert all(blocks[u] != blocks[v] for u, v in d.graph.pairs().tolist())
    # visible plus hidden is the untouched draw with hiding switched off
    full = sbm_generate(SbmSpec(n=60, k=3, p_in=0.5, p_out=0.05, hide_frac=0.0, sparse_frac=1.0, seed=2))
    assert pair_set(d.hidden) | pair_set(d.graph.pairs()) == pair_set(full.graph.pairs())


def test_hide_everything_all_scope_is_empty():
    with pytest.raises(GraphError, match="without visible edges"):
        sbm_generate(SbmSpec(n=40, k=2, hide_frac=1.0, sparse_frac=1.0))


def test_block_densities_within_three_sigma():
    spec = SbmSpec(n=400, k=8, p_in=0.15, p_out=0.01, seed=11)
    d = sbm_generate(spec)
    pairs = np.concatenate([d.graph.pairs(), d.hidden])
    same = d.blocks[pairs[:, 0]] == d.blocks[pairs[:, 1]]
    sizes = np.bincount(d.blocks)
    n_intra = int(np.sum(sizes * (sizes - 1) // 2))
    n_inter = 400 * 399 // 2 - n_intra
    for count, trials, p in ((same.sum(), n_intra, 0.15), ((~same).sum(), n_inter, 0.01)):
        assert abs(count - trials * p) <= 3 * np.sqrt(trials * p * (1 - p))


def test_hidden_edges_touch_sparse_nodes():
    d = sbm_generate(SbmSpec(seed=4))
    sparse = set(d.sparse_nodes.tolist())
    assert len(sparse) == 120
    assert all(u in sparse or v in sparse for u, v in d.hidden.tolist())
    assert not pair_set(d.hidden) & pair_set(d.graph.pairs())


def test_features_are_noisy_block_indicators():
    d = sbm_generate(SbmSpec(n=80, k=4, feature_dim=6, feature_noise=0.0))
    X = d.features.values
    assert X.shape == (80, 6)
    assert np.array_equal(X[:, :4], np.eye(4)[d.blocks]) and np.all(X[:, 4:] == 0)


@given(st.integers(0, 1000))
def test_deterministic(seed):
    a, b = sbm_generate(SbmSpec(n=50, k=2, seed=seed)), sbm_generate(SbmSpec(n=50, k=2, seed=seed))
    assert a.graph == b.graph and np.array_equal(a.hidden, b.hidden)
    assert np.array_equal(a.features.values, b.features.values)


@pytest.mark.parametrize("kw", [{"p_in": 0.1, "p_out": 0.2}, {"hide_frac": 1.5}, {"sparse_frac": -0.1},
                                {"feature_dim": 2, "k": 4}, {"hide_scope": "inter"}])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        SbmSpec(**kw)
