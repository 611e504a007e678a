"""How the two enrichment thresholds trade volume for quality.

One inductive model is trained once; the degree cap and the probability
floor are then swept. Quality is the share of added edges that stay inside
a block, which is what a compatible pair looks like in this generator.

    python demos/02_thresholds.py
"""

import numpy as np

from graphcomplete import DealConfig, EnrichConfig, SbmSpec, enrich_graph, sbm_generate, split_inductive, train_deal

data = sbm_generate(SbmSpec(seed=1))
g, X, blocks = data.graph, data.features, data.blocks
split = split_inductive(g, 0.1, 0.1, seed=1)
model, _ = train_deal(split.train_graph, X, DealConfig(seed=1), node_ids=split.train_nodes,
                      val=(split.val_pos, split.val_neg))

print(f"{'d_max':>5} {'p_min':>6} {'sources':>8} {'added':>7} {'intra':>7} {'zero-deg':>9}")
for d_max in (0, 2, 5, 20):
    for p_min in (0.6, 0.85, 0.99):
        _, rep = enrich_graph(g, model, X, EnrichConfig(d_max=d_max, p_min=p_min))
        a = rep.added_pairs
        intra = f"{np.mean(blocks[a[:, 0]] == blocks[a[:, 1]]):.1%}" if len(a) else "-"
        print(f"{d_max:>5} {p_min:>6.2f} {rep.sources_considered:>8} {rep.edges_added:>7} {intra:>7} "
              f"{rep.stats_before.num_zero_degree_nodes:>4} -> {rep.stats_after.num_zero_degree_nodes}")

# A per-source cap keeps the few most confident candidates instead of all of them.
_, capped = enrich_graph(g, model, X, EnrichConfig(d_max=5, p_min=0.6, c_max=3))
print(f"\nd_max=5, p_min=0.60, at most 3 per source: {capped.edges_added} edges added")
