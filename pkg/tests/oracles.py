"""Slow, definition-level reference implementations used as test oracles."""


def auc_pair_count(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def ap_summation(scores, labels):
    # walk the ranking one item at a time; ties keep input order
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    hits, total = 0, 0.0
    n_pos = sum(labels)
    for k, i in enumerate(order, start=1):
        if labels[i] == 1:
            hits += 1
            total += hits / k
    return total / n_pos


def accuracy_loop(scores, labels, t=0.5):
    return sum((s >= t) == (y == 1) for s, y in zip(scores, labels)) / len(scores)
