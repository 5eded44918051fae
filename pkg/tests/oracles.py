"""Independent reference implementations used as test oracles."""

import itertools
from functools import lru_cache

import numpy as np

from entrel.evaluation import evaluate, structure_items

TYPES = ["PER", "ORG", "LOC"]
RELS = ["P1", "P2"]


def levenshtein_oracle(a, b):
    """Recursive definition, memoised."""

    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


def reference_complete_linkage(sim, threshold):
    """Naive agglomeration: recompute every linkage from the raw matrix at each step."""
    clusters = [frozenset([i]) for i in range(len(sim))]
    while True:
        best = None
        for a, b in itertools.combinations(clusters, 2):
            link = min(sim[i][j] for i in a for j in b)
            key = (link, tuple(-x for x in sorted((min(a), min(b)))))
            if link >= threshold and (best is None or key > best[0]):
                best = (key, a, b)
        if best is None:
            break
        _, a, b = best
        clusters = [c for c in clusters if c not in (a, b)] + [a | b]
    return sorted(sorted(c) for c in clusters)


def random_similarity(rng, m, ties=False):
    if ties:
        vals = rng.choice([0.2, 0.5, 0.85, 0.9, 1.0], size=(m, m))
    else:
        vals = rng.uniform(0, 1, size=(m, m))
    s = np.triu(vals, 1)
    s = s + s.T
    np.fill_diagonal(s, 1)
    return s


def random_structure(rng, n_tokens=12):
    spans = []
    for _ in range(rng.randint(0, 5)):
        s = rng.randrange(n_tokens)
        spans.append((s, min(n_tokens, s + rng.randint(1, 3))))
    idx = list(range(len(spans)))
    rng.shuffle(idx)
    clusters = []
    while idx:
        k = rng.randint(1, len(idx))
        clusters.append(idx[:k])
        idx = idx[k:]
    types = [rng.choice(TYPES) for _ in clusters]
    rels = [(rng.randrange(len(clusters)), rng.randrange(len(clusters)), rng.choice(RELS))
            for _ in range(rng.randint(0, 3))] if clusters else []
    return spans, clusters, types, rels


def perturb(rng, struct):
    spans, clusters, types, rels = struct
    spans = [(s, e + (rng.random() < 0.2)) for s, e in spans]
    types = [t if rng.random() < 0.8 else rng.choice(TYPES) for t in types]
    rels = [r for r in rels if rng.random() < 0.7]
    return spans, clusters, types, rels


def oracle_items(struct):
    spans, clusters, types, rels = struct
    cl = [sorted(set(spans[i] for i in c)) for c in clusters]
    return {
        "mention": list(spans),
        "cluster": cl,
        "entity": [(c, t) for c, t in zip(cl, types)],
        "relation": [((cl[h], types[h]), (cl[t], types[t]), r) for h, t, r in rels],
    }


def dedup(items):
    out = []
    for x in items:
        if all(x != y for y in out):
            out.append(x)
    return out


def oracle_prf(preds, golds):
    n_p = n_g = n_m = 0
    for p, g in zip(preds, golds):
        p, g = dedup(p), dedup(g)
        n_p += len(p)
        n_g += len(g)
        n_m += sum(1 for x in p if any(x == y for y in g))
    prec = n_m / n_p if n_p else 0.0
    rec = n_m / n_g if n_g else 0.0
    return prec, rec, (2 * prec * rec / (prec + rec) if prec + rec else 0.0)


def compare_with_oracle(rng, n_docs):
    golds = [random_structure(rng) for _ in range(n_docs)]
    preds = [perturb(rng, g) if rng.random() < 0.7 else random_structure(rng) for g in golds]
    report = evaluate([structure_items(*p) for p in preds], [structure_items(*g) for g in golds])
    for level in ("mention", "cluster", "entity", "relation"):
        want = oracle_prf([oracle_items(p)[level] for p in preds], [oracle_items(g)[level] for g in golds])
        got = report[level]
        for a, b in zip((got.precision, got.recall, got.f1), want):
            assert abs(a - b) <= 1e-12, level
