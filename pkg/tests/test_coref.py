import itertools

import numpy as np
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from entrel.coref import CorefClassifier, complete_linkage, levenshtein
from entrel.corpus import Span
from entrel.encoder import EncodedDocument

from oracles import levenshtein_oracle, random_similarity, reference_complete_linkage


def test_levenshtein_examples():
    assert levenshtein("PGC", "PGC") == 0
    assert levenshtein("", "abc") == 3
    assert levenshtein_oracle("Portland Golf Club", "PGC") == 15
    assert levenshtein("Portland Golf Club", "PGC") == 15


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="abcAB ", max_size=12), st.text(alphabet="abcAB ", max_size=12))
def test_levenshtein_matches_oracle(a, b):
    assert levenshtein(a, b) == levenshtein_oracle(a, b) == levenshtein(b, a)


def test_pair_scorer_width_and_zero_logit():
    clf = CorefClassifier(768, 50, 25, 16, 0.0)
    assert clf.input_width == 1561 == clf.ffnn[0].in_features
    with torch.no_grad():
        clf.ffnn[-1].weight.zero_()
        clf.ffnn[-1].bias.zero_()
    reps = torch.randn(3, 768)
    assert torch.sigmoid(clf.pair_logits(reps, [(0, 1)], [4])).item() == 0.5


def test_distance_clipping():
    clf = CorefClassifier(4, 5, 3, 4, 0.0)
    assert clf.distance_index(3) == 3
    assert clf.distance_index(5) == clf.distance_index(500) == 5 == clf.distance_embeddings.num_embeddings - 1


def test_similarity_matrix_shapes_and_symmetry():
    torch.manual_seed(0)
    clf = CorefClassifier(8, 10, 4, 8, 0.0).eval()
    enc = EncodedDocument(torch.randn(6, 8), [])
    assert clf.similarity_matrix(enc, [], []).shape == (0, 0)
    assert clf.similarity_matrix(enc, [Span(0, 1)], ["a"]).tolist() == [[1.0]]
    spans = [Span(0, 1), Span(1, 3), Span(4, 6)]
    with torch.no_grad():
        sim = clf.similarity_matrix(enc, spans, ["a", "b c", "d e"])
    assert np.allclose(sim, sim.T)
    assert np.all(np.diag(sim) == 1.0)
    assert np.all((sim >= 0) & (sim <= 1))


def test_cluster_documented_example():
    sim = np.array([[1, 0.9, 0.5], [0.9, 1, 0.9], [0.5, 0.9, 1]])
    assert complete_linkage(sim, 0.85) == [[0, 1], [2]]


def test_cluster_extremes():
    rng = np.random.default_rng(0)
    s = rng.uniform(0, 0.5, (5, 5))
    s = (s + s.T) / 2
    np.fill_diagonal(s, 1)
    assert complete_linkage(s, 0.85) == [[i] for i in range(5)]
    ones = np.ones((5, 5))
    assert complete_linkage(ones, 1.0) == [list(range(5))]
    assert complete_linkage(s, 1.0 + 1e-9) == [[i] for i in range(5)]
    assert complete_linkage(s + 0.1, 0.0) == [list(range(5))]
    assert complete_linkage(np.zeros((0, 0)), 0.5) == []


def test_cluster_matches_reference_with_ties():
    rng = np.random.default_rng(7)
    for _ in range(200):
        m = int(rng.integers(0, 9))
        sim = random_similarity(rng, m, ties=True)
        alpha = float(rng.choice([0.5, 0.85, 0.9, 1.0]))
        assert complete_linkage(sim, alpha) == reference_complete_linkage(sim, alpha)


def test_cluster_matches_scipy_complete_linkage():
    rng = np.random.default_rng(3)
    for _ in range(200):
        m = int(rng.integers(2, 9))
        sim = random_similarity(rng, m)
        alpha = float(rng.uniform(0, 1))
        z = linkage(squareform(1 - sim, checks=False), method="complete")
        labels = fcluster(z, t=1 - alpha, criterion="distance")
        groups = {}
        for i, lab in enumerate(labels):
            groups.setdefault(lab, []).append(i)
        assert complete_linkage(sim, alpha) == sorted(groups.values())


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 12), st.floats(0, 1), st.integers(0, 2 ** 31))
def test_partition_and_complete_linkage_guarantee(m, alpha, seed):
    rng = np.random.default_rng(seed)
    sim = random_similarity(rng, m, ties=bool(seed % 2))
    clusters = complete_linkage(sim, alpha)
    flat = sorted(i for c in clusters for i in c)
    assert flat == list(range(m))
    for c in clusters:
        for i, j in itertools.combinations(c, 2):
            assert sim[i, j] >= alpha
