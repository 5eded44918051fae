"""Mention-pair coreference scoring and complete-linkage clustering."""

from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from .corpus import Span
from .encoder import EncodedDocument
from .mention import ffnn, span_representation


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance (insert, delete, substitute)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


class CorefClassifier(nn.Module):
    def __init__(self, hidden_size: int, max_edit_distance: int, meta_dim: int, ffnn_hidden: int, dropout: float):
        super().__init__()
        self.max_edit_distance = max_edit_distance
        self.distance_embeddings = nn.Embedding(max_edit_distance + 1, meta_dim)
        self.input_width = 2 * hidden_size + meta_dim
        self.ffnn = ffnn(self.input_width, ffnn_hidden, 1, dropout)

    def distance_index(self, distance: int) -> int:
        return min(distance, self.max_edit_distance)

    def pair_logits(self, reps: torch.Tensor, pairs: Sequence[Tuple[int, int]], distances: Sequence[int]):
        """Logits for ordered pairs (i, j) of rows in ``reps``."""
        if not pairs:
            return reps.new_zeros(0)
        left = torch.tensor([i for i, _ in pairs], dtype=torch.long)
        right = torch.tensor([j for _, j in pairs], dtype=torch.long)
        d = torch.tensor([self.distance_index(x) for x in distances], dtype=torch.long, device=reps.device)
        x = torch.cat([reps[left], reps[right], self.distance_embeddings(d)], dim=-1)
        return self.ffnn(x).squeeze(-1)

    def symmetric_scores(self, reps, pairs, distances) -> torch.Tensor:
        """Mean of the sigmoid scores of both orderings of each pair."""
        if not pairs:
            return reps.new_zeros(0)
        both = list(pairs) + [(j, i) for i, j in pairs]
        probs = torch.sigmoid(self.pair_logits(reps, both, list(distances) * 2))
        return 0.5 * (probs[:len(pairs)] + probs[len(pairs):])

    def similarity_matrix(self, encoded: EncodedDocument, spans: Sequence[Span], surfaces: Sequence[str],
                          reps=None) -> np.ndarray:
        m = len(spans)
        sim = np.eye(m)
        if m < 2:
            return sim
        if reps is None:
            reps = span_representation(encoded, spans)
        dist = lru_cache(maxsize=None)(levenshtein)
        pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
        scores = self.symmetric_scores(reps, pairs, [dist(surfaces[i], surfaces[j]) for i, j in pairs])
        for (i, j), s in zip(pairs, scores.tolist()):
            sim[i, j] = sim[j, i] = s
        return sim


def complete_linkage(sim: np.ndarray, threshold: float) -> List[List[int]]:
    """Agglomerate items while some cluster pair has min pairwise similarity >= threshold.

    The highest linkage is merged first.  Ties go to the pair whose
    (smaller, larger) representatives, each cluster represented by its
    smallest member index, is lexicographically smallest.  Clusters come back
    sorted by smallest member.
    """
    sim = np.asarray(sim, dtype=float)
    m = sim.shape[0]
    clusters = {i: [i] for i in range(m)}
    link = sim.copy()
    np.fill_diagonal(link, -np.inf)
    active = list(range(m))
    while len(active) > 1:
        sub = link[np.ix_(active, active)]
        best = sub.max()
        if best < threshold:
            break
        # active is sorted and each key is its cluster's smallest member, so the
        # first maximal (row < col) entry in row-major order is the tie-break winner
        rows, cols = np.nonzero(np.triu(sub == best, k=1))
        a, b = active[rows[0]], active[cols[0]]
        clusters[a].extend(clusters.pop(b))
        link[a, :] = np.minimum(link[a, :], link[b, :])
        link[:, a] = link[a, :]
        link[a, a] = -np.inf
        active.remove(b)
    return [sorted(clusters[k]) for k in sorted(clusters)]
