"""Per-document positive/negative sample construction for the four training tasks."""

import random
from typing import List, Set, Tuple

from .corpus import Document, Span
from .mention import document_spans


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def strict_subspans(span: Span, max_len: int) -> List[Span]:
    return [Span(s, e) for s in range(span.start, span.end) for e in range(s + 1, span.end + 1)
            if (s, e) != (span.start, span.end) and e - s <= max_len]


def sample_mention_negatives(doc: Document, n: int, max_len: int, seed) -> List[Span]:
    """Up to ``n`` non-mention spans: at most n/2 strict sub-spans of gold mentions, the rest random."""
    rng = _rng(seed)
    gold = set(doc.mention_spans())
    intra = {s for g in gold for s in strict_subspans(g, max_len)} - gold
    chosen = rng.sample(sorted(intra), min(len(intra), n // 2))
    # the random remainder never re-enters the sub-span share, so that share stays <= n/2
    taken = gold | intra
    pool = [s for s in document_spans(doc, max_len) if s not in taken]
    chosen += rng.sample(pool, min(len(pool), n - len(chosen)))
    return chosen


def gold_clusters_by_index(doc: Document) -> Tuple[List[Span], List[List[int]]]:
    spans = doc.mention_spans()
    index = {sp: i for i, sp in enumerate(spans)}
    return spans, [sorted({index[m.span] for m in c.mentions}) for c in doc.clusters]


def sample_coref_pairs(doc: Document, n: int, seed):
    """All coreferent pairs (i < j) of gold mention indices, plus up to ``n`` non-coreferent pairs."""
    rng = _rng(seed)
    spans, clusters = gold_clusters_by_index(doc)
    owner = {}
    for ci, c in enumerate(clusters):
        for i in c:
            owner.setdefault(i, set()).add(ci)
    positives = sorted({(a, b) for c in clusters for ai, a in enumerate(c) for b in c[ai + 1:]})
    pos = set(positives)
    negatives = [(i, j) for i in range(len(spans)) for j in range(i + 1, len(spans))
                 if (i, j) not in pos and not owner[i] & owner[j]]
    return positives, rng.sample(negatives, min(n, len(negatives)))


def related_pairs(doc: Document) -> Set[Tuple[int, int]]:
    return {(r.head, r.tail) for r in doc.relations}


def sample_relation_negatives(doc: Document, n: int, seed) -> List[Tuple[int, int]]:
    """Up to ``n`` ordered gold entity pairs without any gold relation in that direction."""
    rng = _rng(seed)
    related = related_pairs(doc)
    k = len(doc.clusters)
    candidates = [(h, t) for h in range(k) for t in range(k) if h != t and (h, t) not in related]
    return rng.sample(candidates, min(n, len(candidates)))
