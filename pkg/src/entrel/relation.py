"""Entity-pair relation heads: global (GRC) and multi-instance (MRC)."""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch
from torch import nn

from .config import RelationConfig
from .corpus import Span
from .encoder import EncodedDocument
from .mention import ffnn
from .pooling import group_max


class UnsupportedOperation(RuntimeError):
    pass


@dataclass
class EntityContext:
    """Mentions, clusters and entity-level inputs the relation heads operate on."""

    spans: List[Span]
    sentences: List[int]  # sentence index per mention
    span_reps: torch.Tensor  # (M, h)
    clusters: List[List[int]]  # mention indices per entity
    entity_reps: torch.Tensor  # (E, h)
    entity_types: torch.Tensor  # (E,) type indices


def token_gap(a: Span, b: Span) -> int:
    """Tokens strictly between two spans; 0 when adjacent or overlapping."""
    if a.end <= b.start:
        return b.start - a.end
    if b.end <= a.start:
        return a.start - b.end
    return 0


def context_range(a: Span, b: Span) -> Tuple[int, int]:
    if a.end <= b.start:
        return a.end, b.start
    if b.end <= a.start:
        return b.end, a.start
    return 0, 0


class GlobalRelationClassifier(nn.Module):
    def __init__(self, hidden_size: int, n_entity_types: int, n_relations: int, meta_dim: int,
                 ffnn_hidden: int, dropout: float):
        super().__init__()
        self.type_embeddings = nn.Embedding(n_entity_types, meta_dim)
        self.pair_width = 2 * (hidden_size + meta_dim)
        self.ffnn = ffnn(self.pair_width, ffnn_hidden, n_relations, dropout)

    def pair_representation(self, ctx: EntityContext, pairs: Sequence[Tuple[int, int]]) -> torch.Tensor:
        h = torch.tensor([p[0] for p in pairs], dtype=torch.long)
        t = torch.tensor([p[1] for p in pairs], dtype=torch.long)
        w = self.type_embeddings(ctx.entity_types)
        return torch.cat([ctx.entity_reps[h], w[h], ctx.entity_reps[t], w[t]], dim=-1)

    def forward(self, encoded: EncodedDocument, ctx: EntityContext, pairs: Sequence[Tuple[int, int]]):
        if not pairs:
            return ctx.entity_reps.new_zeros(0, self.ffnn[-1].out_features)
        return self.ffnn(self.pair_representation(ctx, pairs))


@dataclass
class InstancePool:
    """Per entity pair: the mention pairs used and their projected representations."""

    instances: List[List[Tuple[int, int]]]
    projected: List[torch.Tensor]  # (n_instances, h) per entity pair
    pooled: torch.Tensor  # (n_pairs, h)


class MultiInstanceRelationClassifier(nn.Module):
    def __init__(self, hidden_size: int, n_entity_types: int, n_relations: int, meta_dim: int,
                 ffnn_hidden: int, dropout: float, cfg: RelationConfig):
        super().__init__()
        self.cfg = cfg
        self.type_embeddings = nn.Embedding(n_entity_types, meta_dim)
        self.sentence_distance_embeddings = nn.Embedding(cfg.max_sentence_distance + 1, meta_dim)
        self.token_distance_embeddings = nn.Embedding(cfg.max_token_distance + 1, meta_dim)
        self.mention_pair_width = 2 * hidden_size if cfg.ablate_entity_repr else 4 * hidden_size
        self.instance_width = self.mention_pair_width + (0 if cfg.ablate_local_context else hidden_size) + 2 * meta_dim
        self.projected_width = hidden_size
        self.project = nn.Linear(self.instance_width, hidden_size)
        self.dropout = nn.Dropout(dropout)
        self.final_width = hidden_size + 2 * meta_dim
        self.ffnn = ffnn(self.final_width, ffnn_hidden, n_relations, dropout)

    def instance_pairs(self, ctx: EntityContext, head: int, tail: int) -> List[Tuple[int, int]]:
        pairs = [(i, j) for i in ctx.clusters[head] for j in ctx.clusters[tail]]
        if self.cfg.intra_sentence_only:
            intra = [(i, j) for i, j in pairs if ctx.sentences[i] == ctx.sentences[j]]
            if intra:
                return intra
            return [min(pairs, key=lambda p: (token_gap(ctx.spans[p[0]], ctx.spans[p[1]]), p))]
        return pairs

    def instance_features(self, encoded: EncodedDocument, ctx: EntityContext,
                          rows: Sequence[Tuple[int, int, int, int]]) -> torch.Tensor:
        """Mention-pair inputs for (head entity, tail entity, head mention, tail mention) rows."""
        eh = torch.tensor([r[0] for r in rows], dtype=torch.long)
        et = torch.tensor([r[1] for r in rows], dtype=torch.long)
        mh = torch.tensor([r[2] for r in rows], dtype=torch.long)
        mt = torch.tensor([r[3] for r in rows], dtype=torch.long)
        if self.cfg.ablate_entity_repr:
            parts = [ctx.span_reps[mh], ctx.span_reps[mt]]
        else:
            parts = [ctx.span_reps[mh], ctx.entity_reps[eh], ctx.span_reps[mt], ctx.entity_reps[et]]
        pairs = [(ctx.spans[r[2]], ctx.spans[r[3]]) for r in rows]
        if not self.cfg.ablate_local_context:
            bounds = [context_range(a, b) for a, b in pairs]
            parts.append(encoded.ranges.query([s for s, _ in bounds], [e for _, e in bounds]))
        d_s = [min(abs(ctx.sentences[r[2]] - ctx.sentences[r[3]]), self.cfg.max_sentence_distance) for r in rows]
        d_t = [min(token_gap(a, b), self.cfg.max_token_distance) for a, b in pairs]
        device = ctx.span_reps.device
        parts.append(self.sentence_distance_embeddings(torch.tensor(d_s, dtype=torch.long, device=device)))
        parts.append(self.token_distance_embeddings(torch.tensor(d_t, dtype=torch.long, device=device)))
        return torch.cat(parts, dim=-1)

    def pool(self, encoded: EncodedDocument, ctx: EntityContext, pairs: Sequence[Tuple[int, int]]) -> InstancePool:
        instances = [self.instance_pairs(ctx, h, t) for h, t in pairs]
        rows = [(h, t, i, j) for (h, t), inst in zip(pairs, instances) for i, j in inst]
        chunk = self.cfg.pair_chunk_size
        projected = torch.cat([
            self.project(self.dropout(self.instance_features(encoded, ctx, rows[k:k + chunk])))
            for k in range(0, len(rows), chunk)
        ], dim=0)
        groups, per_pair, offset = [], [], 0
        for inst in instances:
            groups.append(range(offset, offset + len(inst)))
            per_pair.append(projected[offset:offset + len(inst)])
            offset += len(inst)
        return InstancePool(instances, per_pair, group_max(projected, groups))

    def classify_pooled(self, pooled: torch.Tensor, ctx: EntityContext, pairs) -> torch.Tensor:
        h = torch.tensor([p[0] for p in pairs], dtype=torch.long)
        t = torch.tensor([p[1] for p in pairs], dtype=torch.long)
        w = self.type_embeddings(ctx.entity_types)
        return self.ffnn(torch.cat([pooled, w[h], w[t]], dim=-1))

    def forward(self, encoded: EncodedDocument, ctx: EntityContext, pairs: Sequence[Tuple[int, int]]):
        if not pairs:
            return ctx.entity_reps.new_zeros(0, self.ffnn[-1].out_features)
        return self.classify_pooled(self.pool(encoded, ctx, pairs).pooled, ctx, pairs)


def instance_contributions(projected: torch.Tensor, pooled: torch.Tensor) -> List[float]:
    """Fraction of pooled coordinates at which each instance attains the maximum."""
    if projected.shape[0] == 0:
        return []
    hits = projected == pooled.unsqueeze(0)
    return (hits.double().mean(dim=-1)).tolist()


def top_instances(head: nn.Module, encoded: EncodedDocument, ctx: EntityContext, e1: int, e2: int,
                  k: Optional[int] = None) -> List[dict]:
    """Mention pairs of (e1, e2) ranked by their share of the max-pooled representation.

    Ordering: contribution descending, then token distance ascending.
    """
    if not isinstance(head, MultiInstanceRelationClassifier):
        raise UnsupportedOperation("instance selection needs the multi-instance relation head")
    if k is not None and k <= 0:
        return []
    with torch.no_grad():
        pool = head.pool(encoded, ctx, [(e1, e2)])
    contribs = instance_contributions(pool.projected[0], pool.pooled[0])
    ranked = []
    for (i, j), c in zip(pool.instances[0], contribs):
        ranked.append({"head_mention": i, "tail_mention": j, "contribution": c,
                       "token_distance": token_gap(ctx.spans[i], ctx.spans[j])})
    ranked.sort(key=lambda r: (-r["contribution"], r["token_distance"], r["head_mention"], r["tail_mention"]))
    return ranked if k is None else ranked[:k]


def threshold_relations(probs: torch.Tensor, pairs: Sequence[Tuple[int, int]], threshold: float):
    """(head, tail, relation index, probability) for every score >= threshold."""
    out = []
    if len(pairs) == 0:
        return out
    hits = (probs >= threshold).nonzero(as_tuple=False).tolist()
    for p, r in hits:
        h, t = pairs[p]
        out.append((h, t, r, float(probs[p, r])))
    return out


def classify_pair_bidirectional(head: nn.Module, encoded: EncodedDocument, ctx: EntityContext, e1: int, e2: int,
                                threshold: float):
    """Score (e1, e2) and (e2, e1) independently and keep every (direction, type) above threshold."""
    pairs = [(e1, e2), (e2, e1)]
    with torch.no_grad():
        probs = torch.sigmoid(head(encoded, ctx, pairs))
    return threshold_relations(probs, pairs, threshold)
