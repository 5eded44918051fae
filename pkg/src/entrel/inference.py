"""End-to-end extraction: mentions -> clusters -> typed entities -> relations."""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

import torch

from .corpus import Document, Span
from .coref import complete_linkage
from .encoder import EncodedDocument, EncodingError
from .entity import entity_representation
from .evaluation import gold_items, gold_relation_facts, structure_items
from .mention import document_spans, span_representation
from .model import CONFIG_FILE, JointModel
from .relation import EntityContext, UnsupportedOperation, threshold_relations, top_instances

STAGES = ("mention", "coref", "entity", "relation")


@dataclass
class DocumentPrediction:
    doc_id: str
    mentions: List[Tuple[Span, float]] = field(default_factory=list)
    clusters: List[List[int]] = field(default_factory=list)
    entity_types: List[str] = field(default_factory=list)
    entity_scores: List[float] = field(default_factory=list)
    relations: List[dict] = field(default_factory=list)

    @property
    def spans(self) -> List[Span]:
        return [sp for sp, _ in self.mentions]

    def items(self) -> Dict[str, Set]:
        return structure_items(self.spans, self.clusters, self.entity_types,
                               [(r["head"], r["tail"], r["type"]) for r in self.relations])

    def to_json(self, doc: Optional[Document] = None) -> dict:
        def mention(sp, score):
            m = {"start": sp.start, "end": sp.end, "score": score}
            if doc is not None:
                m["text"] = doc.text(sp)
                m["sentence"] = doc.sentence_of(sp.start)
            return m

        return {
            "doc_id": self.doc_id,
            "mentions": [mention(sp, s) for sp, s in self.mentions],
            "clusters": self.clusters,
            "entities": [{"cluster": i, "type": t, "score": s}
                         for i, (t, s) in enumerate(zip(self.entity_types, self.entity_scores))],
            "relations": self.relations,
        }

    @classmethod
    def from_json(cls, data: dict) -> "DocumentPrediction":
        mentions = [(Span(m["start"], m["end"]), float(m.get("score", 1.0))) for m in data.get("mentions", [])]
        entities = sorted(data.get("entities", []), key=lambda e: e["cluster"])
        return cls(
            data["doc_id"], mentions, [list(c) for c in data.get("clusters", [])],
            [e["type"] for e in entities], [float(e.get("score", 1.0)) for e in entities],
            [dict(r) for r in data.get("relations", [])],
        )

    @classmethod
    def from_gold(cls, doc: Document) -> "DocumentPrediction":
        spans = doc.mention_spans()
        index = {sp: i for i, sp in enumerate(spans)}
        clusters = [sorted({index[m.span] for m in c.mentions}) for c in doc.clusters]
        return cls(doc.doc_id, [(sp, 1.0) for sp in spans], clusters, [c.entity_type for c in doc.clusters],
                   [1.0] * len(clusters),
                   [{"head": h, "tail": t, "type": r, "score": 1.0} for h, t, r in doc.deduplicated_relations()])


class Extractor:
    """Runs the four stages with one model (joint) or one model per stage (pipeline)."""

    def __init__(self, models: Dict[str, JointModel]):
        missing = set(STAGES) - set(models)
        if missing:
            raise ValueError(f"no model for stages {sorted(missing)}")
        self.models = models
        for m in set(map(id, models.values())):
            next(v for v in models.values() if id(v) == m).eval()
        self.encoder_calls = 0

    @classmethod
    def joint(cls, model: JointModel) -> "Extractor":
        return cls({stage: model for stage in STAGES})

    @classmethod
    def from_checkpoint(cls, path) -> "Extractor":
        path = Path(path)
        if (path / CONFIG_FILE).exists():
            return cls.joint(JointModel.load(path))
        if all((path / stage / CONFIG_FILE).exists() for stage in STAGES):
            return cls({stage: JointModel.load(path / stage) for stage in STAGES})
        raise FileNotFoundError(f"{path} is neither a joint checkpoint nor a pipeline checkpoint directory")

    @property
    def is_pipeline(self) -> bool:
        return len({id(m) for m in self.models.values()}) > 1

    @property
    def relation_head(self) -> str:
        return self.models["relation"].cfg.rel.head

    def _encoder(self, doc: Document):
        cache: Dict[int, EncodedDocument] = {}

        def get(stage: str) -> EncodedDocument:
            model = self.models[stage]
            if id(model) not in cache:
                need = model.encoder.required_positions(doc.words)
                if need > model.encoder.capacity:
                    raise EncodingError(f"document {doc.doc_id} needs {need} subword positions; "
                                        f"the encoder supports {model.encoder.capacity}")
                self.encoder_calls += 1
                cache[id(model)] = model.encode(doc.words)
            return cache[id(model)]

        return get

    # stage helpers

    def _mentions(self, doc, enc) -> List[Tuple[Span, float]]:
        m = self.models["mention"]
        return m.mention.localize(enc("mention"), document_spans(doc, m.cfg.mention.max_span_len),
                                  m.cfg.mention.threshold)

    def _cluster(self, doc, enc, spans: Sequence[Span]) -> List[List[int]]:
        m = self.models["coref"]
        sim = m.coref.similarity_matrix(enc("coref"), spans, [doc.text(sp) for sp in spans])
        return complete_linkage(sim, m.cfg.coref.threshold)

    def _type(self, enc, spans, clusters) -> List[Tuple[str, float]]:
        m = self.models["entity"]
        xe = entity_representation(span_representation(enc("entity"), spans), clusters)
        return [(m.cfg.entity.types[i], dist[i]) for i, dist in m.entity.classify(xe)]

    def _context(self, doc, enc, spans, clusters, types: Sequence[str]) -> EntityContext:
        m = self.models["relation"]
        reps = span_representation(enc("relation"), spans)
        return EntityContext(list(spans), [doc.sentence_of(sp.start) for sp in spans], reps, clusters,
                             entity_representation(reps, clusters),
                             torch.tensor([m.type_index(t) for t in types], dtype=torch.long))

    def _relations(self, enc, ctx: EntityContext) -> List[Tuple[int, int, str, float]]:
        m = self.models["relation"]
        n = len(ctx.clusters)
        pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
        if not pairs:
            return []
        probs = torch.sigmoid(m.relation(enc("relation"), ctx, pairs))
        return [(h, t, m.cfg.rel.types[r], p)
                for h, t, r, p in threshold_relations(probs, pairs, m.cfg.rel.effective_threshold)]

    # public API

    @torch.no_grad()
    def extract(self, doc: Document, explain: int = 0) -> DocumentPrediction:
        pred = DocumentPrediction(doc.doc_id)
        if len(doc) == 0:
            return pred
        enc = self._encoder(doc)
        pred.mentions = self._mentions(doc, enc)
        if not pred.mentions:
            return pred
        spans = pred.spans
        pred.clusters = self._cluster(doc, enc, spans)
        typed = self._type(enc, spans, pred.clusters)
        pred.entity_types = [t for t, _ in typed]
        pred.entity_scores = [s for _, s in typed]
        ctx = self._context(doc, enc, spans, pred.clusters, pred.entity_types)
        ranked = {}  # the ranking is shared by all relation types of an entity pair
        for h, t, r, p in self._relations(enc, ctx):
            rel = {"head": h, "tail": t, "type": r, "score": p}
            if explain and self.relation_head == "mrc":
                if (h, t) not in ranked:
                    ranked[h, t] = self._describe(doc, ctx, top_instances(
                        self.models["relation"].relation, enc("relation"), ctx, h, t, explain))
                rel["instances"] = ranked[h, t]
            pred.relations.append(rel)
        return pred

    @torch.no_grad()
    def explain(self, doc: Document, pred: DocumentPrediction, head: int, tail: int, k: int) -> List[dict]:
        """Top-k mention pairs supporting the entity pair (head, tail) of ``pred``.

        The pooled pair representation is shared by all relation types, so the
        ranking does not depend on the relation type of the triple.
        """
        if self.relation_head != "mrc":
            raise UnsupportedOperation("explanations need the multi-instance relation head")
        if k <= 0:
            return []
        enc = self._encoder(doc)
        ctx = self._context(doc, enc, pred.spans, pred.clusters, pred.entity_types)
        return self._describe(doc, ctx, top_instances(self.models["relation"].relation, enc("relation"),
                                                      ctx, head, tail, k))

    @staticmethod
    def _describe(doc, ctx, ranked):
        out = []
        for r in ranked:
            a, b = ctx.spans[r["head_mention"]], ctx.spans[r["tail_mention"]]
            out.append({
                "head_mention": r["head_mention"], "tail_mention": r["tail_mention"],
                "head_span": [a.start, a.end], "tail_span": [b.start, b.end],
                "head_text": doc.text(a), "tail_text": doc.text(b),
                "head_sentence": doc.sentence_of(a.start), "tail_sentence": doc.sentence_of(b.start),
                "contribution": r["contribution"], "token_distance": r["token_distance"],
            })
        return out

    @torch.no_grad()
    def gold_input_items(self, doc: Document) -> Dict[str, Set]:
        """Per-stage predictions where every stage receives gold output of the previous one.

        Relation items are (head index, tail index, type) over the gold entities.
        """
        items = {"mention": set(), "cluster": set(), "entity": set(), "relation": set()}
        if len(doc) == 0:
            return items
        enc = self._encoder(doc)
        items["mention"] = {(sp.start, sp.end) for sp, _ in self._mentions(doc, enc)}
        spans = doc.mention_spans()
        if not spans:
            return items
        items["cluster"] = {frozenset((spans[i].start, spans[i].end) for i in c)
                            for c in self._cluster(doc, enc, spans)}
        index = {sp: i for i, sp in enumerate(spans)}
        gold_clusters = [sorted({index[m.span] for m in c.mentions}) for c in doc.clusters]
        typed = self._type(enc, spans, gold_clusters)
        items["entity"] = {(frozenset((spans[i].start, spans[i].end) for i in c), t)
                           for c, (t, _) in zip(gold_clusters, typed)}
        items["relation"] = self.relation_facts(doc, enc)
        return items

    @torch.no_grad()
    def relation_facts(self, doc: Document, enc=None) -> Set[Tuple[int, int, str]]:
        """Relations between the gold entities (gold types), as (head index, tail index, type)."""
        if len(doc) == 0 or not doc.clusters:
            return set()
        enc = enc or self._encoder(doc)
        spans = doc.mention_spans()
        index = {sp: i for i, sp in enumerate(spans)}
        gold_clusters = [sorted({index[m.span] for m in c.mentions}) for c in doc.clusters]
        ctx = self._context(doc, enc, spans, gold_clusters, [c.entity_type for c in doc.clusters])
        return {(h, t, r) for h, t, r, _ in self._relations(enc, ctx)}


def gold_input_reference(doc: Document) -> Dict[str, Set]:
    ref = gold_items(doc)
    ref["relation"] = gold_relation_facts(doc)
    return ref
