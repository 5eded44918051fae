"""Strict micro-averaged precision/recall/F1 at mention, cluster, entity and relation level."""

from dataclasses import asdict, dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

from .corpus import Document

LEVELS = ("mention", "cluster", "entity", "relation")
RELATION_MODES = ("end_to_end", "gold_entities")


@dataclass
class LevelScore:
    precision: float
    recall: float
    f1: float
    n_pred: int
    n_gold: int
    n_matched: int


def prf(n_pred: int, n_gold: int, n_matched: int) -> LevelScore:
    p = n_matched / n_pred if n_pred else 0.0
    r = n_matched / n_gold if n_gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return LevelScore(p, r, f, n_pred, n_gold, n_matched)


def micro_score(pred: Iterable[Iterable[Hashable]], gold: Iterable[Iterable[Hashable]]) -> LevelScore:
    """Exact-match micro scores; items are compared per document and deduplicated."""
    n_pred = n_gold = n_matched = 0
    for p, g in zip(pred, gold, strict=True):
        p, g = set(p), set(g)
        n_pred += len(p)
        n_gold += len(g)
        n_matched += len(p & g)
    return prf(n_pred, n_gold, n_matched)


@dataclass
class MetricReport:
    levels: Dict[str, LevelScore] = field(default_factory=dict)
    extra: Dict[str, float] = field(default_factory=dict)
    per_document: Optional[Dict[str, Dict[str, LevelScore]]] = None

    def __getitem__(self, level: str) -> LevelScore:
        return self.levels[level]

    def to_json(self) -> dict:
        out = {level: asdict(s) for level, s in self.levels.items()}
        out.update(self.extra)
        if self.per_document is not None:
            out["per_document"] = {d: {lv: asdict(s) for lv, s in lvs.items()} for d, lvs in self.per_document.items()}
        return out


# Item views.  Spans are (start, end) tuples so items stay hashable and comparable.

def _span(sp) -> Tuple[int, int]:
    return (sp.start, sp.end) if hasattr(sp, "start") else tuple(sp)


def gold_items(doc: Document) -> Dict[str, Set]:
    clusters = [frozenset(_span(m.span) for m in c.mentions) for c in doc.clusters]
    entities = [(cl, c.entity_type) for cl, c in zip(clusters, doc.clusters)]
    return {
        "mention": {_span(m.span) for m in doc.mentions},
        "cluster": set(clusters),
        "entity": set(entities),
        "relation": {(entities[h], entities[t], r) for h, t, r in doc.deduplicated_relations()},
    }


def structure_items(mention_spans: Sequence, clusters: Sequence[Sequence[int]], entity_types: Sequence[str],
                    relations: Iterable[Tuple[int, int, str]]) -> Dict[str, Set]:
    """Item sets for a predicted structure given by mention spans, clusters of mention indices, types, triples."""
    spans = [_span(s) for s in mention_spans]
    cls = [frozenset(spans[i] for i in c) for c in clusters]
    ents = [(c, t) for c, t in zip(cls, entity_types)]
    return {
        "mention": set(spans),
        "cluster": set(cls),
        "entity": set(ents),
        "relation": {(ents[h], ents[t], r) for h, t, r in relations},
    }


def eval_mentions(pred, gold) -> LevelScore:
    return micro_score(pred, gold)


def eval_clusters(pred, gold) -> LevelScore:
    return micro_score(pred, gold)


def eval_entities(pred, gold) -> LevelScore:
    return micro_score(pred, gold)


def eval_relations(pred, gold, mode: str = "end_to_end") -> LevelScore:
    """Relation scores.

    ``end_to_end`` items are (head entity, tail entity, type) with entities as
    (span set, entity type); ``gold_entities`` items are (head index, tail
    index, type) over the gold entity list.
    """
    if mode not in RELATION_MODES:
        raise ValueError(f"unknown relation evaluation mode {mode!r}")
    return micro_score(pred, gold)


def evaluate(pred_items: Sequence[Dict[str, Set]], gold_items_: Sequence[Dict[str, Set]],
             levels: Sequence[str] = LEVELS, doc_ids: Optional[Sequence[str]] = None) -> MetricReport:
    report = MetricReport()
    for level in levels:
        report.levels[level] = micro_score([p[level] for p in pred_items], [g[level] for g in gold_items_])
    if doc_ids is not None:
        report.per_document = {
            d: {lv: micro_score([p[lv]], [g[lv]]) for lv in levels}
            for d, p, g in zip(doc_ids, pred_items, gold_items_)
        }
    return report


def evaluate_documents(predictions, documents: Sequence[Document], levels: Sequence[str] = LEVELS,
                       per_document: bool = False) -> MetricReport:
    """End-to-end evaluation of DocumentPrediction-like objects against gold documents."""
    preds = [p.items() for p in predictions]
    golds = [gold_items(d) for d in documents]
    return evaluate(preds, golds, levels, [d.doc_id for d in documents] if per_document else None)


# Relation extraction with given entities (DocRED leaderboard setting).

def gold_relation_facts(doc: Document) -> Set[Tuple[int, int, str]]:
    return set(doc.deduplicated_relations())


def _names(doc: Document, entity: int) -> Set[str]:
    return {m.name if m.name is not None else doc.text(m.span) for m in doc.clusters[entity].mentions}


def train_fact_index(train_docs: Iterable[Document]) -> Set[Tuple[str, str, str]]:
    """(head mention name, tail mention name, relation) for every mention pair of every train fact."""
    facts = set()
    for doc in train_docs:
        for h, t, r in doc.deduplicated_relations():
            for n1 in _names(doc, h):
                for n2 in _names(doc, t):
                    facts.add((n1, n2, r))
    return facts


def evaluate_relation_only(pred: Sequence[Iterable[Tuple[int, int, str]]], documents: Sequence[Document],
                           train_facts: Optional[Set[Tuple[str, str, str]]] = None) -> MetricReport:
    """F1 over (head index, tail index, relation) plus Ign-F1 when train facts are given.

    Ign-F1 removes correct predictions whose entity names and relation already
    occur as a train fact from both the correct and the predicted counts;
    recall is unchanged.
    """
    preds = [set(p) for p in pred]
    golds = [gold_relation_facts(d) for d in documents]
    score = eval_relations(preds, golds, mode="gold_entities")
    report = MetricReport({"relation": score})
    if train_facts is not None:
        in_train = 0
        for p, g, doc in zip(preds, golds, documents):
            for h, t, r in p & g:
                if any((n1, n2, r) in train_facts for n1 in _names(doc, h) for n2 in _names(doc, t)):
                    in_train += 1
        denom = score.n_pred - in_train
        p_ign = (score.n_matched - in_train) / denom if denom > 0 else 0.0
        rec = score.recall
        report.extra["ign_f1"] = 2 * p_ign * rec / (p_ign + rec) if p_ign + rec else 0.0
        report.extra["ign_precision"] = p_ign
    return report


def submission_records(pred: Sequence[Iterable[Tuple[int, int, str]]], documents: Sequence[Document]) -> List[dict]:
    """DocRED leaderboard submission entries."""
    out = []
    for p, doc in zip(pred, documents):
        for h, t, r in sorted(set(p)):
            out.append({"title": doc.title or doc.doc_id, "h_idx": h, "t_idx": t, "r": r})
    return out


def relations_from_submission(records: Iterable[dict], documents: Sequence[Document]) -> List[Set[Tuple[int, int, str]]]:
    by_title = {d.title or d.doc_id: i for i, d in enumerate(documents)}
    out = [set() for _ in documents]
    for rec in records:
        i = by_title.get(rec["title"])
        if i is not None:
            out[i].add((int(rec["h_idx"]), int(rec["t_idx"]), rec["r"]))
    return out
