"""Documents, gold annotations, DocRED ingestion and the end-to-end split."""

import hashlib
import json
import logging
import random
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

# Fixed order; the index of a type is its class id.
DOCRED_ENTITY_TYPES = ("ORG", "LOC", "TIME", "PER", "MISC", "NUM")

DOCRED_RELATION_TYPES = (
    "P6", "P17", "P19", "P20", "P22", "P25", "P26", "P27", "P30", "P31",
    "P35", "P36", "P37", "P39", "P40", "P50", "P54", "P57", "P58", "P69",
    "P86", "P102", "P108", "P112", "P118", "P123", "P127", "P131", "P136", "P137",
    "P140", "P150", "P155", "P156", "P159", "P161", "P162", "P166", "P170", "P171",
    "P172", "P175", "P176", "P178", "P179", "P190", "P194", "P205", "P206", "P241",
    "P264", "P272", "P276", "P279", "P355", "P361", "P364", "P400", "P403", "P449",
    "P463", "P488", "P495", "P527", "P551", "P569", "P570", "P571", "P576", "P577",
    "P580", "P582", "P585", "P607", "P674", "P676", "P706", "P710", "P737", "P740",
    "P749", "P800", "P807", "P840", "P937", "P1001", "P1056", "P1198", "P1336", "P1344",
    "P1365", "P1366", "P1376", "P1412", "P1441", "P3373",
)

EXPECTED_FILTERED_DOCUMENTS = 45


class IngestionError(ValueError):
    """Raised when input data violates the DocRED schema or document invariants."""


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int  # exclusive

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start


@dataclass(frozen=True)
class Token:
    index: int
    sentence_index: int
    surface: str


@dataclass(frozen=True)
class Mention:
    span: Span
    entity_type: Optional[str] = None
    name: Optional[str] = None


@dataclass
class EntityCluster:
    mentions: List[Mention]
    entity_type: str

    def __post_init__(self):
        if not self.mentions:
            raise ValueError("entity cluster must contain at least one mention")

    @property
    def spans(self) -> frozenset:
        return frozenset(m.span for m in self.mentions)

    @property
    def has_mixed_types(self) -> bool:
        return len({m.entity_type for m in self.mentions if m.entity_type is not None}) > 1


@dataclass(frozen=True)
class RelationTriple:
    head: int  # index into Document.clusters
    tail: int
    relation_type: str
    evidence: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.head == self.tail:
            raise ValueError("relation head and tail must differ")


@dataclass
class Document:
    doc_id: str
    tokens: List[Token]
    sentences: List[Tuple[int, int]]  # [start, end) token ranges
    clusters: List[EntityCluster] = field(default_factory=list)
    relations: List[RelationTriple] = field(default_factory=list)
    title: Optional[str] = None

    def __len__(self):
        return len(self.tokens)

    @property
    def mentions(self) -> List[Mention]:
        return [m for c in self.clusters for m in c.mentions]

    @property
    def words(self) -> List[str]:
        return [t.surface for t in self.tokens]

    def text(self, span: Span) -> str:
        return " ".join(t.surface for t in self.tokens[span.start:span.end])

    def sentence_of(self, position: int) -> int:
        return self.tokens[position].sentence_index

    def mention_spans(self) -> List[Span]:
        """Unique gold mention spans in document order."""
        return sorted({m.span for m in self.mentions})

    def deduplicated_relations(self) -> List[Tuple[int, int, str]]:
        seen = {}
        for r in self.relations:
            seen.setdefault((r.head, r.tail, r.relation_type), None)
        return list(seen)


def build_document(doc_id: str, sentences: Sequence[Sequence[str]], clusters=(), relations=(),
                   title: Optional[str] = None) -> Document:
    tokens, bounds = [], []
    for si, sent in enumerate(sentences):
        start = len(tokens)
        for word in sent:
            tokens.append(Token(len(tokens), si, word))
        bounds.append((start, len(tokens)))
    return Document(doc_id, tokens, bounds, list(clusters), list(relations), title=title)


def _require(cond, doc_ref, what):
    if not cond:
        raise IngestionError(f"document {doc_ref}: {what}")


def parse_docred_record(record: dict, fallback_id: str) -> Document:
    title = record.get("title", fallback_id) if isinstance(record, dict) else fallback_id
    ref = f"{fallback_id} ({title!r})"
    _require(isinstance(record, dict), ref, "record is not an object")
    _require(isinstance(record.get("sents"), list), ref, "field 'sents' missing or not a list")
    for si, sent in enumerate(record["sents"]):
        _require(isinstance(sent, list) and all(isinstance(w, str) for w in sent), ref,
                 f"field 'sents[{si}]' must be a list of strings")
    doc = build_document(title, record["sents"], title=title)

    vertex_set = record.get("vertexSet")
    _require(isinstance(vertex_set, list), ref, "field 'vertexSet' missing or not a list")
    clusters = []
    for vi, vertex in enumerate(vertex_set):
        _require(isinstance(vertex, list) and vertex, ref, f"field 'vertexSet[{vi}]' must be a non-empty list")
        mentions = []
        for mi, m in enumerate(vertex):
            where = f"field 'vertexSet[{vi}][{mi}]'"
            _require(isinstance(m, dict) and {"sent_id", "pos", "type"} <= set(m), ref,
                     f"{where} needs 'sent_id', 'pos' and 'type'")
            sid, pos = m["sent_id"], m["pos"]
            _require(isinstance(sid, int) and 0 <= sid < len(doc.sentences), ref, f"{where}.sent_id out of range")
            _require(isinstance(pos, list) and len(pos) == 2 and all(isinstance(p, int) for p in pos), ref,
                     f"{where}.pos must be [start, end]")
            s_start, s_end = doc.sentences[sid]
            _require(0 <= pos[0] < pos[1] <= s_end - s_start, ref,
                     f"{where}.pos {pos} crosses the boundary of sentence {sid}")
            span = Span(s_start + pos[0], s_start + pos[1])
            mentions.append(Mention(span, m["type"], m.get("name")))
        types = Counter(x.entity_type for x in mentions)
        clusters.append(EntityCluster(mentions, types.most_common(1)[0][0] if len(types) > 1 else mentions[0].entity_type))
    doc.clusters = clusters

    owner: Dict[Span, int] = {}
    for ci, c in enumerate(clusters):
        for span in c.spans:
            if span in owner and owner[span] != ci:
                logger.warning("document %s: span %s annotated in clusters %d and %d", ref, span, owner[span], ci)
            owner.setdefault(span, ci)

    labels = record.get("labels", [])
    _require(isinstance(labels, list), ref, "field 'labels' must be a list")
    relations = []
    for li, lab in enumerate(labels):
        where = f"field 'labels[{li}]'"
        _require(isinstance(lab, dict) and {"h", "t", "r"} <= set(lab), ref, f"{where} needs 'h', 't' and 'r'")
        for key in ("h", "t"):
            _require(isinstance(lab[key], int) and 0 <= lab[key] < len(clusters), ref,
                     f"{where}.{key}={lab[key]!r} references a missing vertex")
        _require(lab["h"] != lab["t"], ref, f"{where} has identical head and tail")
        relations.append(RelationTriple(lab["h"], lab["t"], lab["r"], tuple(lab.get("evidence", ()))))
    doc.relations = relations
    return doc


def load_docred(path) -> List[Document]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise IngestionError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(data, list):
        raise IngestionError(f"{path}: top level must be a list of documents")
    docs = [parse_docred_record(rec, f"{path.name}[{i}]") for i, rec in enumerate(data)]
    _disambiguate_ids(docs)
    return docs


def _disambiguate_ids(docs: List[Document]):
    counts = Counter(d.doc_id for d in docs)
    for d in docs:
        if counts[d.doc_id] > 1:
            digest = hashlib.sha1(" ".join(d.words).encode("utf-8")).hexdigest()[:8]
            d.doc_id = f"{d.doc_id}#{digest}"


def to_docred_record(doc: Document) -> dict:
    sents = [[t.surface for t in doc.tokens[s:e]] for s, e in doc.sentences]
    vertex_set = []
    for c in doc.clusters:
        vertex = []
        for m in c.mentions:
            si = doc.sentence_of(m.span.start)
            off = doc.sentences[si][0]
            vertex.append({
                "name": m.name if m.name is not None else doc.text(m.span),
                "pos": [m.span.start - off, m.span.end - off],
                "sent_id": si,
                "type": m.entity_type or c.entity_type,
            })
        vertex_set.append(vertex)
    labels = [{"h": r.head, "t": r.tail, "r": r.relation_type, "evidence": list(r.evidence)} for r in doc.relations]
    return {"title": doc.title or doc.doc_id, "sents": sents, "vertexSet": vertex_set, "labels": labels}


def save_docred(docs: Iterable[Document], path):
    Path(path).write_text(json.dumps([to_docred_record(d) for d in docs], ensure_ascii=False), encoding="utf-8")


@dataclass
class CorpusStatistics:
    documents: int = 0
    mentions: int = 0
    entities: int = 0
    relations: int = 0


def corpus_statistics(documents: Iterable[Document]) -> CorpusStatistics:
    stats = CorpusStatistics()
    for d in documents:
        stats.documents += 1
        stats.mentions += sum(len(c.mentions) for c in d.clusters)
        stats.entities += len(d.clusters)
        stats.relations += len(d.relations)
    return stats


def has_mixed_type_entity(doc: Document) -> bool:
    return any(c.has_mixed_types for c in doc.clusters)


@dataclass
class EndToEndSplit:
    train: List[Document]
    dev: List[Document]
    test: List[Document]
    filtered: List[str]
    seed: int

    def manifest(self) -> dict:
        def stats(docs):
            return vars(corpus_statistics(docs))
        return {
            "seed": self.seed,
            "counts": {"train": stats(self.train), "dev": stats(self.dev), "test": stats(self.test),
                       "total": stats(self.train + self.dev + self.test)},
            "filtered_doc_ids": sorted(self.filtered),
            "split_doc_ids": {name: sorted(d.doc_id for d in docs)
                              for name, docs in (("train", self.train), ("dev", self.dev), ("test", self.test))},
        }


def make_end_to_end_split(documents: Sequence[Document], seed: int, dev_size: int = 300,
                          test_size: int = 700) -> EndToEndSplit:
    """Drop documents with mixed-type entities, then shuffle the rest into train/dev/test.

    Dev and test get fixed sizes; train takes the remainder (3,008 on the
    original train+dev release).
    """
    filtered = [d.doc_id for d in documents if has_mixed_type_entity(d)]
    if len(filtered) != EXPECTED_FILTERED_DOCUMENTS:
        logger.warning("filtered %d mixed-type documents (expected %d for the public DocRED release)",
                       len(filtered), EXPECTED_FILTERED_DOCUMENTS)
    dropped = set(filtered)
    keep = sorted((d for d in documents if d.doc_id not in dropped), key=lambda d: d.doc_id)
    if len(keep) < dev_size + test_size + 1:
        raise IngestionError(f"only {len(keep)} documents after filtering; need more than {dev_size + test_size}")
    random.Random(seed).shuffle(keep)
    dev, test, train = keep[:dev_size], keep[dev_size:dev_size + test_size], keep[dev_size + test_size:]
    return EndToEndSplit(train, dev, test, filtered, seed)


_SENT_END = re.compile(r"(?<=[.!?])\s+")
_TOKEN = re.compile(r"\w+(?:[-']\w+)*|[^\w\s]")


def tokenize_text(text: str) -> List[List[str]]:
    """Deterministic plain-text tokenizer.

    Sentences end at '.', '!' or '?' followed by whitespace; tokens are runs of
    word characters (with inner hyphens/apostrophes) or single punctuation marks.
    """
    sents = []
    for chunk in _SENT_END.split(text.strip()):
        words = _TOKEN.findall(chunk)
        if words:
            sents.append(words)
    return sents


def document_from_text(text: str, doc_id: str = "doc") -> Document:
    return build_document(doc_id, tokenize_text(text), title=doc_id)
