"""Synthetic documents and small configs shared by the tests."""

import random

from entrel.config import Config
from entrel.corpus import EntityCluster, Mention, RelationTriple, Span, build_document

NAMES = {
    "PER": [("Anna Berg", "Berg"), ("Tom Hale", "Hale"), ("Maria Lopez", "Lopez"), ("Ken Sato", "Sato")],
    "ORG": [("Acme Corp", "Acme"), ("Nordic Steel", "NS"), ("Blue River Bank", "BRB"), ("Vega Labs", "Vega")],
    "LOC": [("Oslo", None), ("Lima", None), ("Porto", None), ("Kyoto", None)],
    "TIME": [("1914", None), ("1987", None), ("2001", None), ("1960", None)],
}
TEMPLATES = [
    ("PER", "LOC", "P19", "{h} was born in {t} ."),
    ("PER", "ORG", "P108", "{h} works for {t} ."),
    ("ORG", "LOC", "P159", "{h} is based in {t} ."),
    ("ORG", "TIME", "P571", "{h} was founded in {t} ."),
]
ALIAS_SENTENCE = "{a} is well known ."


def _place(sentence_tpl, fills):
    """Tokenize a template and return (tokens, {slot: (start, end)})."""
    tokens, slots = [], {}
    for part in sentence_tpl.split():
        m = part.strip("{}")
        if part.startswith("{") and m in fills:
            words = fills[m].split()
            slots[m] = (len(tokens), len(tokens) + len(words))
            tokens.extend(words)
        else:
            tokens.append(part)
    return tokens, slots


def synthetic_document(seed: int, doc_id: str = None):
    rng = random.Random(seed)
    n_rel = rng.randint(1, 3)
    templates = rng.sample(TEMPLATES, n_rel)
    types = []
    for h, t, _, _ in templates:
        for ty in (h, t):
            if ty not in types:
                types.append(ty)
    if len(types) > 4:
        templates = templates[:1]
        types = [templates[0][0], templates[0][1]]
    names = {ty: rng.choice(NAMES[ty]) for ty in types}
    ent_index = {ty: i for i, ty in enumerate(types)}
    mentions = {ty: [] for ty in types}
    sentences, relations = [], []
    for h, t, rel, tpl in templates:
        offset = sum(len(s) for s in sentences)
        toks, slots = _place(tpl, {"h": names[h][0], "t": names[t][0]})
        for slot, ty in (("h", h), ("t", t)):
            s, e = slots[slot]
            mentions[ty].append(Span(offset + s, offset + e))
        sentences.append(toks)
        relations.append(RelationTriple(ent_index[h], ent_index[t], rel))
    aliased = [ty for ty in types if names[ty][1] is not None]
    if aliased:
        ty = rng.choice(aliased)
        offset = sum(len(s) for s in sentences)
        toks, slots = _place(ALIAS_SENTENCE, {"a": names[ty][1]})
        s, e = slots["a"]
        mentions[ty].append(Span(offset + s, offset + e))
        sentences.append(toks)
    clusters = [EntityCluster([Mention(sp, ty) for sp in mentions[ty]], ty) for ty in types]
    return build_document(doc_id or f"synth-{seed}", sentences, clusters, relations)


def synthetic_corpus(n: int, seed: int = 0):
    return [synthetic_document(seed * 1000 + i, f"synth-{seed}-{i}") for i in range(n)]


def tiny_config(**overrides) -> Config:
    values = {
        "encoder.name": "stub",
        "encoder.hidden_size": 64,
        "encoder.layers": 2,
        "encoder.heads": 4,
        "encoder.vocab_size": 2048,
        "encoder.native_positions": 128,
        "encoder.max_subwords": 128,
        "model.ffnn_hidden": 64,
        "mention.max_span_len": 4,
        "train.lr": 1e-3,
        "train.dropout": 0.0,
        "train.epochs": 5,
        "train.seed": 1,
    }
    values.update(overrides)
    return Config.from_flat(values)


# DocRED record of the Portland Golf Club example document.
FIGURE_DOC = {
    "title": "Portland Golf Club",
    "sents": [
        "The Portland Golf Club is a private golf club in the northwest United States , in suburban Portland , Oregon .".split(),
        "The PGC is located in the unincorporated Raleigh Hills area of eastern Washington County , southwest of downtown Portland and east of Beaverton .".split(),
        "PGC was established in the winter of 1914 , when a group of nine businessmen assembled to form a new club after leaving their respective clubs .".split(),
        "The golf club hosted the Ryder Cup matches of 1947 , the first renewal in a decade , due to World War II .".split(),
        "The U.S. team defeated Great Britain 11 to 1 in wet conditions in early November .".split(),
    ],
    "vertexSet": [
        [{"name": "Portland Golf Club", "sent_id": 0, "pos": [1, 4], "type": "ORG"},
         {"name": "PGC", "sent_id": 1, "pos": [1, 2], "type": "ORG"},
         {"name": "PGC", "sent_id": 2, "pos": [0, 1], "type": "ORG"},
         {"name": "golf club", "sent_id": 3, "pos": [1, 3], "type": "ORG"}],
        [{"name": "1914", "sent_id": 2, "pos": [7, 8], "type": "TIME"}],
        [{"name": "Raleigh Hills", "sent_id": 1, "pos": [7, 9], "type": "LOC"}],
        [{"name": "United States", "sent_id": 0, "pos": [12, 14], "type": "LOC"},
         {"name": "U.S.", "sent_id": 4, "pos": [1, 2], "type": "LOC"}],
    ],
    "labels": [
        {"h": 0, "t": 1, "r": "P571", "evidence": [2]},
        {"h": 2, "t": 3, "r": "P17", "evidence": [0, 1]},
    ],
}
