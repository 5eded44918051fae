"""The joint model: one shared encoder feeding four task heads."""

import json
from pathlib import Path
from typing import Dict, Union

import torch
from torch import nn

from .config import Config
from .coref import CorefClassifier
from .encoder import DocumentEncoder, EncodedDocument
from .entity import EntityClassifier
from .mention import MentionClassifier
from .relation import GlobalRelationClassifier, MultiInstanceRelationClassifier

WEIGHTS_FILE = "model.pt"
CONFIG_FILE = "config.yaml"
MANIFEST_FILE = "manifest.json"


class JointModel(nn.Module):
    def __init__(self, cfg: Config):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        dropout = cfg.train.dropout
        self.encoder = DocumentEncoder(cfg.encoder, dropout)
        h = self.encoder.hidden_size
        meta = cfg.model.meta_dim
        hidden = cfg.model.ffnn_hidden or h
        self.embedding_dropout = nn.Dropout(dropout)
        self.mention = MentionClassifier(h, cfg.mention.max_span_len, meta, hidden, dropout)
        self.coref = CorefClassifier(h, cfg.coref.max_edit_distance, meta, hidden, dropout)
        self.entity = EntityClassifier(h, len(cfg.entity.types), hidden, dropout)
        n_types, n_rel = len(cfg.entity.types), len(cfg.rel.types)
        if cfg.rel.head == "grc":
            self.relation = GlobalRelationClassifier(h, n_types, n_rel, meta, hidden, dropout)
        else:
            self.relation = MultiInstanceRelationClassifier(h, n_types, n_rel, meta, hidden, dropout, cfg.rel)
        self.check_dimensions()

    @property
    def hidden_size(self) -> int:
        return self.encoder.hidden_size

    def dimensions(self) -> Dict[str, int]:
        dims = {
            "token": self.hidden_size,
            "mention_input": self.mention.input_width,
            "coref_input": self.coref.input_width,
        }
        if isinstance(self.relation, GlobalRelationClassifier):
            dims["grc_pair"] = self.relation.pair_width
        else:
            dims["mrc_instance"] = self.relation.instance_width
            dims["mrc_projected"] = self.relation.projected_width
            dims["mrc_final"] = self.relation.final_width
        return dims

    def check_dimensions(self):
        h, meta, rel = self.hidden_size, self.cfg.model.meta_dim, self.cfg.rel
        expected = {"token": h, "mention_input": h + meta, "coref_input": 2 * h + meta}
        if rel.head == "grc":
            expected["grc_pair"] = 2 * (h + meta)
        else:
            full = 4 * h + h + 2 * meta
            expected["mrc_instance"] = (full - (2 * h if rel.ablate_entity_repr else 0)
                                        - (h if rel.ablate_local_context else 0))
            expected["mrc_projected"] = h
            expected["mrc_final"] = h + 2 * meta
        actual = self.dimensions()
        if actual != expected:
            raise AssertionError(f"layer widths {actual} differ from the expected {expected}")

    def encode(self, words) -> EncodedDocument:
        enc = self.encoder(words)
        if self.training:
            enc = EncodedDocument(self.embedding_dropout(enc.token_embeddings), enc.subword_map)
        return enc

    def type_index(self, entity_type: str) -> int:
        try:
            return self.cfg.entity.types.index(entity_type)
        except ValueError:
            raise ValueError(f"entity type {entity_type!r} not in entity.types") from None

    def relation_index(self, relation_type: str) -> int:
        try:
            return self.cfg.rel.types.index(relation_type)
        except ValueError:
            raise ValueError(f"relation type {relation_type!r} not in rel.types") from None

    def save(self, directory: Union[str, Path], manifest: dict = None):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.cfg.save(directory / CONFIG_FILE)
        torch.save(self.state_dict(), directory / WEIGHTS_FILE)
        if manifest is not None:
            (directory / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, default=str), encoding="utf-8")

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "JointModel":
        directory = Path(directory)
        model = cls(Config.from_file(directory / CONFIG_FILE))
        model.load_state_dict(torch.load(directory / WEIGHTS_FILE, map_location="cpu"))
        model.eval()
        return model
