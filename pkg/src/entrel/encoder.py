"""Document encoding with a BERT-style transformer, pooled back to dataset tokens."""

import zlib
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import torch
from torch import nn

from .config import EncoderConfig
from .pooling import RangeMax, group_max


class EncodingError(ValueError):
    pass


class HashingSubwordTokenizer:
    """Splits words into fixed-size character pieces hashed into a fixed vocabulary.

    Used by the ``stub`` encoder so that nothing has to be downloaded.
    """

    pad_id, unk_id, cls_id, sep_id = 0, 1, 2, 3
    n_special = 4

    def __init__(self, vocab_size: int, piece_len: int = 4):
        if vocab_size <= self.n_special:
            raise ValueError("vocab_size too small")
        self.vocab_size = vocab_size
        self.piece_len = piece_len

    def _piece_id(self, piece: str) -> int:
        h = zlib.crc32(piece.encode("utf-8"))
        return self.n_special + h % (self.vocab_size - self.n_special)

    def word_ids(self, word: str) -> List[int]:
        if not word:
            return [self.unk_id]
        pieces = [word[i:i + self.piece_len] for i in range(0, len(word), self.piece_len)]
        return [self._piece_id(p if i == 0 else "##" + p) for i, p in enumerate(pieces)]


class _HFTokenizer:
    def __init__(self, name: str):
        from transformers import AutoTokenizer

        self.tok = AutoTokenizer.from_pretrained(name)
        self.cls_id = self.tok.cls_token_id
        self.sep_id = self.tok.sep_token_id
        self.unk_id = self.tok.unk_token_id

    def word_ids(self, word: str) -> List[int]:
        ids = self.tok.convert_tokens_to_ids(self.tok.tokenize(word))
        return ids or [self.unk_id]


@dataclass
class EncodedDocument:
    token_embeddings: torch.Tensor  # (n_tokens, h)
    subword_map: List[Tuple[int, int]]  # token -> [start, end) in subword positions (after [CLS])
    _ranges: Optional[RangeMax] = field(default=None, repr=False)

    def __len__(self):
        return self.token_embeddings.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.token_embeddings.shape[-1]

    @property
    def ranges(self) -> RangeMax:
        if self._ranges is None:
            self._ranges = RangeMax(self.token_embeddings)
        return self._ranges


def pool_subwords(subword_embeddings: torch.Tensor, subword_map: Sequence[Tuple[int, int]],
                  mode: str = "max") -> torch.Tensor:
    """Aggregate per-subword vectors into one vector per dataset token."""
    if mode == "first":
        return subword_embeddings[torch.tensor([s for s, _ in subword_map], dtype=torch.long)]
    if mode != "max":
        raise ValueError(f"unknown subword pooling {mode!r}")
    return group_max(subword_embeddings, [range(s, e) for s, e in subword_map])


class DocumentEncoder(nn.Module):
    def __init__(self, cfg: EncoderConfig, dropout: float = 0.1):
        super().__init__()
        self.cfg = cfg
        if cfg.name == "stub":
            from transformers import BertConfig, BertModel

            bert_cfg = BertConfig(
                vocab_size=cfg.vocab_size, hidden_size=cfg.hidden_size, num_hidden_layers=cfg.layers,
                num_attention_heads=cfg.heads, intermediate_size=4 * cfg.hidden_size,
                max_position_embeddings=cfg.native_positions, hidden_dropout_prob=dropout,
                attention_probs_dropout_prob=dropout,
            )
            self.transformer = BertModel(bert_cfg, add_pooling_layer=False)
            self.tokenizer = HashingSubwordTokenizer(cfg.vocab_size)
        else:
            from transformers import AutoModel

            self.transformer = AutoModel.from_pretrained(cfg.name, add_pooling_layer=False)
            self.tokenizer = _HFTokenizer(cfg.name)
        self.native_positions = self.position_table.num_embeddings
        self.extended_rows = 0
        if cfg.max_subwords > self.native_positions:
            self.extend_positions(cfg.max_subwords)

    @property
    def hidden_size(self) -> int:
        return self.transformer.config.hidden_size

    @property
    def position_table(self) -> nn.Embedding:
        return self.transformer.embeddings.position_embeddings

    @property
    def capacity(self) -> int:
        return self.position_table.num_embeddings

    def extend_positions(self, max_needed: int) -> int:
        """Grow the position table to ``max_needed`` rows; returns the number of new rows."""
        old = self.position_table
        if max_needed <= old.num_embeddings:
            return 0
        new = nn.Embedding(max_needed, old.embedding_dim).to(old.weight.device, old.weight.dtype)
        std = getattr(self.transformer.config, "initializer_range", 0.02)
        with torch.no_grad():
            new.weight.normal_(0.0, std)
            new.weight[:old.num_embeddings] = old.weight
        added = max_needed - old.num_embeddings
        self.transformer.embeddings.position_embeddings = new
        self.transformer.config.max_position_embeddings = max_needed
        self.extended_rows += added
        return added

    def tokenize(self, words: Sequence[str]):
        ids = [self.tokenizer.cls_id]
        subword_map = []
        for w in words:
            pieces = self.tokenizer.word_ids(w)
            subword_map.append((len(ids) - 1, len(ids) - 1 + len(pieces)))
            ids.extend(pieces)
        ids.append(self.tokenizer.sep_id)
        return ids, subword_map

    def required_positions(self, words: Sequence[str]) -> int:
        return len(self.tokenize(words)[0])

    def forward(self, words: Sequence[str]) -> EncodedDocument:
        if not words:
            raise EncodingError("cannot encode an empty document")
        ids, subword_map = self.tokenize(words)
        if len(ids) > self.capacity:
            raise EncodingError(f"document needs {len(ids)} subword positions but the encoder supports {self.capacity}")
        device = self.position_table.weight.device
        input_ids = torch.tensor([ids], dtype=torch.long, device=device)
        positions = torch.arange(len(ids), device=device).unsqueeze(0)
        out = self.transformer(input_ids=input_ids, attention_mask=torch.ones_like(input_ids),
                               token_type_ids=torch.zeros_like(input_ids), position_ids=positions)
        hidden = out.last_hidden_state[0, 1:-1]
        return EncodedDocument(pool_subwords(hidden, subword_map, self.cfg.subword_pool), subword_map)
