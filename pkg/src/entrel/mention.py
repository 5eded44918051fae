"""Span enumeration and the span-based mention classifier."""

from typing import List, Sequence, Tuple

import torch
from torch import nn

from .corpus import Document, Span
from .encoder import EncodedDocument


def ffnn(in_dim: int, hidden: int, out_dim: int, dropout: float) -> nn.Sequential:
    """Two-layer feedforward network with an inner ReLU."""
    return nn.Sequential(nn.Linear(in_dim, hidden), nn.ReLU(), nn.Dropout(dropout), nn.Linear(hidden, out_dim))


def sentence_span_count(n: int, max_len: int) -> int:
    k = min(n, max_len)
    return n * k - k * (k - 1) // 2


def enumerate_spans(sentences: Sequence[Tuple[int, int]], max_len: int) -> List[Span]:
    """All intra-sentence spans of length 1..max_len, ordered by start then end."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    spans = []
    for s, e in sentences:
        for start in range(s, e):
            for end in range(start + 1, min(start + max_len, e) + 1):
                spans.append(Span(start, end))
    return spans


def document_spans(doc: Document, max_len: int) -> List[Span]:
    return enumerate_spans(doc.sentences, max_len)


def span_representation(encoded: EncodedDocument, spans: Sequence[Span]) -> torch.Tensor:
    """Coordinatewise max over each span's token embeddings, shape (len(spans), h)."""
    for sp in spans:
        if len(sp) < 1 or sp.end > len(encoded):
            raise ValueError(f"span {sp} outside document of length {len(encoded)}")
    return encoded.ranges.query([sp.start for sp in spans], [sp.end for sp in spans])


class MentionClassifier(nn.Module):
    def __init__(self, hidden_size: int, max_span_len: int, meta_dim: int, ffnn_hidden: int, dropout: float):
        super().__init__()
        self.max_span_len = max_span_len
        # row k holds the embedding for span length k; row 0 is unused
        self.size_embeddings = nn.Embedding(max_span_len + 1, meta_dim)
        self.input_width = hidden_size + meta_dim
        self.ffnn = ffnn(self.input_width, ffnn_hidden, 1, dropout)

    def forward(self, encoded: EncodedDocument, spans: Sequence[Span], span_reps=None) -> torch.Tensor:
        """Mention logits for ``spans``."""
        if not spans:
            return encoded.token_embeddings.new_zeros(0)
        lengths = torch.tensor([len(sp) for sp in spans], dtype=torch.long)
        if int(lengths.max()) > self.max_span_len:
            raise ValueError(f"span length {int(lengths.max())} exceeds the maximum {self.max_span_len}")
        if span_reps is None:
            span_reps = span_representation(encoded, spans)
        x = torch.cat([span_reps, self.size_embeddings(lengths.to(span_reps.device))], dim=-1)
        return self.ffnn(x).squeeze(-1)

    def localize(self, encoded: EncodedDocument, spans: Sequence[Span], threshold: float):
        """Return (span, probability) for every span whose probability is >= threshold."""
        if not spans:
            return []
        probs = torch.sigmoid(self(encoded, spans)).tolist()
        return [(sp, p) for sp, p in zip(spans, probs) if p >= threshold]
