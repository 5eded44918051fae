"""Entity typing from max-pooled cluster representations."""

from typing import List, Sequence, Tuple

import torch
from torch import nn

from .mention import ffnn
from .pooling import group_max


def entity_representation(span_reps: torch.Tensor, clusters: Sequence[Sequence[int]]) -> torch.Tensor:
    """Coordinatewise max over each cluster's mention representations."""
    if any(len(c) == 0 for c in clusters):
        raise ValueError("cannot represent an empty cluster")
    return group_max(span_reps, clusters)


class EntityClassifier(nn.Module):
    def __init__(self, hidden_size: int, n_types: int, ffnn_hidden: int, dropout: float):
        super().__init__()
        self.n_types = n_types
        self.ffnn = ffnn(hidden_size, ffnn_hidden, n_types, dropout)

    def forward(self, entity_reps: torch.Tensor) -> torch.Tensor:
        return self.ffnn(entity_reps)

    def classify(self, entity_reps: torch.Tensor) -> List[Tuple[int, List[float]]]:
        """Argmax type index (lowest index wins ties) and the full distribution per entity."""
        if entity_reps.shape[0] == 0:
            return []
        probs = torch.softmax(self(entity_reps), dim=-1)
        return [(int(torch.argmax(p)), p.tolist()) for p in probs]
