"""Differentiable max-pooling primitives shared by all heads."""

from typing import Sequence

import torch


def masked_max(x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Max over dim -2 of ``x`` restricted to ``mask``; fully masked rows give zeros."""
    filled = x.masked_fill(~mask.unsqueeze(-1), float("-inf"))
    out = filled.max(dim=-2).values
    empty = ~mask.any(dim=-1)
    if empty.any():
        out = out.masked_fill(empty.unsqueeze(-1), 0.0)
    return out


def pad_indices(groups: Sequence[Sequence[int]], device=None):
    """Pad ragged index lists into an (n, P) index tensor plus validity mask."""
    width = max((len(g) for g in groups), default=0)
    width = max(width, 1)
    idx = torch.zeros(len(groups), width, dtype=torch.long, device=device)
    mask = torch.zeros(len(groups), width, dtype=torch.bool, device=device)
    for i, g in enumerate(groups):
        if g:
            idx[i, :len(g)] = torch.as_tensor(list(g), dtype=torch.long)
            mask[i, :len(g)] = True
    return idx, mask


def group_max(vectors: torch.Tensor, groups: Sequence[Sequence[int]]) -> torch.Tensor:
    """For each group of row indices into ``vectors`` return the coordinatewise max."""
    if not groups:
        return vectors.new_zeros(0, vectors.shape[-1])
    idx, mask = pad_indices(groups, vectors.device)
    return masked_max(vectors[idx], mask)


class RangeMax:
    """Sparse table over a sequence of vectors answering max over [start, end) in O(1).

    Every query is the elementwise max of two (possibly overlapping) power-of-two
    blocks, so gradients reach exactly the maximising positions.
    """

    def __init__(self, seq: torch.Tensor):
        self.n = seq.shape[0]
        self.dim = seq.shape[-1]
        self.levels = [seq]
        width = 1
        while 2 * width <= self.n:
            prev = self.levels[-1]
            self.levels.append(torch.maximum(prev[:-width], prev[width:]))
            width *= 2

    def query(self, starts, ends) -> torch.Tensor:
        starts = torch.as_tensor(starts, dtype=torch.long)
        ends = torch.as_tensor(ends, dtype=torch.long)
        out = self.levels[0].new_zeros(len(starts), self.dim)
        if len(starts) == 0:
            return out
        lengths = ends - starts
        if (lengths < 0).any() or (starts < 0).any() or (ends > self.n).any():
            raise ValueError("range out of bounds")
        nonempty = lengths > 0
        if not nonempty.any():
            return out
        s, e, ln = starts[nonempty], ends[nonempty], lengths[nonempty]
        k = torch.floor(torch.log2(ln.double())).long()
        # guard float rounding at exact powers of two
        k = torch.where((1 << (k + 1)) <= ln, k + 1, k)
        k = torch.where((1 << k) > ln, k - 1, k)
        res = torch.empty(len(s), self.dim, dtype=out.dtype, device=out.device)
        for level in k.unique().tolist():
            sel = k == level
            table = self.levels[level]
            left = table[s[sel]]
            right = table[e[sel] - (1 << level)]
            res[sel] = torch.maximum(left, right)
        return out.index_put((nonempty.nonzero(as_tuple=True)[0],), res)
