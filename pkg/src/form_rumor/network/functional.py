import math
from typing import Optional

import torch
from torch import nn

_norm_floor = 1e-12


def unit_columns(matrix: torch.Tensor) -> torch.Tensor:
    """Scale every column (dim -2 indexes features) to unit length.

    Zero columns stay zero, so any cosine against them is 0.
    """
    norms = torch.linalg.vector_norm(matrix, dim=-2, keepdim=True)
    return matrix / norms.clamp_min(_norm_floor)


def cosine_matrix(queries: torch.Tensor, keys: torch.Tensor) -> torch.Tensor:
    """(d x a, d x b) -> a x b pairwise cosine similarities"""
    return unit_columns(queries).transpose(-1, -2) @ unit_columns(keys)


def masked_softmax(
    scores: torch.Tensor, mask: Optional[torch.Tensor] = None, dim: int = -1
) -> torch.Tensor:
    """Softmax over ``dim`` restricted to mask-true entries.

    Masked entries get probability 0; a fully masked slice is all zeros.
    """
    if mask is None:
        return torch.softmax(scores, dim=dim)
    mask = mask.expand_as(scores)
    filled = scores.masked_fill(~mask, torch.finfo(scores.dtype).min)
    return torch.softmax(filled, dim=dim) * mask


def masked_mean(
    columns: torch.Tensor, mask: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """Mean of the columns of a d x n matrix, over mask-true columns only"""
    if mask is None:
        return columns.mean(dim=-1)
    weights = mask.to(columns.dtype)
    return (columns @ weights) / weights.sum().clamp_min(1.0)


def init_parameters(module: nn.Module) -> None:
    """U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for matrices, zeros for biases"""
    for name, parameter in module.named_parameters():
        with torch.no_grad():
            if parameter.dim() >= 2:
                bound = 1.0 / math.sqrt(parameter.shape[1])
                parameter.uniform_(-bound, bound)
            else:
                parameter.zero_()


def matrix_parameter(rows: int, columns: int) -> nn.Parameter:
    return nn.Parameter(torch.empty(rows, columns))
