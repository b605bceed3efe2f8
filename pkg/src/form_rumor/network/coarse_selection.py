"""Post-level relevance scoring and top-k filtering of responding tweets."""
from typing import NamedTuple, Optional, Tuple

import torch
from torch import nn

from form_rumor.exceptions import SelectionParameterError
from form_rumor.models.model_dims import ModelDims
from form_rumor.network.functional import masked_softmax, matrix_parameter


class SelectionResult(NamedTuple):
    alpha: torch.Tensor  # N
    y1_logits: torch.Tensor  # 4
    selected_indices: Tuple[int, ...]
    selected_scores: Tuple[float, ...]


def select_top_k(
    alpha: torch.Tensor, response_mask: torch.Tensor, k: int
) -> Tuple[Tuple[int, ...], Tuple[float, ...]]:
    """Indices of the k largest alpha among real responses.

    Ties go to the lower slot index. The cut is a hard, gradient-free choice.
    """
    if k < 1:
        raise SelectionParameterError("top-k must be ≥ 1")
    scores = alpha.detach()
    # Stable descending sort keeps equal scores in slot order
    order = torch.sort(scores, descending=True, stable=True).indices.tolist()
    real = response_mask.tolist()
    chosen = [index for index in order if real[index]][:k]
    return tuple(chosen), tuple(float(scores[index]) for index in chosen)


class CoarseSelection(nn.Module):
    def __init__(self, dims: ModelDims):
        super().__init__()
        self.W_a = matrix_parameter(1, 2 * dims.d_model)
        self.sel_mlp = nn.Sequential(
            nn.Linear(dims.d_text, dims.d_hidden),
            nn.ReLU(),
            nn.Linear(dims.d_hidden, dims.n_classes),
        )

    def score_responses(
        self,
        s_m: torch.Tensor,
        Z: torch.Tensor,
        W_z: torch.Tensor,
        response_mask: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """alpha = softmax(W_a [s_m 1^T ; tanh(W_z Z)]) over the N responses"""
        n_responses = Z.shape[1]
        A = torch.cat(
            [s_m.unsqueeze(1).expand(-1, n_responses), torch.tanh(W_z @ Z)], dim=0
        )
        return masked_softmax((self.W_a @ A).squeeze(0), response_mask)

    def aux_predict(self, alpha: torch.Tensor, Z: torch.Tensor) -> torch.Tensor:
        return self.sel_mlp(Z @ alpha)

    def forward(
        self,
        s_m: torch.Tensor,
        Z: torch.Tensor,
        W_z: torch.Tensor,
        response_mask: torch.Tensor,
        k: int,
        mask_padding: bool = False,
    ) -> SelectionResult:
        alpha = self.score_responses(
            s_m, Z, W_z, response_mask if mask_padding else None
        )
        y1_logits = self.aux_predict(alpha, Z)
        # Padding slots are never selected, masked or not
        indices, scores = select_top_k(alpha, response_mask, k)
        return SelectionResult(alpha, y1_logits, indices, scores)
