"""Cross-attention fusion of the claim's text tokens and image objects."""
from typing import NamedTuple, Optional, Tuple

import torch
from torch import nn

from form_rumor.models.features import ObjectFeatures, TokenFeatures
from form_rumor.models.model_dims import ModelDims
from form_rumor.network.functional import cosine_matrix, masked_mean, matrix_parameter


class FusedClaim(NamedTuple):
    S_m: torch.Tensor  # d x (M + K), or d x M without the image
    s_m: torch.Tensor  # d
    T_s: torch.Tensor  # d x M
    V_s: Optional[torch.Tensor]  # d x K
    column_mask: torch.Tensor  # M + K (or M), bool


def cross_align(
    queries: torch.Tensor,
    keys: torch.Tensor,
    query_mask: Optional[torch.Tensor] = None,
    key_mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Mean over queries of the cosine-weighted sum of keys.

    The raw cosine similarities are the weights, no softmax. Masked keys get
    weight 0 and masked queries drop out of the mean.
    """
    weights = cosine_matrix(queries, keys)  # a x b
    if key_mask is not None:
        weights = weights * key_mask.to(weights.dtype)
    aligned = keys @ weights.T  # d x a
    return masked_mean(aligned, query_mask)


def cross_align_text_to_image(
    T_s: torch.Tensor,
    V_s: torch.Tensor,
    token_mask: Optional[torch.Tensor] = None,
    object_mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    return cross_align(T_s, V_s, token_mask, object_mask)


def cross_align_image_to_text(
    V_s: torch.Tensor,
    T_s: torch.Tensor,
    object_mask: Optional[torch.Tensor] = None,
    token_mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    return cross_align(V_s, T_s, object_mask, token_mask)


class ClaimFusion(nn.Module):
    def __init__(self, dims: ModelDims, use_image: bool = True):
        super().__init__()
        self.use_image = use_image
        self.W_h = matrix_parameter(dims.d_model, dims.d_text)
        if use_image:
            self.W_o = matrix_parameter(dims.d_model, dims.d_image)
            self.W_t2o = matrix_parameter(dims.d_model, dims.d_model)
            self.W_o2t = matrix_parameter(dims.d_model, dims.d_model)

    def project_modalities(
        self, H_s: torch.Tensor, O_s: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        return torch.tanh(self.W_h @ H_s), torch.tanh(self.W_o @ O_s)

    def fuse(self, s_t2o: torch.Tensor, s_o2t: torch.Tensor) -> torch.Tensor:
        return torch.tanh(self.W_o2t @ s_o2t) + torch.tanh(self.W_t2o @ s_t2o)

    def forward(
        self,
        claim_tokens: TokenFeatures,
        claim_objects: ObjectFeatures,
        mask_padding: bool = False,
    ) -> FusedClaim:
        H_s = claim_tokens.matrix.to(self.W_h.dtype)
        token_mask = claim_tokens.token_mask

        if not self.use_image:
            T_s = torch.tanh(self.W_h @ H_s)
            # Both terms of s_m are image-aligned; without the image they are zero
            s_m = T_s.new_zeros(T_s.shape[0])
            return FusedClaim(T_s, s_m, T_s, None, token_mask)

        O_s = claim_objects.matrix.to(self.W_o.dtype)
        object_mask = claim_objects.object_mask
        T_s, V_s = self.project_modalities(H_s, O_s)

        query_tokens = token_mask if mask_padding else None
        query_objects = object_mask if mask_padding else None
        s_t2o = cross_align_text_to_image(T_s, V_s, query_tokens, query_objects)
        s_o2t = cross_align_image_to_text(V_s, T_s, query_objects, query_tokens)

        return FusedClaim(
            S_m=torch.cat([T_s, V_s], dim=1),
            s_m=self.fuse(s_t2o, s_o2t),
            T_s=T_s,
            V_s=V_s,
            column_mask=torch.cat([token_mask, object_mask]),
        )
