from typing import Dict, NamedTuple, Tuple

import torch
from torch import nn

from form_rumor.models.features import EncodedThread
from form_rumor.models.model_dims import ModelDims
from form_rumor.models.train_config import Ablation
from form_rumor.network.claim_fusion import ClaimFusion, FusedClaim
from form_rumor.network.coarse_selection import CoarseSelection, SelectionResult
from form_rumor.network.fine_reasoning import (
    FineReasoning,
    GraphNode,
    PredictionDistribution,
)
from form_rumor.network.functional import init_parameters, matrix_parameter


class ThreadOutput(NamedTuple):
    fused: FusedClaim
    selection: SelectionResult
    nodes: Tuple[GraphNode, ...]
    prediction: PredictionDistribution

    @property
    def probs(self) -> torch.Tensor:
        return self.prediction.probs


class FoRMModel(nn.Module):
    """Claim fusion, coarse-grained selection and fine-grained reasoning.

    ``forward`` handles one encoded thread; the trainer accumulates a batch.
    """

    def __init__(
        self,
        dims: ModelDims,
        top_k: int = 5,
        ablation: Ablation = Ablation.none,
        mask_padding: bool = False,
        untie_wz: bool = False,
    ):
        super().__init__()
        self.dims = dims
        self.top_k = top_k
        self.ablation = ablation
        self.mask_padding = mask_padding
        self.untie_wz = untie_wz

        self.W_t = matrix_parameter(dims.d_text, dims.d_text)
        self.W_z = matrix_parameter(dims.d_model, dims.d_text)
        self.fusion = ClaimFusion(dims, use_image=ablation.uses_image)
        self.selection = CoarseSelection(dims)
        if ablation.uses_reasoning:
            self.reasoning = FineReasoning(dims, untie_wz=untie_wz)
        init_parameters(self)

    def architecture(self) -> Dict:
        return {
            "dims": self.dims.dict(),
            "top_k": self.top_k,
            "ablation": self.ablation.value,
            "mask_padding": self.mask_padding,
            "untie_wz": self.untie_wz,
        }

    def _graph_nodes(
        self, encoded: EncodedThread, selection: SelectionResult
    ) -> Tuple[GraphNode, ...]:
        dtype = self.W_t.dtype
        if selection.selected_indices:
            index = torch.tensor(selection.selected_indices, dtype=torch.long)
            H = encoded.response_tokens[index].to(dtype)
            token_mask = encoded.response_token_mask[index]
            indices = selection.selected_indices
        else:
            # No real responses: a single virtual node built from the claim itself
            H = encoded.claim_tokens.matrix.to(dtype).unsqueeze(0)
            token_mask = encoded.claim_tokens.token_mask.unsqueeze(0)
            indices = (-1,)
        z = torch.tanh(H[:, :, 0] @ self.W_t.T)
        return tuple(self.reasoning.build_nodes(H, token_mask, z, indices))

    def forward(self, encoded: EncodedThread) -> ThreadOutput:
        fused = self.fusion(
            encoded.claim_tokens, encoded.claim_objects, self.mask_padding
        )
        Z = encoded.response_sentences(self.W_t)
        selection = self.selection(
            fused.s_m,
            Z,
            self.W_z,
            encoded.response_mask,
            self.top_k,
            self.mask_padding,
        )

        if not self.ablation.uses_reasoning:
            empty = selection.y1_logits.new_zeros(0)
            prediction = PredictionDistribution(
                probs=torch.softmax(selection.y1_logits, dim=-1),
                per_node_probs=empty.reshape(0, self.dims.n_classes),
                node_significance=empty,
            )
            return ThreadOutput(fused, selection, (), prediction)

        nodes = self._graph_nodes(encoded, selection)
        prediction = self.reasoning.graph_predict(
            nodes, fused, self.W_z, self.mask_padding
        )
        return ThreadOutput(fused, selection, nodes, prediction)

    @torch.no_grad()
    def predict(self, encoded: EncodedThread) -> int:
        return int(torch.argmax(self(encoded).probs))
