"""Relation attention over the selected responses and the fused claim.

The graph is fully connected with self-loops. For node q, every node p
(including q) sends a message z_pq built from token-to-token and
token-to-object attention of p's tokens against [S_m, T_q]; the messages are
weighted by an MLP and the node predicts a class distribution. A second head
scores node significance against the claim, and the thread prediction is the
significance-weighted mixture of the per-node distributions.

Batched tensors index nodes first: messages are ``P x Q x d`` with
``messages[p, q] = z_pq``.
"""
from typing import List, NamedTuple, Optional, Sequence

import torch
from torch import nn

from form_rumor.models.model_dims import ModelDims
from form_rumor.network.claim_fusion import FusedClaim
from form_rumor.network.functional import (
    cosine_matrix,
    masked_softmax,
    matrix_parameter,
)


class GraphNode(NamedTuple):
    index: int  # response slot, -1 for the claim-only virtual node
    H: torch.Tensor  # d_t x M
    token_mask: torch.Tensor  # M, bool
    T_p: torch.Tensor  # d x M, tanh(W_p H)
    T_q: torch.Tensor  # d x M, tanh(W_q H)
    z: torch.Tensor  # d_t sentence feature


class PredictionDistribution(NamedTuple):
    probs: torch.Tensor  # 4
    per_node_probs: torch.Tensor  # |G| x 4
    node_significance: torch.Tensor  # |G|


class FineReasoning(nn.Module):
    def __init__(self, dims: ModelDims, untie_wz: bool = False):
        super().__init__()
        d = dims.d_model
        self.W_p = matrix_parameter(d, dims.d_text)
        self.W_q = matrix_parameter(d, dims.d_text)
        self.W_pq = matrix_parameter(1, d)
        self.lam_mlp = nn.Sequential(
            nn.Linear(3 * d, dims.d_hidden), nn.ReLU(), nn.Linear(dims.d_hidden, 1)
        )
        self.W_y = matrix_parameter(dims.n_classes, 3 * d)
        self.W_sq = matrix_parameter(1, d)
        if untie_wz:
            self.W_z_reason = matrix_parameter(d, dims.d_text)

    def sentence_projection(self, W_z: torch.Tensor) -> torch.Tensor:
        return getattr(self, "W_z_reason", W_z)

    def build_nodes(
        self,
        H: torch.Tensor,
        token_mask: torch.Tensor,
        z: torch.Tensor,
        indices: Sequence[int],
    ) -> List[GraphNode]:
        """Nodes from stacked token matrices (G x d_t x M) and sentences (G x d_t)"""
        T_p = torch.tanh(self.W_p @ H)
        T_q = torch.tanh(self.W_q @ H)
        return [
            GraphNode(index, H[g], token_mask[g], T_p[g], T_q[g], z[g])
            for g, index in enumerate(indices)
        ]

    def _messages(
        self,
        T_p: torch.Tensor,
        p_mask: Optional[torch.Tensor],
        T_q: torch.Tensor,
        q_mask: Optional[torch.Tensor],
        S_m: torch.Tensor,
        claim_mask: Optional[torch.Tensor],
    ) -> torch.Tensor:
        """P x d x M queries against Q key sets [S_m, T_q] -> P x Q x d messages"""
        n_q = T_q.shape[0]
        keys = torch.cat([S_m.unsqueeze(0).expand(n_q, -1, -1), T_q], dim=2)
        key_mask = None
        if claim_mask is not None:
            key_mask = torch.cat(
                [claim_mask.unsqueeze(0).expand(n_q, -1), q_mask], dim=1
            )
            key_mask = key_mask[None, :, None, :]  # 1 x Q x 1 x (2M + K)

        C = cosine_matrix(T_p.unsqueeze(1), keys.unsqueeze(0))  # P x Q x M x (2M+K)
        attention = masked_softmax(C, key_mask)
        enriched = keys.unsqueeze(0) @ attention.transpose(-1, -2) + T_p.unsqueeze(1)

        token_scores = (self.W_pq @ enriched).squeeze(-2)  # P x Q x M
        beta = masked_softmax(
            token_scores, None if p_mask is None else p_mask[:, None, :]
        )
        return (enriched @ beta.unsqueeze(-1)).squeeze(-1)

    def _propagate(
        self, messages: torch.Tensor, s_m: torch.Tensor, z_proj: torch.Tensor
    ) -> torch.Tensor:
        """P x Q x d messages, Q x d projected sentences -> Q x 2d node states"""
        n_p, n_q, d = messages.shape
        features = torch.cat(
            [
                messages,
                s_m.expand(n_p, n_q, d),
                z_proj.unsqueeze(0).expand(n_p, -1, -1),
            ],
            dim=-1,
        )
        lam = torch.softmax(self.lam_mlp(features).squeeze(-1), dim=0)  # over p
        aggregated = (lam.unsqueeze(-1) * messages).sum(dim=0)
        return torch.cat([aggregated, z_proj], dim=-1)

    def _node_probs(self, v: torch.Tensor, s_m: torch.Tensor) -> torch.Tensor:
        joined = torch.cat([v, s_m.expand(*v.shape[:-1], -1)], dim=-1)
        return torch.softmax(joined @ self.W_y.T, dim=-1)

    def _significance(
        self,
        T_q: torch.Tensor,
        q_mask: Optional[torch.Tensor],
        S_m: torch.Tensor,
        claim_mask: Optional[torch.Tensor],
    ) -> torch.Tensor:
        C = cosine_matrix(S_m.unsqueeze(0), T_q)  # G x (M+K) x M
        attention = masked_softmax(C, None if q_mask is None else q_mask[:, None, :])
        S_sq = T_q @ attention.transpose(-1, -2) + S_m  # G x d x (M+K)
        if claim_mask is not None:
            S_sq = S_sq * claim_mask.to(S_sq.dtype)
        raw = (self.W_sq @ S_sq.sum(dim=-1).unsqueeze(-1)).reshape(-1)
        return torch.softmax(raw, dim=0)

    def neighbor_message(
        self,
        node_p: GraphNode,
        node_q: GraphNode,
        fused: FusedClaim,
        mask_padding: bool = False,
    ) -> torch.Tensor:
        masks = (node_p.token_mask, node_q.token_mask, fused.column_mask)
        p_mask, q_mask, claim_mask = masks if mask_padding else (None, None, None)
        return self._messages(
            node_p.T_p.unsqueeze(0),
            None if p_mask is None else p_mask.unsqueeze(0),
            node_q.T_q.unsqueeze(0),
            None if q_mask is None else q_mask.unsqueeze(0),
            fused.S_m,
            claim_mask,
        )[0, 0]

    def propagate(
        self,
        node_q: GraphNode,
        messages: torch.Tensor,
        s_m: torch.Tensor,
        W_z: torch.Tensor,
    ) -> torch.Tensor:
        """v_q from the P x d messages z_pq sent to node q"""
        z_proj = torch.tanh(self.sentence_projection(W_z) @ node_q.z)
        return self._propagate(messages.unsqueeze(1), s_m, z_proj.unsqueeze(0))[0]

    def node_predict(self, v_q: torch.Tensor, s_m: torch.Tensor) -> torch.Tensor:
        return self._node_probs(v_q, s_m)

    def node_significance(
        self,
        nodes: Sequence[GraphNode],
        fused: FusedClaim,
        mask_padding: bool = False,
    ) -> torch.Tensor:
        T_q = torch.stack([node.T_q for node in nodes])
        if not mask_padding:
            return self._significance(T_q, None, fused.S_m, None)
        q_mask = torch.stack([node.token_mask for node in nodes])
        return self._significance(T_q, q_mask, fused.S_m, fused.column_mask)

    def graph_predict(
        self,
        nodes: Sequence[GraphNode],
        fused: FusedClaim,
        W_z: torch.Tensor,
        mask_padding: bool = False,
    ) -> PredictionDistribution:
        """P(y|G,S) = sum_q P(y|n_q,G,S) P(n_q|G,S)"""
        T_p = torch.stack([node.T_p for node in nodes])
        T_q = torch.stack([node.T_q for node in nodes])
        z = torch.stack([node.z for node in nodes])
        token_mask, claim_mask = None, None
        if mask_padding:
            token_mask = torch.stack([node.token_mask for node in nodes])
            claim_mask = fused.column_mask

        messages = self._messages(
            T_p, token_mask, T_q, token_mask, fused.S_m, claim_mask
        )
        z_proj = torch.tanh(z @ self.sentence_projection(W_z).T)
        v = self._propagate(messages, fused.s_m, z_proj)
        per_node_probs = self._node_probs(v, fused.s_m)
        significance = self._significance(T_q, token_mask, fused.S_m, claim_mask)
        return PredictionDistribution(
            probs=significance @ per_node_probs,
            per_node_probs=per_node_probs,
            node_significance=significance,
        )
