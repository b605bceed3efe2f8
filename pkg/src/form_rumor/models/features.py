"""Tensor bundles produced by the encoders.

Matrices follow the column convention: features along dim 0, positions
(tokens, objects, responses) along the last dim.
"""
from typing import NamedTuple, Tuple

import torch

from form_rumor.models.rumor_label import RumorLabel


class TokenFeatures(NamedTuple):
    matrix: torch.Tensor  # d_t x M
    token_mask: torch.Tensor  # M, bool

    @property
    def cls(self) -> torch.Tensor:
        return self.matrix[:, 0]


class ObjectFeatures(NamedTuple):
    matrix: torch.Tensor  # d_i x K
    object_mask: torch.Tensor  # K, bool


class SentenceFeature(NamedTuple):
    vector: torch.Tensor  # d_t


def sentence_of(tokens: TokenFeatures, W_t: torch.Tensor) -> SentenceFeature:
    """z = tanh(W_t . H[:, 0]); W_t is shared by the claim and every response"""
    return SentenceFeature(torch.tanh(W_t @ tokens.cls.to(W_t.dtype)))


class EncodedThread(NamedTuple):
    """Raw (pre-projection) encoder output for one thread.

    Sentence features are not stored: they depend on the trainable W_t and are
    derived on demand with :func:`sentence_of` and :meth:`response_sentences`.
    """

    thread_id: str
    label: RumorLabel
    claim_tokens: TokenFeatures
    claim_objects: ObjectFeatures
    response_tokens: torch.Tensor  # N x d_t x M
    response_token_mask: torch.Tensor  # N x M, bool
    response_mask: torch.Tensor  # N, bool
    response_ids: Tuple[str, ...]  # real responses only, in slot order

    @property
    def num_slots(self) -> int:
        return self.response_tokens.shape[0]

    def response_sentences(self, W_t: torch.Tensor) -> torch.Tensor:
        """Z, the d_t x N matrix of response sentence features"""
        cls_columns = self.response_tokens[:, :, 0].to(W_t.dtype)  # N x d_t
        return torch.tanh(W_t @ cls_columns.T)
