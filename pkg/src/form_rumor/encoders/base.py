from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional

import torch

from form_rumor.exceptions import ImageReadError
from form_rumor.models.features import ObjectFeatures, TokenFeatures


class EncoderAdapter(ABC):
    """Turns claim/response text into token states and images into objects.

    Subclasses provide the raw states; padding to exactly M tokens and K
    objects, and the masks, are applied here so every adapter obeys the same
    shape and padding rules.
    """

    adapter_id: str
    d_text: int
    d_image: int

    @abstractmethod
    def text_states(self, text: str, max_tokens: int) -> torch.Tensor:
        """d_t x L hidden states, 1 <= L <= max_tokens, column 0 the start token"""

    @abstractmethod
    def pad_embedding(self) -> torch.Tensor:
        """The d_t vector used for every padded token column"""

    @abstractmethod
    def detect_objects(self, image_path: Path, max_objects: int) -> torch.Tensor:
        """d_i x n object features for a readable image, 0 <= n <= max_objects"""

    def encode_text(self, text: str, max_tokens: int) -> TokenFeatures:
        states = self.text_states(text, max_tokens)[:, :max_tokens]
        n_real = states.shape[1]
        matrix = self.pad_embedding().unsqueeze(1).repeat(1, max_tokens)
        matrix[:, :n_real] = states
        token_mask = torch.zeros(max_tokens, dtype=torch.bool)
        token_mask[:n_real] = True
        return TokenFeatures(matrix, token_mask)

    def encode_padding_slot(self, max_tokens: int) -> TokenFeatures:
        """All-[PAD] token matrix used for empty response slots"""
        matrix = self.pad_embedding().unsqueeze(1).repeat(1, max_tokens)
        return TokenFeatures(matrix, torch.zeros(max_tokens, dtype=torch.bool))

    def encode_image(
        self, image_path: Optional[Path], max_objects: int
    ) -> ObjectFeatures:
        # Missing objects are one-padded; a claim without an image is all padding
        matrix = torch.ones(self.d_image, max_objects)
        object_mask = torch.zeros(max_objects, dtype=torch.bool)
        if image_path is None:
            return ObjectFeatures(matrix, object_mask)

        image_path = Path(image_path)
        if not image_path.is_file():
            raise ImageReadError(image_path, "no such file")
        objects = self.detect_objects(image_path, max_objects)[:, :max_objects]
        n_objects = objects.shape[1]
        matrix[:, :n_objects] = objects
        object_mask[:n_objects] = True
        return ObjectFeatures(matrix, object_mask)
