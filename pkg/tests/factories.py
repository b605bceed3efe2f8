"""Random encoded threads and models for property and oracle tests."""
from typing import Optional

import torch

from form_rumor.models.features import EncodedThread, ObjectFeatures, TokenFeatures
from form_rumor.models.model_dims import ModelDims
from form_rumor.models.rumor_label import RumorLabel
from form_rumor.models.thread import Claim, ConversationThread, ResponseTweet
from form_rumor.network.form_model import FoRMModel


def prefix_mask(length: int, real: int) -> torch.Tensor:
    mask = torch.zeros(length, dtype=torch.bool)
    mask[:real] = True
    return mask


def random_encoded(
    dims: ModelDims,
    n_real: int = 4,
    n_slots: Optional[int] = None,
    max_tokens: int = 3,
    max_objects: int = 2,
    real_tokens: Optional[int] = None,
    real_objects: Optional[int] = None,
    seed: int = 0,
    label: int = 0,
    dtype: torch.dtype = torch.float64,
) -> EncodedThread:
    """Gaussian features; padded positions hold unrelated random values"""
    generator = torch.Generator().manual_seed(seed)
    n_slots = n_real if n_slots is None else n_slots
    real_tokens = max_tokens if real_tokens is None else real_tokens
    real_objects = max_objects if real_objects is None else real_objects

    def gaussian(*shape):
        return torch.randn(*shape, generator=generator, dtype=dtype)

    token_mask = prefix_mask(max_tokens, real_tokens)
    return EncodedThread(
        thread_id=f"t{seed}",
        label=RumorLabel(label),
        claim_tokens=TokenFeatures(gaussian(dims.d_text, max_tokens), token_mask),
        claim_objects=ObjectFeatures(
            gaussian(dims.d_image, max_objects), prefix_mask(max_objects, real_objects)
        ),
        response_tokens=gaussian(n_slots, dims.d_text, max_tokens),
        response_token_mask=token_mask.repeat(n_slots, 1),
        response_mask=prefix_mask(n_slots, n_real),
        response_ids=tuple(f"t{seed}-r{i}" for i in range(n_real)),
    )


def pad_encoded(
    encoded: EncodedThread,
    n_slots: int,
    max_tokens: int,
    max_objects: int,
    seed: int = 99,
) -> EncodedThread:
    """Grow every padded extent, filling the new positions with noise"""
    generator = torch.Generator().manual_seed(seed)
    dtype = encoded.response_tokens.dtype

    def grow(matrix, mask, width):
        extra = width - matrix.shape[-1]
        noise = torch.randn(*matrix.shape[:-1], extra, generator=generator, dtype=dtype)
        padding = torch.zeros(*mask.shape[:-1], extra, dtype=torch.bool)
        return torch.cat([matrix, noise], dim=-1), torch.cat([mask, padding], dim=-1)

    claim_tokens = grow(*encoded.claim_tokens, max_tokens)
    claim_objects = grow(*encoded.claim_objects, max_objects)
    response_tokens, response_token_mask = grow(
        encoded.response_tokens, encoded.response_token_mask, max_tokens
    )

    extra_slots = n_slots - encoded.num_slots
    d_text = response_tokens.shape[1]
    response_tokens = torch.cat(
        [
            response_tokens,
            torch.randn(
                extra_slots, d_text, max_tokens, generator=generator, dtype=dtype
            ),
        ]
    )
    response_token_mask = torch.cat(
        [response_token_mask, torch.zeros(extra_slots, max_tokens, dtype=torch.bool)]
    )
    response_mask = torch.cat(
        [encoded.response_mask, torch.zeros(extra_slots, dtype=torch.bool)]
    )
    return encoded._replace(
        claim_tokens=TokenFeatures(*claim_tokens),
        claim_objects=ObjectFeatures(*claim_objects),
        response_tokens=response_tokens,
        response_token_mask=response_token_mask,
        response_mask=response_mask,
    )


def permute_responses(encoded: EncodedThread, order) -> EncodedThread:
    index = torch.as_tensor(order)
    return encoded._replace(
        response_tokens=encoded.response_tokens[index],
        response_token_mask=encoded.response_token_mask[index],
        response_mask=encoded.response_mask[index],
        response_ids=tuple(encoded.response_ids[i] for i in order),
    )


def seeded_model(
    dims: ModelDims, seed: int = 0, top_k: int = 3, **options
) -> FoRMModel:
    torch.manual_seed(seed)
    return FoRMModel(dims, top_k=top_k, **options).double()


def make_thread(
    thread_id: str,
    label="false",
    claim_text: str = "the claim",
    responses=(),
    image_path=None,
) -> ConversationThread:
    return ConversationThread(
        claim=Claim(id=thread_id, text=claim_text, image_path=image_path),
        responses=tuple(
            ResponseTweet(id=f"{thread_id}-r{i}", text=text, timestamp=i)
            for i, text in enumerate(responses)
        ),
        label=label,
    )
