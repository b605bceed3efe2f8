import logging
from typing import Dict, List, Optional, Sequence

import torch

from form_rumor.async_wrapper import gather_in_pool, run_sync
from form_rumor.encoders.base import EncoderAdapter
from form_rumor.encoders.cache import FeatureCache, content_digest
from form_rumor.exceptions import EncoderUnavailableError
from form_rumor.ingestion import truncate_and_mark
from form_rumor.models.features import EncodedThread
from form_rumor.models.padding_policy import PaddingPolicy
from form_rumor.models.thread import ConversationThread

adapters = ("toy", "pretrained")


def build_encoder(adapter: str, **options) -> EncoderAdapter:
    if adapter == "toy":
        from form_rumor.encoders.toy import ToyEncoder

        return ToyEncoder(**options)
    if adapter == "pretrained":
        from form_rumor.encoders.pretrained import PretrainedEncoder

        return PretrainedEncoder(**options)
    raise EncoderUnavailableError(adapter, f"must be one of {', '.join(adapters)}")


def encode_thread(
    thread: ConversationThread,
    policy: PaddingPolicy,
    encoder: EncoderAdapter,
    cache: Optional[FeatureCache] = None,
) -> EncodedThread:
    """Encode a claim and its N response slots into fixed-shape raw features"""
    digest = None
    if cache is not None:
        digest = content_digest(thread)
        cached = cache.get(thread.id, digest)
        if cached is not None:
            return cached._replace(label=thread.label)

    truncated = truncate_and_mark(thread, policy)
    responses = truncated.thread.responses
    max_tokens = policy.max_tokens

    padding_slot = encoder.encode_padding_slot(max_tokens)
    slots = [encoder.encode_text(r.text, max_tokens) for r in responses]
    slots += [padding_slot] * (policy.max_responses - len(slots))

    encoded = EncodedThread(
        thread_id=thread.id,
        label=thread.label,
        claim_tokens=encoder.encode_text(thread.claim.text, max_tokens),
        claim_objects=encoder.encode_image(thread.claim.image_path, policy.max_objects),
        response_tokens=torch.stack([slot.matrix for slot in slots]),
        response_token_mask=torch.stack([slot.token_mask for slot in slots]),
        response_mask=torch.tensor(truncated.response_mask, dtype=torch.bool),
        response_ids=tuple(r.id for r in responses),
    )
    if cache is not None:
        cache.put(encoded, digest)
    return encoded


async def encode_corpus(
    threads: Sequence[ConversationThread],
    policy: PaddingPolicy,
    encoder: EncoderAdapter,
    cache: Optional[FeatureCache] = None,
    workers: int = 8,
) -> List[EncodedThread]:
    """Encode every thread on the worker pool; results keep corpus order"""

    def encode_one(thread: ConversationThread) -> EncodedThread:
        return encode_thread(thread, policy, encoder, cache)

    encoded = await gather_in_pool(encode_one, threads, limit=workers)
    if cache is not None:
        logging.info(
            f"Encoded {len(encoded)} threads | cache hits: {cache.hits} | "
            f"cache misses: {cache.misses}"
        )
    return encoded


def encode_corpus_sync(
    threads: Sequence[ConversationThread],
    policy: PaddingPolicy,
    encoder: EncoderAdapter,
    cache: Optional[FeatureCache] = None,
    workers: int = 8,
) -> Dict[str, EncodedThread]:
    encoded = run_sync(encode_corpus(threads, policy, encoder, cache, workers))
    return {item.thread_id: item for item in encoded}
