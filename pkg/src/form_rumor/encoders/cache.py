"""Persistent per-thread feature cache.

Record layout: ``<u4`` header length, UTF-8 JSON header, then the arrays
listed in ``header["arrays"]`` as contiguous little-endian float32 data.
Entries written by a different adapter or padding policy, or for a thread whose
content has since changed, are ignored.
"""
import hashlib
import json
import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import torch

from form_rumor.constants import CACHE_SUFFIX
from form_rumor.models.features import EncodedThread, ObjectFeatures, TokenFeatures
from form_rumor.models.padding_policy import PaddingPolicy
from form_rumor.models.rumor_label import RumorLabel
from form_rumor.models.thread import ConversationThread

_header_length = struct.Struct("<I")

_array_order = (
    "claim_tokens",
    "claim_token_mask",
    "claim_objects",
    "claim_object_mask",
    "response_tokens",
    "response_token_mask",
    "response_mask",
)
_mask_arrays = {
    "claim_token_mask",
    "claim_object_mask",
    "response_token_mask",
    "response_mask",
}


def content_digest(thread: ConversationThread) -> str:
    """SHA-256 over the claim, its image bytes, the responses and the label"""
    image = thread.claim.image_path
    image_digest = None
    if image is not None and Path(image).is_file():
        image_digest = hashlib.sha256(Path(image).read_bytes()).hexdigest()
    payload = {
        "claim": thread.claim.text,
        "image": None if image is None else str(image),
        "image_digest": image_digest,
        "responses": [[r.id, r.text] for r in thread.responses],
        "label": int(thread.label),
    }
    encoded = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def _arrays_of(encoded: EncodedThread) -> Dict[str, torch.Tensor]:
    return {
        "claim_tokens": encoded.claim_tokens.matrix,
        "claim_token_mask": encoded.claim_tokens.token_mask,
        "claim_objects": encoded.claim_objects.matrix,
        "claim_object_mask": encoded.claim_objects.object_mask,
        "response_tokens": encoded.response_tokens,
        "response_token_mask": encoded.response_token_mask,
        "response_mask": encoded.response_mask,
    }


class FeatureCache:
    def __init__(self, directory: Path, adapter_id: str, policy: PaddingPolicy):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.adapter_id = adapter_id
        self.policy = policy
        self.hits = 0
        self.misses = 0

    def path_for(self, thread_id: str) -> Path:
        digest = hashlib.sha1(thread_id.encode("utf-8")).hexdigest()  # nosec
        return self.directory / f"{digest}{CACHE_SUFFIX}"

    def put(self, encoded: EncodedThread, digest: str) -> Path:
        arrays = {
            name: np.ascontiguousarray(tensor.detach().cpu().numpy(), dtype="<f4")
            for name, tensor in _arrays_of(encoded).items()
        }
        header = {
            "thread_id": encoded.thread_id,
            "content_digest": digest,
            "label": int(encoded.label),
            "response_ids": list(encoded.response_ids),
            "dtype": "float32",
            "byteorder": "little",
            "adapter_id": self.adapter_id,
            "policy": self.policy.dict(),
            "arrays": list(_array_order),
            "shapes": {name: list(arrays[name].shape) for name in _array_order},
        }
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")

        path = self.path_for(encoded.thread_id)
        # Write-then-rename so concurrent writers never leave a torn entry
        with tempfile.NamedTemporaryFile(
            dir=self.directory, prefix=".tmp-", suffix=CACHE_SUFFIX, delete=False
        ) as handle:
            handle.write(_header_length.pack(len(header_bytes)))
            handle.write(header_bytes)
            for name in _array_order:
                handle.write(arrays[name].tobytes())
            temp_name = handle.name
        os.replace(temp_name, path)
        return path

    def get(self, thread_id: str, digest: str) -> Optional[EncodedThread]:
        path = self.path_for(thread_id)
        if not path.is_file():
            self.misses += 1
            return None

        raw = path.read_bytes()
        (length,) = _header_length.unpack_from(raw, 0)
        header = json.loads(raw[_header_length.size : _header_length.size + length])
        stale = (
            header["adapter_id"] != self.adapter_id
            or header["policy"] != self.policy.dict()
            or header.get("content_digest") != digest
        )
        if stale:
            logging.debug(f"Stale cache entry for thread {thread_id}, re-encoding")
            self.misses += 1
            return None

        offset = _header_length.size + length
        tensors: Dict[str, torch.Tensor] = {}
        for name in header["arrays"]:
            shape = header["shapes"][name]
            count = int(np.prod(shape)) if shape else 1
            array = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
            offset += array.nbytes
            tensor = torch.from_numpy(array.reshape(shape).astype(np.float32))
            tensors[name] = tensor.bool() if name in _mask_arrays else tensor

        self.hits += 1
        return EncodedThread(
            thread_id=header["thread_id"],
            label=RumorLabel(header["label"]),
            claim_tokens=TokenFeatures(
                tensors["claim_tokens"], tensors["claim_token_mask"]
            ),
            claim_objects=ObjectFeatures(
                tensors["claim_objects"], tensors["claim_object_mask"]
            ),
            response_tokens=tensors["response_tokens"],
            response_token_mask=tensors["response_token_mask"],
            response_mask=tensors["response_mask"],
            response_ids=tuple(header["response_ids"]),
        )
