import hashlib
import math
from functools import lru_cache
from pathlib import Path
from typing import List, Optional

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from form_rumor.constants import CLS_TOKEN, PAD_TOKEN
from form_rumor.encoders.base import EncoderAdapter
from form_rumor.exceptions import ImageReadError
from form_rumor.ingestion import normalize_text


def hash_seed(*parts: str) -> int:
    digest = hashlib.blake2b("\x1f".join(parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def hash_embedding(token: str, dim: int, salt: str = "form-toy") -> np.ndarray:
    """Deterministic standard-normal float32 vector for a token"""
    rng = np.random.default_rng(hash_seed(salt, "token", token))
    return rng.standard_normal(dim).astype(np.float32)


class ToyEncoder(EncoderAdapter):
    """Hash-seeded embeddings for desk-scale runs and the test suite.

    Every token maps to a fixed pseudo-random vector. With ``contextual`` on,
    the start-token column is ``embed([CLS]) + mean(embed(tokens))`` so
    sentence features carry the text's content the way a transformer's [CLS]
    state does; off, every column is the plain token embedding.

    A token ``stem_suffix`` shares a ``stem_share`` fraction of its variance
    with the embedding of ``stem``, so tokens with a common stem sit at cosine
    ~``stem_share`` while unrelated tokens stay near orthogonal.
    """

    def __init__(
        self,
        d_text: int = 32,
        d_image: int = 16,
        contextual: bool = True,
        objects_per_image: Optional[int] = None,
        salt: str = "form-toy",
        stem_share: float = 0.5,
    ):
        if not 0.0 <= stem_share < 1.0:
            raise ValueError(f"stem_share must lie in [0, 1), got {stem_share}")
        self.d_text = d_text
        self.d_image = d_image
        self.contextual = contextual
        self.objects_per_image = objects_per_image
        self.salt = salt
        self.stem_share = stem_share
        mode = "ctx" if contextual else "flat"
        self.adapter_id = f"toy-{salt}-{d_text}x{d_image}-{mode}-s{stem_share:g}"
        self._embed = lru_cache(maxsize=65536)(self._embed_uncached)

    def _embed_uncached(self, token: str) -> torch.Tensor:
        vector = torch.from_numpy(hash_embedding(token, self.d_text, self.salt))
        stem, sep, _ = token.rpartition("_")
        if not (sep and stem and self.stem_share > 0):
            return vector
        own = math.sqrt(1.0 - self.stem_share)
        return own * vector + math.sqrt(self.stem_share) * self._embed(stem)

    def embed(self, token: str) -> torch.Tensor:
        return self._embed(token)

    def tokenize(self, text: str) -> List[str]:
        return normalize_text(text).split()

    def text_states(self, text: str, max_tokens: int) -> torch.Tensor:
        words = self.tokenize(text)[: max_tokens - 1]
        columns = [self.embed(CLS_TOKEN)] + [self.embed(word) for word in words]
        states = torch.stack(columns, dim=1)
        if self.contextual and words:
            states[:, 0] = states[:, 0] + states[:, 1:].mean(dim=1)
        return states

    def pad_embedding(self) -> torch.Tensor:
        return self.embed(PAD_TOKEN)

    def detect_objects(self, image_path: Path, max_objects: int) -> torch.Tensor:
        try:
            with Image.open(image_path) as image:
                image.verify()
        except (UnidentifiedImageError, OSError) as ex:
            raise ImageReadError(image_path, str(ex))

        content_seed = hash_seed(self.salt, "image", image_path.read_bytes().hex())
        if self.objects_per_image is not None:
            n_objects = min(self.objects_per_image, max_objects)
        else:
            n_objects = 1 + content_seed % max_objects
        rng = np.random.default_rng(content_seed)
        objects = rng.standard_normal((self.d_image, n_objects)).astype(np.float32)
        return torch.from_numpy(objects)
