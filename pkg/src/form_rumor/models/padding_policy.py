from pydantic import BaseModel, validator

from form_rumor.constants import (
    DEFAULT_MAX_OBJECTS,
    DEFAULT_MAX_RESPONSES,
    DEFAULT_MAX_TOKENS,
)


class PaddingPolicy(BaseModel):
    """Fixed tensor extents: N responses, M tokens per text, K image objects"""

    max_responses: int = DEFAULT_MAX_RESPONSES
    max_tokens: int = DEFAULT_MAX_TOKENS
    max_objects: int = DEFAULT_MAX_OBJECTS

    class Config:
        allow_mutation = False

    @validator("max_responses", "max_tokens", "max_objects")
    def strictly_positive(cls, v, field):
        if v < 1:
            raise ValueError(f"{field.name} must be strictly positive")
        return v
