from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, validator

from form_rumor.models.rumor_label import RumorLabel


class ResponseTweet(BaseModel):
    id: str
    text: str
    timestamp: Optional[int] = None

    class Config:
        allow_mutation = False


class Claim(BaseModel):
    id: str
    text: str
    image_path: Optional[Path] = None

    class Config:
        allow_mutation = False


class ConversationThread(BaseModel):
    """A claim with its chronologically ordered responding tweets"""

    claim: Claim
    responses: Tuple[ResponseTweet, ...] = ()
    label: RumorLabel

    class Config:
        allow_mutation = False

    @validator("label", pre=True)
    def parse_label(cls, v):
        if isinstance(v, str) and not v.isdigit():
            return RumorLabel.parse(v)
        return RumorLabel(int(v))

    @property
    def id(self) -> str:
        return self.claim.id

    def with_responses(self, responses: List[ResponseTweet]) -> "ConversationThread":
        return ConversationThread(
            claim=self.claim, responses=tuple(responses), label=self.label
        )


class TruncatedThread(BaseModel):
    """A thread cut to at most N responses plus its per-slot validity mask"""

    thread: ConversationThread
    response_mask: Tuple[bool, ...]

    class Config:
        allow_mutation = False

    @property
    def real_slots(self) -> int:
        return sum(self.response_mask)
