from enum import Enum
from typing import Literal

from pydantic import BaseModel, validator

from form_rumor.constants import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_VALIDATION_FRACTION,
)


class Ablation(str, Enum):
    none = "none"
    no_v = "no-v"
    no_f = "no-f"
    no_s = "no-s"

    def __str__(self):
        return self.value

    @property
    def uses_image(self) -> bool:
        return self is not Ablation.no_v

    @property
    def uses_reasoning(self) -> bool:
        return self is not Ablation.no_f

    @property
    def uses_selection_loss(self) -> bool:
        return self is not Ablation.no_s


# Display names for ablation tables
ablation_names = {
    Ablation.none: "FoRM",
    Ablation.no_v: "FoRM w/o V",
    Ablation.no_f: "FoRM w/o F",
    Ablation.no_s: "FoRM w/o S",
}


class TrainConfig(BaseModel):
    learning_rate: float = DEFAULT_LEARNING_RATE
    batch_size: int = DEFAULT_BATCH_SIZE
    epochs: int = DEFAULT_EPOCHS
    seed: int = 0
    top_k: int = 5
    ablation: Ablation = Ablation.none
    optimizer: Literal["adam"] = "adam"
    mask_padding: bool = False
    untie_wz: bool = False
    deterministic: bool = False
    validation_fraction: float = DEFAULT_VALIDATION_FRACTION

    class Config:
        allow_mutation = False

    @validator("learning_rate")
    def learning_rate_positive(cls, v):
        if v <= 0:
            raise ValueError("learning rate must be > 0")
        return v

    @validator("batch_size")
    def batch_size_at_least_one(cls, v):
        if v < 1:
            raise ValueError("batch size must be ≥ 1")
        return v

    @validator("epochs")
    def epochs_non_negative(cls, v):
        if v < 0:
            raise ValueError("epochs must be ≥ 0")
        return v

    @validator("top_k")
    def top_k_at_least_one(cls, v):
        if v < 1:
            raise ValueError("top-k must be ≥ 1")
        return v

    @validator("validation_fraction")
    def validation_fraction_in_range(cls, v):
        if not 0.0 <= v < 1.0:
            raise ValueError("validation fraction must be in [0, 1)")
        return v
