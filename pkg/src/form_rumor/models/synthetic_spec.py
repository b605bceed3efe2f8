from pydantic import BaseModel, root_validator, validator

from form_rumor.constants import NUM_CLASSES


class SyntheticSpec(BaseModel):
    """Planted-signal corpus parameters"""

    n_threads: int = 40
    n_classes: int = NUM_CLASSES
    responses_per_thread: int = 10
    n_signal_responses: int = 3
    vocab_size: int = 200
    signal_strength: float = 1.0
    tokens_per_text: int = 6
    seed: int = 1

    class Config:
        allow_mutation = False

    @validator("n_classes")
    def four_classes(cls, v):
        if v != NUM_CLASSES:
            raise ValueError(f"n_classes is fixed at {NUM_CLASSES}")
        return v

    @validator("n_threads")
    def balanced_labels(cls, v):
        if v < NUM_CLASSES or v % NUM_CLASSES:
            raise ValueError(f"n_threads must be a positive multiple of {NUM_CLASSES}")
        return v

    @validator("signal_strength")
    def strength_in_unit_interval(cls, v):
        if not 0.0 <= v <= 1.0:
            raise ValueError("signal_strength must be in [0, 1]")
        return v

    @validator("vocab_size", "tokens_per_text")
    def strictly_positive(cls, v, field):
        if v < 1:
            raise ValueError(f"{field.name} must be strictly positive")
        return v

    @root_validator(skip_on_failure=True)
    def signal_fits_thread(cls, values):
        if not 0 <= values["n_signal_responses"] <= values["responses_per_thread"]:
            raise ValueError(
                "n_signal_responses must be between 0 and responses_per_thread"
            )
        return values
