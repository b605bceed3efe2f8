from pydantic import BaseModel, validator

from form_rumor.constants import NUM_CLASSES


class ModelDims(BaseModel):
    """Feature widths. Defaults are the published BERT / bottom-up sizes."""

    d_text: int = 768
    d_image: int = 2048
    d_model: int = 768
    d_hidden: int = 128
    n_classes: int = NUM_CLASSES

    class Config:
        allow_mutation = False

    @validator("d_text", "d_image", "d_model", "d_hidden")
    def strictly_positive(cls, v, field):
        if v < 1:
            raise ValueError(f"{field.name} must be strictly positive")
        return v

    @validator("n_classes")
    def four_classes(cls, v):
        if v != NUM_CLASSES:
            raise ValueError(f"n_classes is fixed at {NUM_CLASSES}")
        return v

    @classmethod
    def toy(cls) -> "ModelDims":
        return cls(d_text=32, d_image=16, d_model=32, d_hidden=32)
