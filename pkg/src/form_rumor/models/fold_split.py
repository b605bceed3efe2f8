from typing import FrozenSet

from pydantic import BaseModel, root_validator, validator


class FoldSplit(BaseModel):
    fold_index: int
    train_ids: FrozenSet[str]
    test_ids: FrozenSet[str]

    class Config:
        allow_mutation = False

    @validator("fold_index")
    def fold_index_non_negative(cls, v):
        if v < 0:
            raise ValueError("fold_index must be non-negative")
        return v

    @root_validator(skip_on_failure=True)
    def train_and_test_disjoint(cls, values):
        overlap = values["train_ids"] & values["test_ids"]
        if overlap:
            raise ValueError(
                f"train and test overlap on {len(overlap)} thread(s), "
                f"e.g. {sorted(overlap)[0]}"
            )
        return values
