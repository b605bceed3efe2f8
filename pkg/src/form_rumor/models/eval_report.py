from typing import Dict, List, Optional

from pydantic import BaseModel, validator

from form_rumor.models.rumor_label import RumorLabel


class EvalReport(BaseModel):
    accuracy: float
    f1_per_class: Dict[RumorLabel, float]
    confusion: List[List[int]]  # rows: true label, columns: predicted label
    fold_index: Optional[int] = None
    selector_precision: Optional[float] = None

    class Config:
        allow_mutation = False

    @validator("confusion")
    def four_by_four(cls, v):
        if len(v) != 4 or any(len(row) != 4 for row in v):
            raise ValueError("confusion matrix must be 4x4")
        return v

    @validator("f1_per_class")
    def f1_in_unit_interval(cls, v):
        for label, score in v.items():
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"F1 for {label} outside [0, 1]: {score}")
        return v

    @property
    def support(self) -> int:
        return sum(sum(row) for row in self.confusion)

    def summary(self) -> str:
        per_class = " | ".join(
            f"{label.short_name}: {self.f1_per_class[label]:.3f}"
            for label in RumorLabel
        )
        return f"Accuracy: {self.accuracy:.3f} | {per_class}"
