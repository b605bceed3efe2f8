from typing import Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from form_rumor.models.eval_report import EvalReport
from form_rumor.models.rumor_label import RumorLabel

_label_codes = [int(label) for label in RumorLabel]


def confusion_from_predictions(
    y_true: Sequence[int], y_pred: Sequence[int]
) -> np.ndarray:
    return confusion_matrix(y_true, y_pred, labels=_label_codes)


def f1_from_confusion(confusion: np.ndarray) -> np.ndarray:
    """One-vs-rest F1 per class; 0 where a class never occurs nor is predicted"""
    confusion = np.asarray(confusion, dtype=np.int64)
    tp = np.diag(confusion)
    fp = confusion.sum(axis=0) - tp
    fn = confusion.sum(axis=1) - tp
    denominator = 2 * tp + fp + fn
    return np.divide(
        2 * tp,
        denominator,
        out=np.zeros(len(tp), dtype=np.float64),
        where=denominator > 0,
    )


def accuracy_from_confusion(confusion: np.ndarray) -> float:
    confusion = np.asarray(confusion, dtype=np.int64)
    total = confusion.sum()
    return float(np.trace(confusion) / total) if total else 0.0


def report_from_confusion(
    confusion: np.ndarray,
    fold_index: Optional[int] = None,
    selector_precision: Optional[float] = None,
) -> EvalReport:
    f1 = f1_from_confusion(confusion)
    return EvalReport(
        accuracy=accuracy_from_confusion(confusion),
        f1_per_class={label: float(f1[int(label)]) for label in RumorLabel},
        confusion=np.asarray(confusion, dtype=np.int64).tolist(),
        fold_index=fold_index,
        selector_precision=selector_precision,
    )


def pool_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Score the concatenated predictions of several folds"""
    confusion = sum(np.asarray(report.confusion) for report in reports)
    return report_from_confusion(confusion)
