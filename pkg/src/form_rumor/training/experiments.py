"""Cross-validation, ablation and top-k sweep drivers."""
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set

from pydantic import BaseModel

from form_rumor.models.eval_report import EvalReport
from form_rumor.models.features import EncodedThread
from form_rumor.models.fold_split import FoldSplit
from form_rumor.models.model_dims import ModelDims
from form_rumor.models.rumor_label import RumorLabel
from form_rumor.models.train_config import Ablation, TrainConfig, ablation_names
from form_rumor.training.metrics import pool_reports
from form_rumor.training.trainer import TrainingHistory, train_fold


class CrossValidationResult(BaseModel):
    reports: List[EvalReport]
    histories: List[TrainingHistory]
    pooled: EvalReport

    @property
    def mean_accuracy(self) -> float:
        return sum(r.accuracy for r in self.reports) / len(self.reports)

    @property
    def mean_f1(self) -> Dict[RumorLabel, float]:
        return {
            label: sum(r.f1_per_class[label] for r in self.reports) / len(self.reports)
            for label in RumorLabel
        }

    @property
    def mean_selector_precision(self) -> Optional[float]:
        values = [
            r.selector_precision
            for r in self.reports
            if r.selector_precision is not None
        ]
        return sum(values) / len(values) if values else None


class SweepPoint(BaseModel):
    top_k: int
    result: CrossValidationResult


def cross_validate(
    encoded: Mapping[str, EncodedThread],
    folds: Sequence[FoldSplit],
    config: TrainConfig,
    dims: ModelDims,
    checkpoint_dir: Optional[Path] = None,
    signals: Optional[Mapping[str, Set[int]]] = None,
) -> CrossValidationResult:
    """Train and score every fold; reports both per-fold and pooled scoring"""
    if not folds:
        raise ValueError("cross-validation needs at least one fold")

    reports, histories = [], []
    for fold in folds:
        checkpoint = None
        if checkpoint_dir is not None:
            checkpoint = Path(checkpoint_dir) / f"fold-{fold.fold_index}.ckpt"
        _, result = train_fold(encoded, fold, config, dims, checkpoint, signals)
        reports.append(result.report)
        histories.append(result.history)

    result = CrossValidationResult(
        reports=reports, histories=histories, pooled=pool_reports(reports)
    )
    logging.info(
        f"Cross-validation | folds: {len(folds)} | "
        f"mean acc: {result.mean_accuracy:.3f} | "
        f"pooled acc: {result.pooled.accuracy:.3f}"
    )
    return result


def run_ablations(
    encoded: Mapping[str, EncodedThread],
    folds: Sequence[FoldSplit],
    config: TrainConfig,
    dims: ModelDims,
    variants: Iterable[Ablation] = tuple(Ablation),
    signals: Optional[Mapping[str, Set[int]]] = None,
) -> Dict[Ablation, CrossValidationResult]:
    results = {}
    for variant in variants:
        logging.info(f"Ablation | {ablation_names[variant]}")
        variant_config = config.copy(update={"ablation": variant})
        results[variant] = cross_validate(
            encoded, folds, variant_config, dims, signals=signals
        )
    return results


def unique_k_values(k_values: Iterable[int]) -> List[int]:
    """Drop repeated k values, keeping first occurrences in order"""
    return list(dict.fromkeys(int(k) for k in k_values))


def sweep_top_k(
    encoded: Mapping[str, EncodedThread],
    folds: Sequence[FoldSplit],
    config: TrainConfig,
    dims: ModelDims,
    k_values: Iterable[int],
    signals: Optional[Mapping[str, Set[int]]] = None,
) -> List[SweepPoint]:
    k_values = unique_k_values(k_values)
    if not k_values:
        raise ValueError("sweep needs at least one k value")

    points = []
    for k in k_values:
        k_config = TrainConfig(**{**config.dict(), "top_k": k})
        result = cross_validate(encoded, folds, k_config, dims, signals=signals)
        logging.info(f"Sweep | k: {k} | mean acc: {result.mean_accuracy:.3f}")
        points.append(SweepPoint(top_k=k, result=result))
    return points
