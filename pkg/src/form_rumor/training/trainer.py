import copy
import logging
import random
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
import torch
from pydantic import BaseModel
from sklearn.model_selection import train_test_split

from form_rumor.exceptions import EmptySplitError
from form_rumor.models.eval_report import EvalReport
from form_rumor.models.features import EncodedThread
from form_rumor.models.fold_split import FoldSplit
from form_rumor.models.model_dims import ModelDims
from form_rumor.models.train_config import TrainConfig
from form_rumor.network.form_model import FoRMModel
from form_rumor.training.checkpoint import load_checkpoint, save_checkpoint
from form_rumor.training.loss import LossTerms, compute_loss
from form_rumor.training.metrics import (
    confusion_from_predictions,
    report_from_confusion,
)


class EpochStats(BaseModel):
    epoch: int
    loss: float
    selection_loss: float
    reason_loss: float
    train_accuracy: float
    val_accuracy: Optional[float] = None


class TrainingHistory(BaseModel):
    epochs: List[EpochStats] = []
    best_epoch: Optional[int] = None
    validation_ids: List[str] = []


class FoldResult(BaseModel):
    report: EvalReport
    history: TrainingHistory
    checkpoint: Optional[Path] = None

    class Config:
        arbitrary_types_allowed = True


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


@contextmanager
def deterministic_torch(enabled: bool = True) -> Iterator[None]:
    """Deterministic single-threaded torch inside the block, prior state after"""
    if not enabled:
        yield
        return

    previous = (
        torch.are_deterministic_algorithms_enabled(),
        torch.is_deterministic_algorithms_warn_only_enabled(),
        torch.get_num_threads(),
    )
    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)
    try:
        yield
    finally:
        torch.use_deterministic_algorithms(previous[0], warn_only=previous[1])
        torch.set_num_threads(previous[2])


def build_model(config: TrainConfig, dims: ModelDims) -> FoRMModel:
    return FoRMModel(
        dims,
        top_k=config.top_k,
        ablation=config.ablation,
        mask_padding=config.mask_padding,
        untie_wz=config.untie_wz,
    )


def thread_loss(model: FoRMModel, encoded: EncodedThread) -> Tuple[LossTerms, int]:
    output = model(encoded)
    terms = compute_loss(
        output.selection.y1_logits,
        output.probs,
        int(encoded.label),
        use_selection_loss=model.ablation.uses_selection_loss,
    )
    return terms, int(torch.argmax(output.probs.detach()))


def split_validation(
    threads: Sequence[EncodedThread], fraction: float, seed: int
) -> Tuple[List[EncodedThread], List[EncodedThread]]:
    """Hold out a label-stratified fraction of a training split"""
    n_val = int(round(len(threads) * fraction))
    if n_val == 0 or n_val >= len(threads):
        return list(threads), []

    labels = [int(t.label) for t in threads]
    indices = np.arange(len(threads))
    n_classes = len(set(labels))
    counts = np.bincount(labels)
    stratify = labels
    too_small = min(n_val, len(threads) - n_val) < n_classes
    if too_small or counts[counts > 0].min() < 2:
        logging.warning(
            f"Validation split of {n_val} cannot be stratified over "
            f"{n_classes} labels, splitting at random"
        )
        stratify = None
    train_idx, val_idx = train_test_split(
        indices, test_size=n_val, random_state=seed, stratify=stratify
    )
    train = [threads[i] for i in sorted(train_idx)]
    validation = [threads[i] for i in sorted(val_idx)]
    return train, validation


def _accuracy(model: FoRMModel, threads: Sequence[EncodedThread]) -> float:
    if not threads:
        return 0.0
    correct = sum(model.predict(t) == int(t.label) for t in threads)
    return correct / len(threads)


def train_model(
    model: FoRMModel,
    train_threads: Sequence[EncodedThread],
    config: TrainConfig,
    validation: Sequence[EncodedThread] = (),
) -> TrainingHistory:
    """Adam over per-thread losses averaged within each batch.

    With a validation set the parameters of the best validation epoch are
    restored at the end; otherwise the final parameters are kept.
    """
    if not train_threads:
        raise EmptySplitError("training split holds no threads")

    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    generator = torch.Generator().manual_seed(config.seed)
    history = TrainingHistory(validation_ids=[t.thread_id for t in validation])
    best_accuracy = -1.0
    best_state = None

    for epoch in range(1, config.epochs + 1):
        model.train()
        order = torch.randperm(len(train_threads), generator=generator).tolist()
        totals = np.zeros(3)
        correct = 0

        for start in range(0, len(order), config.batch_size):
            batch = [train_threads[i] for i in order[start : start + config.batch_size]]
            optimizer.zero_grad()
            batch_loss = 0.0
            for encoded in batch:
                terms, predicted = thread_loss(model, encoded)
                batch_loss = batch_loss + terms.total
                totals += [float(term.detach()) for term in terms]
                correct += predicted == int(encoded.label)
            (batch_loss / len(batch)).backward()
            optimizer.step()

        model.eval()
        totals /= len(train_threads)
        stats = EpochStats(
            epoch=epoch,
            loss=totals[0],
            selection_loss=totals[1],
            reason_loss=totals[2],
            train_accuracy=correct / len(train_threads),
            val_accuracy=_accuracy(model, validation) if validation else None,
        )
        history.epochs.append(stats)

        status = (
            f"Epoch {epoch}/{config.epochs} | loss: {stats.loss:.4f} | "
            f"train acc: {stats.train_accuracy:.3f}"
        )
        if stats.val_accuracy is not None:
            status += f" | val acc: {stats.val_accuracy:.3f}"
        logging.debug(status)

        if validation and stats.val_accuracy > best_accuracy:
            best_accuracy = stats.val_accuracy
            best_state = copy.deepcopy(model.state_dict())
            history.best_epoch = epoch

    if best_state is not None:
        model.load_state_dict(best_state)
        logging.info(
            f"Restored best epoch {history.best_epoch} | val acc: {best_accuracy:.3f}"
        )
    elif history.epochs:
        history.best_epoch = history.epochs[-1].epoch
    model.eval()
    return history


def selections(
    model: FoRMModel, threads: Sequence[EncodedThread]
) -> Dict[str, Tuple[int, ...]]:
    model.eval()
    with torch.no_grad():
        return {t.thread_id: model(t).selection.selected_indices for t in threads}


def evaluate_model(
    model: FoRMModel,
    threads: Sequence[EncodedThread],
    fold_index: Optional[int] = None,
    signals: Optional[Mapping[str, Set[int]]] = None,
) -> EvalReport:
    model.eval()
    y_true, y_pred = [], []
    selected = {}
    with torch.no_grad():
        for encoded in threads:
            output = model(encoded)
            y_true.append(int(encoded.label))
            y_pred.append(int(torch.argmax(output.probs)))
            selected[encoded.thread_id] = output.selection.selected_indices

    precision = None
    if signals is not None:
        from form_rumor.synthetic import selector_quality

        known = {tid: idx for tid, idx in selected.items() if tid in signals}
        if known:
            precision = selector_quality(known, signals)

    confusion = confusion_from_predictions(y_true, y_pred)
    return report_from_confusion(confusion, fold_index, precision)


def _fold_threads(
    encoded: Mapping[str, EncodedThread], ids
) -> List[EncodedThread]:
    # Sorted ids keep batches independent of set iteration order
    return [encoded[thread_id] for thread_id in sorted(ids) if thread_id in encoded]


def train_fold(
    encoded: Mapping[str, EncodedThread],
    fold: FoldSplit,
    config: TrainConfig,
    dims: ModelDims,
    checkpoint_path: Optional[Path] = None,
    signals: Optional[Mapping[str, Set[int]]] = None,
) -> Tuple[FoRMModel, FoldResult]:
    train_threads = _fold_threads(encoded, fold.train_ids)
    test_threads = _fold_threads(encoded, fold.test_ids)
    if not train_threads:
        raise EmptySplitError(f"fold {fold.fold_index} has an empty training split")

    seed_everything(config.seed)
    train_threads, validation = split_validation(
        train_threads, config.validation_fraction, config.seed
    )
    model = build_model(config, dims)
    logging.info(
        f"Fold {fold.fold_index} | train: {len(train_threads)} | "
        f"validation: {len(validation)} | test: {len(test_threads)} | "
        f"ablation: {config.ablation} | top-k: {config.top_k}"
    )
    with deterministic_torch(config.deterministic):
        history = train_model(model, train_threads, config, validation)
        report = evaluate_model(model, test_threads, fold.fold_index, signals)
    logging.info(f"Fold {fold.fold_index} | {report.summary()}")

    if checkpoint_path is not None:
        save_checkpoint(
            model,
            checkpoint_path,
            metadata={
                "fold_index": fold.fold_index,
                "best_epoch": history.best_epoch,
                "train_config": config.dict(),
            },
        )
    return model, FoldResult(report=report, history=history, checkpoint=checkpoint_path)


def evaluate(
    checkpoint: Path,
    threads: Sequence[EncodedThread],
    model: Optional[FoRMModel] = None,
    signals: Optional[Mapping[str, Set[int]]] = None,
) -> EvalReport:
    """Score a saved checkpoint; ``model`` pins the expected configuration"""
    return evaluate_model(load_checkpoint(checkpoint, model), threads, signals=signals)
