import json
import logging
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence

import pandas as pd

from form_rumor.exceptions import OptionalDependencyError
from form_rumor.models.eval_report import EvalReport
from form_rumor.models.rumor_label import RumorLabel
from form_rumor.training.experiments import CrossValidationResult, SweepPoint

_table_columns = ["Accuracy"] + [label.short_name for label in RumorLabel]


def report_row(report: EvalReport) -> Dict:
    row = {"fold": report.fold_index, "accuracy": report.accuracy}
    for label in RumorLabel:
        row[f"f1_{label.short_name}"] = report.f1_per_class[label]
    row["support"] = report.support
    if report.selector_precision is not None:
        row["selector_precision"] = report.selector_precision
    return row


def fold_frame(result: CrossValidationResult) -> pd.DataFrame:
    frame = pd.DataFrame([report_row(r) for r in result.reports])
    mean = frame.drop(columns=["fold"]).mean(numeric_only=True)
    pooled = pd.Series(report_row(result.pooled)).drop("fold")
    summary = pd.DataFrame([mean, pooled])
    summary.insert(0, "fold", ["mean", "pooled"])
    return pd.concat([frame, summary], ignore_index=True)


def write_fold_csv(result: CrossValidationResult, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fold_frame(result).to_csv(path, index=False, float_format="%.6f")
    return path


def _report_json(report: EvalReport) -> Dict:
    return {
        "fold_index": report.fold_index,
        "accuracy": report.accuracy,
        "f1": {str(label): report.f1_per_class[label] for label in RumorLabel},
        "confusion": report.confusion,
        "selector_precision": report.selector_precision,
    }


def write_report_json(
    result: CrossValidationResult, config_echo: Mapping, path: Path
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": config_echo,
        "folds": [_report_json(r) for r in result.reports],
        "best_epochs": [h.best_epoch for h in result.histories],
        "mean": {
            "accuracy": result.mean_accuracy,
            "f1": {str(label): v for label, v in result.mean_f1.items()},
            "selector_precision": result.mean_selector_precision,
        },
        "pooled": _report_json(result.pooled),
    }
    path.write_text(json.dumps(payload, indent=2, default=str))
    return path


def format_results_table(
    rows: Mapping[str, EvalReport], title: Optional[str] = None
) -> str:
    """Fixed-width table in the ``Method | Accuracy | F | T | U | NR`` layout"""
    frame = pd.DataFrame(
        [
            [report.accuracy] + [report.f1_per_class[label] for label in RumorLabel]
            for report in rows.values()
        ],
        index=list(rows.keys()),
        columns=_table_columns,
    )
    frame.index.name = "Method"
    table = frame.to_string(float_format=lambda v: f"{v:.3f}")
    return f"{title}\n{table}" if title else table


def mean_report(result: CrossValidationResult) -> EvalReport:
    """Mean-over-folds scores packed into a report, confusion pooled"""
    return EvalReport(
        accuracy=result.mean_accuracy,
        f1_per_class=result.mean_f1,
        confusion=result.pooled.confusion,
        selector_precision=result.mean_selector_precision,
    )


def sweep_frame(points: Sequence[SweepPoint]) -> pd.DataFrame:
    rows = []
    for point in points:
        row = {
            "k": point.top_k,
            "accuracy": point.result.mean_accuracy,
            "pooled_accuracy": point.result.pooled.accuracy,
        }
        for label, score in point.result.mean_f1.items():
            row[f"f1_{label.short_name}"] = score
        if point.result.mean_selector_precision is not None:
            row["selector_precision"] = point.result.mean_selector_precision
        rows.append(row)
    return pd.DataFrame(rows)


def write_sweep_csv(points: Sequence[SweepPoint], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sweep_frame(points).to_csv(path, index=False, float_format="%.6f")
    return path


def plot_sweep(points: Sequence[SweepPoint], path: Path, title: str = "") -> Path:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as e:
        raise OptionalDependencyError("plot", f"matplotlib is not installed: {e}")

    frame = sweep_frame(points)
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.plot(frame["k"], frame["accuracy"], marker="o", color="k", label="accuracy")
    ax.set_xlabel("number of selected responses k")
    ax.set_ylabel("accuracy")
    ax.set_xticks(list(frame["k"]))
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logging.info(f"Sweep plot written | {path}")
    return path
