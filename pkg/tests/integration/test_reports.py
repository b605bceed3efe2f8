import json

import pandas as pd
import pytest

from form_rumor.exceptions import OptionalDependencyError
from form_rumor.explain import explain_corpus, explain_thread
from form_rumor.models.train_config import TrainConfig
from form_rumor.training.experiments import CrossValidationResult, SweepPoint
from form_rumor.training.metrics import (
    confusion_from_predictions,
    pool_reports,
    report_from_confusion,
)
from form_rumor.training.reports import (
    fold_frame,
    format_results_table,
    mean_report,
    plot_sweep,
    sweep_frame,
    write_fold_csv,
    write_report_json,
    write_sweep_csv,
)
from form_rumor.training.trainer import TrainingHistory, build_model


def cv_result(*predictions):
    truth = [0, 1, 2, 3]
    reports = [
        report_from_confusion(
            confusion_from_predictions(truth, predicted), fold, selector_precision=0.5
        )
        for fold, predicted in enumerate(predictions)
    ]
    return CrossValidationResult(
        reports=reports,
        histories=[TrainingHistory(best_epoch=1) for _ in reports],
        pooled=pool_reports(reports),
    )


def test_fold_frame_has_mean_and_pooled_rows():
    frame = fold_frame(cv_result([0, 1, 2, 3], [0, 0, 0, 0]))
    assert list(frame["fold"]) == [0, 1, "mean", "pooled"]
    assert frame.loc[2, "accuracy"] == pytest.approx(0.625)
    assert frame.loc[3, "accuracy"] == pytest.approx(0.625)
    assert {"f1_F", "f1_T", "f1_U", "f1_NR", "selector_precision"} <= set(frame)


def test_mean_and_pooled_f1_differ():
    result = cv_result([0, 1, 2, 3], [0, 0, 0, 0])
    mean_f1 = mean_report(result).f1_per_class
    pooled_f1 = result.pooled.f1_per_class
    assert list(mean_f1.values()) != list(pooled_f1.values())


def test_written_reports(tmp_path):
    result = cv_result([0, 1, 2, 3], [1, 1, 2, 3])
    csv_path = write_fold_csv(result, tmp_path / "out" / "folds.csv")
    assert len(pd.read_csv(csv_path)) == 4

    json_path = write_report_json(result, {"seed": 0}, tmp_path / "report.json")
    payload = json.loads(json_path.read_text())
    assert payload["config"] == {"seed": 0}
    assert payload["best_epochs"] == [1, 1]
    assert payload["pooled"]["confusion"][0] == [1, 1, 0, 0]
    assert set(payload["mean"]["f1"]) == {"false", "true", "unverified", "non-rumor"}


def test_results_table_layout():
    result = cv_result([0, 1, 2, 3])
    table = format_results_table({"FoRM": result.reports[0]}, title="twitter15")
    lines = table.splitlines()
    assert lines[0] == "twitter15"
    assert lines[1].split() == ["Accuracy", "F", "T", "U", "NR"]
    assert lines[2].split()[0] == "Method"
    assert lines[3].split() == ["FoRM", "1.000", "1.000", "1.000", "1.000", "1.000"]


def test_sweep_csv(tmp_path):
    points = [
        SweepPoint(top_k=1, result=cv_result([0, 0, 0, 0])),
        SweepPoint(top_k=3, result=cv_result([0, 1, 2, 3])),
    ]
    frame = sweep_frame(points)
    assert list(frame["k"]) == [1, 3]
    assert list(frame["accuracy"]) == [0.25, 1.0]
    assert len(pd.read_csv(write_sweep_csv(points, tmp_path / "sweep.csv"))) == 2


def test_sweep_plot(tmp_path):
    pytest.importorskip("matplotlib")
    points = [SweepPoint(top_k=k, result=cv_result([0, 1, 2, 3])) for k in (1, 3)]
    assert plot_sweep(points, tmp_path / "sweep.png").stat().st_size > 0


def test_sweep_plot_without_matplotlib(tmp_path, monkeypatch):
    import builtins

    real_import = builtins.__import__

    def no_matplotlib(name, *args, **kwargs):
        if name.startswith("matplotlib"):
            raise ImportError("no matplotlib")
        return real_import(name, *args, **kwargs)

    monkeypatch.setattr(builtins, "__import__", no_matplotlib)
    with pytest.raises(OptionalDependencyError, match="'plot' extra"):
        plot_sweep([], tmp_path / "sweep.png")


def test_explanations(synthetic_corpus, toy_dims):
    threads, _, encoded = synthetic_corpus
    model = build_model(TrainConfig(top_k=2), toy_dims)
    item = next(iter(encoded.values()))
    thread = next(t for t in threads if t.id == item.thread_id)

    entry = explain_thread(model, item, thread)
    assert entry["thread_id"] == thread.id
    assert entry["label"] == str(thread.label)
    assert len(entry["alpha"]) == len(thread.responses)
    assert sum(entry["probs"].values()) == pytest.approx(1.0, abs=1e-5)
    assert [s["text"] for s in entry["selected"]] == [
        thread.responses[s["index"]].text for s in entry["selected"]
    ]
    assert len(entry["nodes"]) == 2
    significance = sum(n["significance"] for n in entry["nodes"])
    assert significance == pytest.approx(1.0, abs=1e-5)
    json.dumps(entry)

    lookup = {t.id: t for t in threads}
    assert len(list(explain_corpus(model, encoded.values(), lookup))) == len(threads)
