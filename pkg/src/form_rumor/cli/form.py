import json
import logging
from functools import wraps
from pathlib import Path
from typing import Dict, List, Optional

import typer
from pydantic import ValidationError

from form_rumor import __version__
from form_rumor.constants import (
    DEFAULT_FOLDS,
    EXIT_DOMAIN_ERROR,
    EXIT_IO_ERROR,
    EXIT_MISSING_DEPENDENCY,
    FOLDS_FILE,
    SIGNALS_FILE,
    THREADS_FILE,
)
from form_rumor.encoders.cache import FeatureCache
from form_rumor.encoders.pipeline import adapters, build_encoder, encode_corpus_sync
from form_rumor.exceptions import (
    EncoderUnavailableError,
    FormError,
    OptionalDependencyError,
)
from form_rumor.explain import explain_corpus
from form_rumor.ingestion import (
    datasets,
    load_corpus,
    load_folds,
    make_folds,
    save_folds,
    threads_by_id,
    write_corpus,
)
from form_rumor.models.run_config import RunConfig, visual_backbones
from form_rumor.models.synthetic_spec import SyntheticSpec
from form_rumor.models.train_config import Ablation, ablation_names
from form_rumor.synthetic import load_signals, write_synthetic
from form_rumor.training.checkpoint import load_checkpoint
from form_rumor.training.experiments import cross_validate, run_ablations, sweep_top_k
from form_rumor.training.reports import (
    format_results_table,
    mean_report,
    plot_sweep,
    write_fold_csv,
    write_report_json,
    write_sweep_csv,
)
from form_rumor.training.trainer import build_model, evaluate_model, seed_everything


def version_callback(value: bool):
    if value:
        typer.echo(__version__)
        raise typer.Exit()


def top_k_callback(top_k: Optional[int]) -> Optional[int]:
    if top_k is not None and top_k < 1:
        raise typer.BadParameter("top-k must be ≥ 1")
    return top_k


def dataset_callback(dataset: Optional[str]) -> Optional[str]:
    if dataset is not None and dataset not in datasets:
        raise typer.BadParameter(
            f"Dataset must be one of the following: {', '.join(datasets)}"
        )
    return dataset


def adapter_callback(adapter: Optional[str]) -> Optional[str]:
    if adapter is not None and adapter not in adapters:
        raise typer.BadParameter(
            f"Adapter must be one of the following: {', '.join(adapters)}"
        )
    return adapter


def backbone_callback(backbone: Optional[str]) -> Optional[str]:
    if backbone is not None and backbone not in visual_backbones:
        raise typer.BadParameter(
            f"Visual backbone must be one of the following: "
            f"{', '.join(visual_backbones)}"
        )
    return backbone


def k_values_callback(k_values: str) -> List[int]:
    try:
        parsed = [int(k) for k in k_values.split(",") if k.strip()]
    except ValueError:
        raise typer.BadParameter("k values must be comma-separated integers")
    if not parsed:
        raise typer.BadParameter("at least one k value is required")
    if any(k < 1 for k in parsed):
        raise typer.BadParameter("top-k must be ≥ 1")
    return parsed


app = typer.Typer()


class Config:
    config_file: Optional[Path] = None
    debug: bool = False


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (EncoderUnavailableError, OptionalDependencyError)):
        return EXIT_MISSING_DEPENDENCY
    if isinstance(error, OSError):
        return EXIT_IO_ERROR
    return EXIT_DOMAIN_ERROR


def report_errors(command):
    """Turn pipeline failures into one JSON line on stderr and an exit code"""

    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (FormError, OSError, ValidationError, ValueError) as e:
            exit_code = exit_code_for(e)
            logging.debug(e, exc_info=True)
            typer.echo(
                json.dumps(
                    {
                        "error": type(e).__name__,
                        "message": str(e).replace("\n", " "),
                        "exit_code": exit_code,
                    },
                    ensure_ascii=False,
                ),
                err=True,
            )
            raise typer.Exit(exit_code)

    return wrapper


def data_root_option():
    return typer.Option(
        None,
        envvar="FORM_DATA_ROOT",
        help="Directory (or JSONL file) holding the thread corpus.",
    )


def dataset_option():
    return typer.Option(
        None,
        callback=dataset_callback,
        autocompletion=lambda: list(datasets),
        help=f"Dataset layout and top-k default. One of: {' '.join(datasets)}",
    )


def cache_dir_option():
    return typer.Option(
        None,
        envvar="FORM_CACHE_DIR",
        help="Persistent feature cache. Encoding is skipped for cached threads.",
    )


def out_option():
    return typer.Option(
        None,
        envvar="FORM_OUT",
        help="Directory for reports, checkpoints and config.json",
    )


def adapter_option():
    return typer.Option(
        None,
        callback=adapter_callback,
        autocompletion=lambda: list(adapters),
        help=f"Encoder adapter. One of: {' '.join(adapters)}",
    )


def backbone_option():
    return typer.Option(
        None,
        callback=backbone_callback,
        autocompletion=lambda: list(visual_backbones),
        help="Visual encoder of the pretrained adapter. "
        f"One of: {' '.join(visual_backbones)}",
    )


def top_k_option():
    return typer.Option(
        None,
        callback=top_k_callback,
        help="Number of responses kept by coarse selection. "
        "Defaults to 5 for twitter15 and custom data, 10 for twitter16.",
    )


# Command parameter name -> RunConfig key
_override_keys = {
    "data_root": "data_root",
    "dataset": "dataset",
    "cache_dir": "cache_dir",
    "out": "out",
    "adapter": "adapter",
    "visual_backbone": "visual_backbone",
    "folds": "folds",
    "seed": "train.seed",
    "epochs": "train.epochs",
    "lr": "train.learning_rate",
    "batch_size": "train.batch_size",
    "top_k": "train.top_k",
    "ablation": "train.ablation",
    "mask_padding": "train.mask_padding",
    "untie_wz": "train.untie_wz",
    "deterministic": "train.deterministic",
    "max_responses": "padding.max_responses",
    "max_tokens": "padding.max_tokens",
    "max_objects": "padding.max_objects",
}


def overrides_from(params: Dict) -> Dict:
    """RunConfig overrides from a command's parameters; unset flags are None"""
    overrides = {}
    for name, key in _override_keys.items():
        value = params.get(name)
        overrides[key] = value.value if isinstance(value, Ablation) else value
    return overrides


def resolve_run(params: Dict, **fixed) -> RunConfig:
    overrides = overrides_from(params)
    overrides.update(fixed)
    return RunConfig.resolve(Config.config_file, overrides)


def _corpus_dir(run: RunConfig) -> Path:
    root = run.require_data_root()
    return root if root.is_dir() else root.parent


def _encode(run: RunConfig, threads) -> Dict:
    encoder = build_encoder(run.adapter, **run.encoder_options())
    cache = None
    if run.cache_dir is not None:
        cache = FeatureCache(run.cache_dir, encoder.adapter_id, run.padding)
    return encode_corpus_sync(threads, run.padding, encoder, cache)


def _folds(run: RunConfig, threads):
    folds_path = _corpus_dir(run) / FOLDS_FILE
    if folds_path.exists():
        logging.info(f"Using folds from {folds_path}")
        return load_folds(folds_path)
    return make_folds(threads, run.train.seed, run.folds)


def _signals(run: RunConfig):
    signals_path = _corpus_dir(run) / SIGNALS_FILE
    return load_signals(signals_path) if signals_path.exists() else None


def _prepare_training(run: RunConfig):
    run.require_data_root()
    run.write_echo()
    threads = load_corpus(run.data_root, run.dataset)
    folds = _folds(run, threads)
    seed_everything(run.train.seed)
    encoded = _encode(run, threads)
    return threads, folds, encoded, _signals(run)


@app.command()
@report_errors
def synth(
    out: Optional[Path] = out_option(),
    threads: int = typer.Option(40, help="Number of threads, a multiple of 4."),
    responses: int = typer.Option(10, help="Responses per thread."),
    signal: int = typer.Option(3, help="Responses per thread carrying the label."),
    strength: float = typer.Option(1.0, help="Signal strength in [0, 1]."),
    vocab: int = typer.Option(200, help="Distractor vocabulary size."),
    tokens: int = typer.Option(6, help="Tokens per text."),
    seed: int = typer.Option(1, help="Generator seed."),
):
    """
    Generate a planted-signal corpus: threads.jsonl plus signals.json.

    ```
    form synth --threads 40 --seed 1 --out synth-data
    ```
    """
    spec = SyntheticSpec(
        n_threads=threads,
        responses_per_thread=responses,
        n_signal_responses=signal,
        signal_strength=strength,
        vocab_size=vocab,
        tokens_per_text=tokens,
        seed=seed,
    )
    run = resolve_run(locals(), dataset="custom")
    write_synthetic(spec, run.out)
    run.write_echo()


@app.command()
@report_errors
def prepare(
    data_root: Optional[Path] = data_root_option(),
    dataset: Optional[str] = dataset_option(),
    out: Optional[Path] = out_option(),
    folds: Optional[int] = typer.Option(
        None, help=f"Folds, {DEFAULT_FOLDS} by default."
    ),
    seed: Optional[int] = typer.Option(None, help="Fold shuffling seed."),
):
    """
    Ingest a corpus, strip retweets and write threads.jsonl and folds.json.
    """
    run = resolve_run(locals())
    run.require_data_root()
    threads = load_corpus(run.data_root, run.dataset)
    fold_splits = make_folds(threads, run.train.seed, run.folds)
    write_corpus(threads, run.out / THREADS_FILE)
    save_folds(fold_splits, run.train.seed, run.out / FOLDS_FILE)
    run.write_echo()
    logging.info(
        f"Prepared {len(threads)} threads | folds: {len(fold_splits)} | {run.out}"
    )


@app.command()
@report_errors
def encode(
    data_root: Optional[Path] = data_root_option(),
    dataset: Optional[str] = dataset_option(),
    cache_dir: Optional[Path] = cache_dir_option(),
    out: Optional[Path] = out_option(),
    adapter: Optional[str] = adapter_option(),
    visual_backbone: Optional[str] = backbone_option(),
    max_responses: Optional[int] = typer.Option(None, help="Response slots N."),
    max_tokens: Optional[int] = typer.Option(None, help="Token slots M."),
    max_objects: Optional[int] = typer.Option(None, help="Object slots K."),
):
    """
    Encode every thread into the feature cache.
    """
    run = resolve_run(locals())
    if run.cache_dir is None:
        raise typer.BadParameter("encode needs --cache-dir or FORM_CACHE_DIR")
    run.require_data_root()
    run.write_echo()
    threads = load_corpus(run.data_root, run.dataset)
    encoded = _encode(run, threads)
    logging.info(f"Encoded {len(encoded)} threads into {run.cache_dir}")


@app.command()
@report_errors
def train(
    data_root: Optional[Path] = data_root_option(),
    dataset: Optional[str] = dataset_option(),
    cache_dir: Optional[Path] = cache_dir_option(),
    out: Optional[Path] = out_option(),
    adapter: Optional[str] = adapter_option(),
    visual_backbone: Optional[str] = backbone_option(),
    folds: Optional[int] = typer.Option(None, help="Cross-validation folds."),
    seed: Optional[int] = typer.Option(None, help="Seed for folds and training."),
    epochs: Optional[int] = typer.Option(None, help="Training epochs per fold."),
    lr: Optional[float] = typer.Option(None, help="Adam learning rate."),
    batch_size: Optional[int] = typer.Option(None, help="Threads per batch."),
    top_k: Optional[int] = top_k_option(),
    ablation: Optional[Ablation] = typer.Option(None, help="Model variant."),
    mask_padding: Optional[bool] = typer.Option(
        None, help="Exclude padded tokens, objects and responses from attention."
    ),
    untie_wz: Optional[bool] = typer.Option(
        None, help="Use a separate sentence projection in the reasoning module."
    ),
    deterministic: Optional[bool] = typer.Option(
        None, help="Seed everything and force deterministic single-threaded torch."
    ),
    max_responses: Optional[int] = typer.Option(None, help="Response slots N."),
):
    """
    Cross-validate the model and write per-fold checkpoints and reports.

    ```
    form train --data-root synth-data --adapter toy --epochs 20 --out run1

    2023-05-02T10:12:01+0000 | INFO | Fold 0 | train: 29 | validation: 3 | test: 8 | ablation: none | top-k: 5
    2023-05-02T10:12:09+0000 | INFO | Fold 0 | Accuracy: 0.875 | F: 1.000 | T: 0.667 | U: 1.000 | NR: 0.800
    ```
    """
    run = resolve_run(locals())
    _, fold_splits, encoded, signals = _prepare_training(run)
    result = cross_validate(
        encoded,
        fold_splits,
        run.train,
        run.model_dims(),
        checkpoint_dir=run.out / "checkpoints",
        signals=signals,
    )
    write_fold_csv(result, run.out / "folds.csv")
    write_report_json(result, run.echo(), run.out / "report.json")
    typer.echo(
        format_results_table(
            {
                ablation_names[run.train.ablation]: mean_report(result),
                f"{ablation_names[run.train.ablation]} (pooled)": result.pooled,
            }
        )
    )


@app.command()
@report_errors
def evaluate(
    checkpoint: Path = typer.Argument(..., help="Checkpoint written by train."),
    data_root: Optional[Path] = data_root_option(),
    dataset: Optional[str] = dataset_option(),
    cache_dir: Optional[Path] = cache_dir_option(),
    out: Optional[Path] = out_option(),
    adapter: Optional[str] = adapter_option(),
    visual_backbone: Optional[str] = backbone_option(),
    top_k: Optional[int] = top_k_option(),
    ablation: Optional[Ablation] = typer.Option(
        None, help="Expected variant; a mismatching checkpoint is rejected."
    ),
):
    """
    Score a checkpoint on every thread of a corpus and print the report as JSON.
    """
    run = resolve_run(locals())
    run.require_data_root()
    run.write_echo()
    expected = None
    if top_k is not None or ablation is not None or Config.config_file is not None:
        expected = build_model(run.train, run.model_dims())
    model = load_checkpoint(checkpoint, expected)
    run = run.copy(update={"dims": model.dims})

    threads = load_corpus(run.data_root, run.dataset)
    encoded = _encode(run, threads)
    report = evaluate_model(model, list(encoded.values()), signals=_signals(run))
    (run.out / "evaluation.json").write_text(report.json(indent=2))
    typer.echo(report.json())


@app.command()
@report_errors
def ablate(
    data_root: Optional[Path] = data_root_option(),
    dataset: Optional[str] = dataset_option(),
    cache_dir: Optional[Path] = cache_dir_option(),
    out: Optional[Path] = out_option(),
    adapter: Optional[str] = adapter_option(),
    visual_backbone: Optional[str] = backbone_option(),
    folds: Optional[int] = typer.Option(None, help="Cross-validation folds."),
    seed: Optional[int] = typer.Option(None, help="Seed for folds and training."),
    epochs: Optional[int] = typer.Option(None, help="Training epochs per fold."),
    lr: Optional[float] = typer.Option(None, help="Adam learning rate."),
    batch_size: Optional[int] = typer.Option(None, help="Threads per batch."),
    top_k: Optional[int] = top_k_option(),
    mask_padding: Optional[bool] = typer.Option(None, help="Mask padding."),
    untie_wz: Optional[bool] = typer.Option(None, help="Untie W_z."),
    deterministic: Optional[bool] = typer.Option(None, help="Deterministic torch."),
    max_responses: Optional[int] = typer.Option(None, help="Response slots N."),
):
    """
    Cross-validate the full model and its three ablated variants.
    """
    run = resolve_run(locals())
    _, fold_splits, encoded, signals = _prepare_training(run)
    results = run_ablations(
        encoded, fold_splits, run.train, run.model_dims(), signals=signals
    )
    for variant, result in results.items():
        write_fold_csv(result, run.out / f"ablation-{variant.value}.csv")
        write_report_json(
            result, run.echo(), run.out / f"ablation-{variant.value}.json"
        )

    table = format_results_table(
        {ablation_names[variant]: mean_report(r) for variant, r in results.items()}
    )
    (run.out / "ablations.txt").write_text(table + "\n")
    typer.echo(table)


@app.command("sweep-k")
@report_errors
def sweep_k(
    k: str = typer.Option("1,3,5,10", help="Comma-separated k values."),
    plot: bool = typer.Option(False, help="Also render sweep.png (needs matplotlib)."),
    data_root: Optional[Path] = data_root_option(),
    dataset: Optional[str] = dataset_option(),
    cache_dir: Optional[Path] = cache_dir_option(),
    out: Optional[Path] = out_option(),
    adapter: Optional[str] = adapter_option(),
    visual_backbone: Optional[str] = backbone_option(),
    folds: Optional[int] = typer.Option(None, help="Cross-validation folds."),
    seed: Optional[int] = typer.Option(None, help="Seed for folds and training."),
    epochs: Optional[int] = typer.Option(None, help="Training epochs per fold."),
    lr: Optional[float] = typer.Option(None, help="Adam learning rate."),
    batch_size: Optional[int] = typer.Option(None, help="Threads per batch."),
    ablation: Optional[Ablation] = typer.Option(None, help="Model variant."),
    mask_padding: Optional[bool] = typer.Option(None, help="Mask padding."),
    deterministic: Optional[bool] = typer.Option(None, help="Deterministic torch."),
    max_responses: Optional[int] = typer.Option(None, help="Response slots N."),
):
    """
    Accuracy as a function of the number of selected responses.

    ```
    form sweep-k --k 1,3,5,10 --data-root data --dataset twitter16 --plot
    ```
    """
    k_values = k_values_callback(k)
    run = resolve_run(locals())
    _, fold_splits, encoded, signals = _prepare_training(run)
    points = sweep_top_k(
        encoded, fold_splits, run.train, run.model_dims(), k_values, signals=signals
    )
    csv_path = write_sweep_csv(points, run.out / "sweep.csv")
    if plot:
        plot_sweep(points, run.out / "sweep.png", title=run.dataset)
    typer.echo(csv_path.read_text())


@app.command()
@report_errors
def explain(
    checkpoint: Path = typer.Argument(..., help="Checkpoint written by train."),
    thread_id: Optional[List[str]] = typer.Option(
        None, help="Only explain these threads. Repeat for several."
    ),
    data_root: Optional[Path] = data_root_option(),
    dataset: Optional[str] = dataset_option(),
    cache_dir: Optional[Path] = cache_dir_option(),
    out: Optional[Path] = out_option(),
    adapter: Optional[str] = adapter_option(),
    visual_backbone: Optional[str] = backbone_option(),
):
    """
    Print one JSON line per thread: alpha, the selected responses, per-node
    significance and class distributions, and the prediction.
    """
    run = resolve_run(locals())
    run.require_data_root()
    run.write_echo()
    model = load_checkpoint(checkpoint)
    run = run.copy(update={"dims": model.dims})

    threads = load_corpus(run.data_root, run.dataset)
    if thread_id:
        wanted = set(thread_id)
        threads = [t for t in threads if t.id in wanted]
        missing = wanted - {t.id for t in threads}
        if missing:
            raise FormError(f"unknown thread id(s): {', '.join(sorted(missing))}")
    encoded = _encode(run, threads)
    lookup = threads_by_id(threads)

    lines = [
        json.dumps(entry, ensure_ascii=False)
        for entry in explain_corpus(model, encoded.values(), lookup)
    ]
    (run.out / "explain.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines:
        typer.echo(line)


@app.callback()
def callback(
    config: Optional[Path] = typer.Option(
        None,
        "--config",
        envvar="FORM_CONFIG",
        exists=True,
        dir_okay=False,
        help="A config.json echoed by an earlier run. Flags override its values.",
    ),
    debug: Optional[bool] = typer.Option(
        False,
        envvar="FORM_DEBUG",
        help="Print debug log messages",
    ),
    _: Optional[bool] = typer.Option(
        None, "--version", callback=version_callback, is_eager=True
    ),
):
    Config.config_file = config
    Config.debug = debug

    logging.basicConfig(
        level=logging.INFO if not debug else logging.DEBUG,
        format="%(asctime)s | %(levelname)s | %(message)s",
        datefmt="%Y-%m-%dT%H:%M:%S%z",
    )


if __name__ == "__main__":
    app()
