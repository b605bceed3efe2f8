import json
import logging
import re
import unicodedata
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

from pydantic import ValidationError
from sklearn.model_selection import KFold, StratifiedKFold

from form_rumor.constants import DEFAULT_FOLDS, RETWEET_MARKER
from form_rumor.exceptions import (
    CorpusFormatError,
    FoldError,
    MissingImageError,
    UnknownLabelError,
)
from form_rumor.models.fold_split import FoldSplit
from form_rumor.models.padding_policy import PaddingPolicy
from form_rumor.models.rumor_label import RumorLabel
from form_rumor.models.thread import (
    Claim,
    ConversationThread,
    ResponseTweet,
    TruncatedThread,
)

datasets = ("twitter15", "twitter16", "custom")

_whitespace = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    return _whitespace.sub(" ", unicodedata.normalize("NFKC", text)).strip().lower()


def is_retweet(response_text: str, claim_text: str) -> bool:
    """A retweet repeats the claim verbatim or carries the "RT @" marker"""
    if response_text.lstrip().startswith(RETWEET_MARKER):
        return True
    return normalize_text(response_text) == normalize_text(claim_text)


def remove_retweets(thread: ConversationThread) -> ConversationThread:
    kept = [
        response
        for response in thread.responses
        if normalize_text(response.text)
        and not is_retweet(response.text, thread.claim.text)
    ]
    if len(kept) == len(thread.responses):
        return thread
    return thread.with_responses(kept)


def _chronological(responses: List[ResponseTweet]) -> List[ResponseTweet]:
    # File order is kept unless every response carries a timestamp
    if responses and all(r.timestamp is not None for r in responses):
        return sorted(responses, key=lambda r: r.timestamp)
    return responses


def _dataset_files(root: Path, dataset_name: str) -> List[Path]:
    if dataset_name not in datasets:
        raise ValueError(f"dataset must be one of {', '.join(datasets)}")
    if root.is_file():
        return [root]
    if dataset_name == "custom":
        files = sorted(root.glob("*.jsonl"))
    else:
        candidates = [
            root / f"{dataset_name}.jsonl",
            root / dataset_name / "threads.jsonl",
            root / "threads.jsonl",
        ]
        files = [path for path in candidates if path.is_file()][:1]
    if not files:
        raise FileNotFoundError(f"no thread files for {dataset_name} under {root}")
    return files


def parse_thread_record(record: dict, base_dir: Path) -> ConversationThread:
    image: Optional[str] = record.get("image")
    image_path = None
    if image:
        image_path = Path(image)
        if not image_path.is_absolute():
            image_path = base_dir / image_path
        if not image_path.is_file():
            raise MissingImageError(
                f"claim {record['id']} image not found: {image_path}"
            )
    claim = Claim(
        id=str(record["id"]), text=record["claim_text"], image_path=image_path
    )
    responses = [
        ResponseTweet(id=str(r["id"]), text=r["text"], timestamp=r.get("ts"))
        for r in record.get("responses") or []
    ]
    return ConversationThread(
        claim=claim,
        responses=tuple(_chronological(responses)),
        label=RumorLabel.parse(record["label"]),
    )


def read_thread_file(path: Path) -> Iterable[ConversationThread]:
    with path.open(encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as ex:
                raise CorpusFormatError(path, line_number, f"malformed record ({ex})")
            if not isinstance(record, dict):
                raise CorpusFormatError(
                    path,
                    line_number,
                    f"expected a JSON object, got {type(record).__name__}",
                )
            try:
                thread = parse_thread_record(record, path.parent)
            except UnknownLabelError:
                raise
            except MissingImageError as ex:
                raise MissingImageError(f"{path}:{line_number}: {ex}") from ex
            except (AttributeError, KeyError, TypeError, ValidationError) as ex:
                raise CorpusFormatError(path, line_number, f"malformed record ({ex})")
            yield thread


def load_corpus(root: Path, dataset_name: str) -> List[ConversationThread]:
    """Read every thread of a dataset layout and strip retweets"""
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(f"dataset root does not exist: {root}")

    threads: List[ConversationThread] = []
    removed = 0
    for path in _dataset_files(root, dataset_name):
        for thread in read_thread_file(path):
            filtered = remove_retweets(thread)
            removed += len(thread.responses) - len(filtered.responses)
            threads.append(filtered)

    seen = set()
    for thread in threads:
        if thread.id in seen:
            raise CorpusFormatError(root, 0, f"duplicate thread id {thread.id}")
        seen.add(thread.id)

    logging.info(
        f"Loaded {dataset_name} | threads: {len(threads)} | retweets removed: {removed}"
    )
    return threads


def thread_record(thread: ConversationThread, base_dir: Optional[Path] = None) -> dict:
    image = None
    if thread.claim.image_path is not None:
        image_path = thread.claim.image_path
        if base_dir is not None:
            try:
                image_path = image_path.relative_to(base_dir)
            except ValueError:
                pass
        image = str(image_path)
    return {
        "id": thread.id,
        "claim_text": thread.claim.text,
        "image": image,
        "label": str(thread.label),
        "responses": [
            {"id": r.id, "text": r.text, "ts": r.timestamp} for r in thread.responses
        ],
    }


def write_corpus(threads: Sequence[ConversationThread], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for thread in threads:
            record = thread_record(thread, path.parent)
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def make_folds(
    threads: Sequence[ConversationThread], seed: int, n_folds: int = DEFAULT_FOLDS
) -> List[FoldSplit]:
    """Deterministic label-stratified k-fold split"""
    if n_folds < 2:
        raise FoldError("at least two folds are required")
    if len(threads) < n_folds:
        raise FoldError(
            f"cannot split {len(threads)} thread(s) into {n_folds} folds"
        )

    ids = [thread.id for thread in threads]
    labels = [int(thread.label) for thread in threads]
    smallest_class = min(labels.count(label) for label in set(labels))
    if smallest_class >= n_folds:
        splitter = StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=seed)
    else:
        logging.warning(
            f"Smallest class has {smallest_class} thread(s) for {n_folds} folds, "
            f"falling back to unstratified folds"
        )
        splitter = KFold(n_splits=n_folds, shuffle=True, random_state=seed)

    folds = []
    for fold_index, (train_idx, test_idx) in enumerate(splitter.split(ids, labels)):
        folds.append(
            FoldSplit(
                fold_index=fold_index,
                train_ids=frozenset(ids[i] for i in train_idx),
                test_ids=frozenset(ids[i] for i in test_idx),
            )
        )
    return folds


def save_folds(folds: Sequence[FoldSplit], seed: int, path: Path) -> None:
    payload = {
        "seed": seed,
        "folds": [
            {"train": sorted(fold.train_ids), "test": sorted(fold.test_ids)}
            for fold in folds
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def load_folds(path: Path) -> List[FoldSplit]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        FoldSplit(
            fold_index=index,
            train_ids=frozenset(fold["train"]),
            test_ids=frozenset(fold["test"]),
        )
        for index, fold in enumerate(payload["folds"])
    ]


def truncate_and_mark(
    thread: ConversationThread, policy: PaddingPolicy
) -> TruncatedThread:
    """Keep the earliest N responses and mark which of the N slots are real"""
    kept = thread.responses[: policy.max_responses]
    truncated = thread
    if len(kept) < len(thread.responses):
        truncated = thread.with_responses(kept)
    mask = tuple(i < len(kept) for i in range(policy.max_responses))
    return TruncatedThread(thread=truncated, response_mask=mask)


def threads_by_id(
    threads: Iterable[ConversationThread],
) -> Dict[str, ConversationThread]:
    return {thread.id: thread for thread in threads}
