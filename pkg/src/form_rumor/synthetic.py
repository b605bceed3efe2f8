"""Planted-signal corpora for desk-scale checks of selection and reasoning.

Every thread draws a label uniformly from a balanced pool. A fixed number of
its responses (the signal set) are written mostly with words reserved for
that label; the rest, and most of the claim, use shared distractor words.
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Set, Tuple

import numpy as np

from form_rumor.constants import SIGNALS_FILE, THREADS_FILE
from form_rumor.ingestion import normalize_text, write_corpus
from form_rumor.models.rumor_label import RumorLabel
from form_rumor.models.synthetic_spec import SyntheticSpec
from form_rumor.models.thread import Claim, ConversationThread, ResponseTweet

SignalSets = Dict[str, Set[int]]


def class_words(label: int, spec: SyntheticSpec) -> List[str]:
    count = max(2, spec.vocab_size // 20)
    return [f"c{label}_{j}" for j in range(count)]


def distractor_words(spec: SyntheticSpec) -> List[str]:
    return [f"w{i}" for i in range(spec.vocab_size)]


def _text(
    rng: np.random.Generator,
    n_tokens: int,
    class_pool: Sequence[str],
    distractors: Sequence[str],
    class_probability: float,
) -> str:
    words = []
    for _ in range(n_tokens):
        pool = class_pool if rng.random() < class_probability else distractors
        words.append(pool[rng.integers(len(pool))])
    return " ".join(words)


def generate(spec: SyntheticSpec) -> Tuple[List[ConversationThread], SignalSets]:
    """Threads plus the response indices that carry each thread's label"""
    rng = np.random.default_rng(spec.seed)
    distractors = distractor_words(spec)
    labels = rng.permutation(np.arange(spec.n_threads) % spec.n_classes).tolist()

    # Signal responses always lean on class words; the claim only weakly
    signal_probability = 0.5 + 0.5 * spec.signal_strength
    claim_probability = 0.25 * spec.signal_strength

    threads, signals = [], {}
    for t, label in enumerate(labels):
        thread_id = f"syn{spec.seed}-{t:04d}"
        pool = class_words(label, spec)
        claim_text = _text(
            rng, spec.tokens_per_text, pool, distractors, claim_probability
        )
        signal_set = set(
            rng.choice(
                spec.responses_per_thread, spec.n_signal_responses, replace=False
            ).tolist()
        )

        responses = []
        for j in range(spec.responses_per_thread):
            probability = signal_probability if j in signal_set else 0.0
            text = _text(rng, spec.tokens_per_text, pool, distractors, probability)
            # A copy of the claim would be dropped as a retweet and shift indices
            while normalize_text(text) == normalize_text(claim_text):
                text = _text(rng, spec.tokens_per_text, pool, distractors, probability)
            responses.append(
                ResponseTweet(id=f"{thread_id}-r{j:03d}", text=text, timestamp=j)
            )

        threads.append(
            ConversationThread(
                claim=Claim(id=thread_id, text=claim_text),
                responses=tuple(responses),
                label=RumorLabel(label),
            )
        )
        signals[thread_id] = signal_set
    return threads, signals


def write_synthetic(spec: SyntheticSpec, directory: Path) -> Path:
    directory = Path(directory)
    threads, signals = generate(spec)
    corpus_path = directory / THREADS_FILE
    write_corpus(threads, corpus_path)
    save_signals(signals, directory / SIGNALS_FILE, spec)
    logging.info(
        f"Synthetic corpus written | {corpus_path} | threads: {len(threads)} | "
        f"signal responses: {spec.n_signal_responses}/{spec.responses_per_thread}"
    )
    return corpus_path


def save_signals(signals: Mapping[str, Set[int]], path: Path, spec: SyntheticSpec):
    payload = {
        "spec": spec.dict(),
        "signals": {tid: sorted(indices) for tid, indices in signals.items()},
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def load_signals(path: Path) -> SignalSets:
    payload = json.loads(Path(path).read_text())
    return {tid: set(indices) for tid, indices in payload["signals"].items()}


def selector_quality(
    selected: Mapping[str, Sequence[int]], signals: Mapping[str, Set[int]]
) -> float:
    """Mean over threads of |selected ∩ signal| / |selected|"""
    precisions = []
    for thread_id, indices in selected.items():
        if thread_id not in signals:
            continue
        indices = [i for i in indices if i >= 0]
        if not indices:
            precisions.append(0.0)
            continue
        hits = sum(i in signals[thread_id] for i in indices)
        precisions.append(hits / len(indices))
    return float(np.mean(precisions)) if precisions else 0.0
