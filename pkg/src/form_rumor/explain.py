"""Per-thread account of what the model selected and how it weighed it."""
from typing import Dict, Iterable, List, Mapping, Optional

import torch

from form_rumor.models.features import EncodedThread
from form_rumor.models.rumor_label import RumorLabel
from form_rumor.models.thread import ConversationThread
from form_rumor.network.form_model import FoRMModel


def _rounded(values: torch.Tensor, digits: int = 6) -> List[float]:
    return [round(float(v), digits) for v in values.reshape(-1)]


def _distribution(probs: torch.Tensor) -> Dict[str, float]:
    return {str(label): round(float(probs[label]), 6) for label in RumorLabel}


@torch.no_grad()
def explain_thread(
    model: FoRMModel,
    encoded: EncodedThread,
    thread: Optional[ConversationThread] = None,
) -> Dict:
    model.eval()
    output = model(encoded)
    texts = {}
    if thread is not None:
        texts = {response.id: response.text for response in thread.responses}

    real = int(encoded.response_mask.sum())
    selected = []
    for index, score in zip(
        output.selection.selected_indices, output.selection.selected_scores
    ):
        response_id = encoded.response_ids[index]
        selected.append(
            {
                "index": index,
                "id": response_id,
                "text": texts.get(response_id),
                "score": round(score, 6),
            }
        )

    nodes = [
        {
            "index": node.index,
            "significance": round(float(significance), 6),
            "probs": _distribution(node_probs),
        }
        for node, significance, node_probs in zip(
            output.nodes,
            output.prediction.node_significance,
            output.prediction.per_node_probs,
        )
    ]

    predicted = RumorLabel(int(torch.argmax(output.probs)))
    return {
        "thread_id": encoded.thread_id,
        "label": str(encoded.label),
        "predicted": str(predicted),
        "probs": _distribution(output.probs),
        "alpha": _rounded(output.selection.alpha[:real]),
        "selected": selected,
        "nodes": nodes,
    }


def explain_corpus(
    model: FoRMModel,
    encoded: Iterable[EncodedThread],
    threads: Mapping[str, ConversationThread],
) -> Iterable[Dict]:
    for item in encoded:
        yield explain_thread(model, item, threads.get(item.thread_id))
