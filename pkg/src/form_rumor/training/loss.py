from typing import NamedTuple

import torch
import torch.nn.functional as F

from form_rumor.constants import NUM_CLASSES, PROBABILITY_FLOOR


class LossTerms(NamedTuple):
    total: torch.Tensor
    selection: torch.Tensor
    reason: torch.Tensor


def compute_loss(
    y1_logits: torch.Tensor,
    graph_probs: torch.Tensor,
    label: int,
    use_selection_loss: bool = True,
) -> LossTerms:
    """L = L_selection + L_reason with unit weights.

    L_selection is cross-entropy on the auxiliary logits. L_reason is
    -log P(y|G,S) on the already normalized mixture, floored at 1e-12.
    """
    label = int(label)
    if not 0 <= label < NUM_CLASSES:
        raise ValueError(f"label {label} outside 0..{NUM_CLASSES - 1}")

    target = torch.tensor([label], device=y1_logits.device)
    selection = F.cross_entropy(y1_logits.unsqueeze(0), target)
    reason = -torch.log(graph_probs[label].clamp_min(PROBABILITY_FLOOR))
    total = selection + reason if use_selection_loss else reason
    return LossTerms(total, selection, reason)
