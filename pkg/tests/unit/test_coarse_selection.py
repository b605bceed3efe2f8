import numpy as np
import pytest
import torch

from form_rumor.exceptions import SelectionParameterError
from form_rumor.models.model_dims import ModelDims
from form_rumor.network.coarse_selection import select_top_k
from tests import oracles
from tests.factories import permute_responses, random_encoded, seeded_model

dims = ModelDims(d_text=6, d_image=5, d_model=6, d_hidden=4)


def all_real(n):
    return torch.ones(n, dtype=torch.bool)


def test_top_k_orders_by_alpha():
    assert select_top_k(torch.tensor([0.5, 0.3, 0.2]), all_real(3), 2)[0] == (0, 1)


def test_top_k_ties_take_lowest_index():
    indices, scores = select_top_k(torch.tensor([0.2, 0.4, 0.4]), all_real(3), 1)
    assert indices == (1,)
    assert scores == pytest.approx((0.4,))


def test_top_k_larger_than_thread_takes_all_real():
    mask = torch.tensor([True, True, False, False])
    alpha = torch.tensor([0.1, 0.2, 0.4, 0.3])
    assert select_top_k(alpha, mask, 10)[0] == (1, 0)


def test_top_k_empty_thread():
    assert select_top_k(torch.rand(4), torch.zeros(4, dtype=torch.bool), 3) == ((), ())


def test_top_k_must_be_positive():
    with pytest.raises(SelectionParameterError, match="top-k must be ≥ 1"):
        select_top_k(torch.rand(3), all_real(3), 0)


@pytest.mark.parametrize("seed", range(5))
def test_top_k_grows_by_prefix(seed):
    generator = torch.Generator().manual_seed(seed)
    alpha = torch.softmax(torch.randn(8, generator=generator), dim=0)
    alpha[5] = alpha[2]
    mask = all_real(8)
    mask[6] = False

    previous = ()
    for k in range(1, 9):
        indices, _ = select_top_k(alpha, mask, k)
        assert indices[: len(previous)] == previous
        assert len(indices) == min(k, 7)
        previous = indices
    assert 6 not in previous


@pytest.mark.parametrize("seed", range(20))
def test_selection_matches_loop_oracle(seed):
    model = seeded_model(dims, seed)
    encoded = random_encoded(dims, n_real=4, seed=seed)
    fused = model.fusion(encoded.claim_tokens, encoded.claim_objects)
    Z = encoded.response_sentences(model.W_t)
    result = model.selection(fused.s_m, Z, model.W_z, encoded.response_mask, 3)

    alpha, y1 = oracles.selection(
        oracles.params_of(model.selection),
        fused.s_m.detach().numpy(),
        Z.detach().numpy(),
        model.W_z.detach().numpy(),
    )
    np.testing.assert_allclose(result.alpha.detach().numpy(), alpha, atol=1e-10)
    np.testing.assert_allclose(result.y1_logits.detach().numpy(), y1, atol=1e-10)
    assert result.selected_indices == tuple(np.argsort(-alpha, kind="stable")[:3])


def test_alpha_is_a_distribution():
    model = seeded_model(dims, 3)
    output = model(random_encoded(dims, n_real=6, seed=3))
    alpha = output.selection.alpha
    assert torch.all(alpha >= 0)
    assert alpha.sum().item() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_selection_is_permutation_equivariant(seed):
    model = seeded_model(dims, seed)
    encoded = random_encoded(dims, n_real=5, seed=seed)
    order = [3, 0, 4, 2, 1]
    shuffled = permute_responses(encoded, order)

    with torch.no_grad():
        original = model(encoded)
        permuted = model(shuffled)

    assert torch.allclose(
        permuted.selection.alpha, original.selection.alpha[order], atol=1e-12
    )
    assert torch.allclose(
        permuted.selection.y1_logits, original.selection.y1_logits, atol=1e-6
    )

    def selected_ids(thread, output):
        return {thread.response_ids[i] for i in output.selection.selected_indices}

    assert selected_ids(shuffled, permuted) == selected_ids(encoded, original)
    assert torch.allclose(permuted.probs, original.probs, atol=1e-6)
