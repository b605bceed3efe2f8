import numpy as np
import pytest
import torch
from torch.func import functional_call

from form_rumor.models.features import ObjectFeatures, TokenFeatures
from form_rumor.models.model_dims import ModelDims
from form_rumor.models.train_config import Ablation
from form_rumor.network.claim_fusion import (
    ClaimFusion,
    cross_align,
    cross_align_image_to_text,
    cross_align_text_to_image,
)
from form_rumor.network.functional import cosine_matrix, init_parameters
from tests import oracles
from tests.factories import random_encoded

dims = ModelDims(d_text=6, d_image=5, d_model=6, d_hidden=4)


def fusion_module(seed, use_image=True):
    torch.manual_seed(seed)
    module = ClaimFusion(dims, use_image=use_image)
    init_parameters(module)
    return module.double()


@pytest.mark.parametrize("seed", range(20))
def test_fusion_matches_loop_oracle(seed):
    module = fusion_module(seed)
    encoded = random_encoded(dims, max_tokens=3, max_objects=2, seed=seed)
    fused = module(encoded.claim_tokens, encoded.claim_objects)

    S_m, s_m = oracles.fusion(
        oracles.params_of(module),
        encoded.claim_tokens.matrix.numpy(),
        encoded.claim_objects.matrix.numpy(),
    )
    np.testing.assert_allclose(fused.S_m.detach().numpy(), S_m, atol=1e-10)
    np.testing.assert_allclose(fused.s_m.detach().numpy(), s_m, atol=1e-10)


def test_orthogonal_modalities_align_to_zero():
    T_s = torch.tensor([[1.0, 1.0], [0.0, 0.0]])
    V_s = torch.tensor([[0.0], [1.0]])
    assert torch.equal(cross_align(T_s, V_s), torch.zeros(2))
    assert torch.equal(cross_align(V_s, T_s), torch.zeros(2))


def test_identical_single_columns_align_to_themselves():
    column = torch.tensor([[0.3], [-0.4]])
    assert torch.allclose(cross_align(column, column), column[:, 0])


def test_fused_shapes():
    module = fusion_module(0)
    encoded = random_encoded(dims, max_tokens=3, max_objects=2)
    fused = module(encoded.claim_tokens, encoded.claim_objects)
    assert fused.S_m.shape == (6, 5)
    assert fused.s_m.shape == (6,)
    assert fused.column_mask.shape == (5,)
    assert fused.S_m.abs().max() < 1.0


def test_text_only_fusion():
    module = fusion_module(0, use_image=Ablation.no_v.uses_image)
    assert {name for name, _ in module.named_parameters()} == {"W_h"}

    encoded = random_encoded(dims, max_tokens=3, max_objects=2)
    fused = module(encoded.claim_tokens, encoded.claim_objects)
    assert torch.equal(fused.S_m, fused.T_s)
    assert torch.equal(fused.s_m, torch.zeros(6, dtype=torch.float64))
    assert fused.V_s is None


@pytest.mark.parametrize("seed", range(5))
def test_token_and_object_order_leave_alignment_unchanged(seed):
    module = fusion_module(seed)
    encoded = random_encoded(dims, max_tokens=4, max_objects=3, seed=seed)
    H_s, token_mask = encoded.claim_tokens
    O_s, object_mask = encoded.claim_objects
    token_order = torch.tensor([2, 0, 3, 1])
    object_order = torch.tensor([1, 2, 0])

    T_s, V_s = module.project_modalities(H_s, O_s)
    T_perm, V_perm = module.project_modalities(
        H_s[:, token_order], O_s[:, object_order]
    )
    assert torch.allclose(T_perm, T_s[:, token_order], atol=1e-12)
    assert torch.allclose(V_perm, V_s[:, object_order], atol=1e-12)
    assert torch.allclose(
        cross_align_text_to_image(T_perm, V_perm),
        cross_align_text_to_image(T_s, V_s),
        atol=1e-12,
    )
    assert torch.allclose(
        cross_align_image_to_text(V_perm, T_perm),
        cross_align_image_to_text(V_s, T_s),
        atol=1e-12,
    )

    fused = module(encoded.claim_tokens, encoded.claim_objects)
    shuffled = module(
        TokenFeatures(H_s[:, token_order], token_mask[token_order]),
        ObjectFeatures(O_s[:, object_order], object_mask[object_order]),
    )
    assert torch.allclose(shuffled.s_m, fused.s_m, atol=1e-12)


def test_scaled_object_keeps_cosines_and_scales_its_contribution():
    generator = torch.Generator().manual_seed(11)
    T_s = torch.randn(6, 3, generator=generator, dtype=torch.float64)
    V_s = torch.randn(6, 2, generator=generator, dtype=torch.float64)
    scaled = V_s.clone()
    scaled[:, 1] *= 3.5

    assert torch.allclose(cosine_matrix(T_s, scaled), cosine_matrix(T_s, V_s))

    first = torch.tensor([True, False])
    second = torch.tensor([False, True])
    contribution = cross_align(T_s, V_s, key_mask=second)
    assert torch.allclose(
        cross_align(T_s, scaled, key_mask=second), 3.5 * contribution, atol=1e-12
    )
    assert torch.allclose(
        cross_align(T_s, scaled),
        cross_align(T_s, V_s, key_mask=first) + 3.5 * contribution,
        atol=1e-12,
    )


@pytest.mark.timeout(60)
def test_fused_vector_gradients_match_finite_differences():
    module = fusion_module(1)
    encoded = random_encoded(dims, max_tokens=3, max_objects=2, seed=1)
    token_mask = encoded.claim_tokens.token_mask
    object_mask = encoded.claim_objects.object_mask
    names, values = zip(
        *[
            (n, p.detach().clone().requires_grad_())
            for n, p in module.named_parameters()
        ]
    )
    H_s = encoded.claim_tokens.matrix.clone().requires_grad_()
    O_s = encoded.claim_objects.matrix.clone().requires_grad_()

    def fused_vector(H, O, *parameters):
        fused = functional_call(
            module,
            dict(zip(names, parameters)),
            (TokenFeatures(H, token_mask), ObjectFeatures(O, object_mask)),
        )
        return fused.s_m

    assert torch.autograd.gradcheck(
        fused_vector, (H_s, O_s, *values), eps=1e-6, atol=1e-5, rtol=1e-4
    )
