import pytest
import torch

from form_rumor.models.model_dims import ModelDims
from form_rumor.models.train_config import Ablation
from tests.factories import pad_encoded, random_encoded, seeded_model

dims = ModelDims(d_text=6, d_image=5, d_model=6, d_hidden=4)

full_parameters = {
    "W_t",
    "W_z",
    "fusion.W_h",
    "fusion.W_o",
    "fusion.W_t2o",
    "fusion.W_o2t",
    "selection.W_a",
    "selection.sel_mlp.0.weight",
    "selection.sel_mlp.0.bias",
    "selection.sel_mlp.2.weight",
    "selection.sel_mlp.2.bias",
    "reasoning.W_p",
    "reasoning.W_q",
    "reasoning.W_pq",
    "reasoning.lam_mlp.0.weight",
    "reasoning.lam_mlp.0.bias",
    "reasoning.lam_mlp.2.weight",
    "reasoning.lam_mlp.2.bias",
    "reasoning.W_y",
    "reasoning.W_sq",
}


def parameter_names(ablation):
    return set(dict(seeded_model(dims, ablation=ablation).named_parameters()))


def test_full_parameter_set():
    assert parameter_names(Ablation.none) == full_parameters
    assert parameter_names(Ablation.no_s) == full_parameters


def test_no_v_drops_visual_parameters():
    visual = {"fusion.W_o", "fusion.W_t2o", "fusion.W_o2t"}
    assert parameter_names(Ablation.no_v) == full_parameters - visual


def test_no_f_drops_reasoning_parameters():
    names = parameter_names(Ablation.no_f)
    assert names == {n for n in full_parameters if not n.startswith("reasoning.")}


def test_no_f_predicts_with_the_selection_head():
    model = seeded_model(dims, ablation=Ablation.no_f)
    output = model(random_encoded(dims, n_real=5))
    assert output.nodes == ()
    assert torch.allclose(output.probs, torch.softmax(output.selection.y1_logits, 0))


def test_no_v_ignores_the_image():
    model = seeded_model(dims, ablation=Ablation.no_v)
    encoded = random_encoded(dims, n_real=4, seed=1)
    other_image = random_encoded(dims, n_real=4, seed=2).claim_objects
    with torch.no_grad():
        a = model(encoded).probs
        b = model(encoded._replace(claim_objects=other_image)).probs
    assert torch.equal(a, b)


@pytest.mark.timeout(60)
def test_distribution_validity_over_random_draws():
    toy = ModelDims(d_text=8, d_image=6, d_model=8, d_hidden=8)
    generator = torch.Generator().manual_seed(0)
    for draw in range(1000):
        n_real = int(torch.randint(0, 6, (1,), generator=generator))
        model = seeded_model(toy, draw, top_k=3, mask_padding=bool(draw % 2))
        encoded = random_encoded(
            toy,
            n_real=n_real,
            n_slots=6,
            max_tokens=4,
            max_objects=3,
            real_tokens=1 + draw % 4,
            real_objects=draw % 4,
            seed=draw,
        )
        with torch.no_grad():
            probs = model(encoded).probs
        assert probs.min() >= 0.0
        assert abs(probs.sum().item() - 1.0) <= 1e-5


@pytest.mark.parametrize("seed", range(5))
def test_masked_padding_does_not_change_predictions(seed):
    model = seeded_model(dims, seed, mask_padding=True)
    encoded = random_encoded(
        dims, n_real=4, max_tokens=3, max_objects=2, real_tokens=2, real_objects=1,
        seed=seed,
    )
    padded = pad_encoded(encoded, n_slots=9, max_tokens=6, max_objects=5)
    with torch.no_grad():
        original = model(encoded)
        grown = model(padded)
    assert grown.selection.selected_indices == original.selection.selected_indices
    assert torch.allclose(grown.probs, original.probs, atol=1e-5)


def test_unmasked_padding_enters_selection():
    model = seeded_model(dims, 0, mask_padding=False)
    encoded = random_encoded(dims, n_real=3, n_slots=5, seed=0)
    with torch.no_grad():
        alpha = model(encoded).selection.alpha
    assert alpha[3:].sum() > 0
    assert alpha.sum().item() == pytest.approx(1.0)


def test_predict_returns_a_label_code():
    model = seeded_model(dims, 0)
    assert model.predict(random_encoded(dims)) in range(4)
