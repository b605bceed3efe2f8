import pytest

from form_rumor.encoders.pipeline import encode_corpus_sync
from form_rumor.encoders.toy import ToyEncoder
from form_rumor.models.model_dims import ModelDims
from form_rumor.models.padding_policy import PaddingPolicy
from form_rumor.models.synthetic_spec import SyntheticSpec
from form_rumor.synthetic import generate, write_synthetic


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow tests"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: mark test as slow to run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        # --runslow given in cli: do not skip slow tests
        return
    skip_slow = pytest.mark.skip(reason="need --runslow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def toy_dims() -> ModelDims:
    return ModelDims.toy()


@pytest.fixture
def toy_encoder(toy_dims) -> ToyEncoder:
    return ToyEncoder(d_text=toy_dims.d_text, d_image=toy_dims.d_image)


@pytest.fixture
def small_policy() -> PaddingPolicy:
    return PaddingPolicy(max_responses=10, max_tokens=8, max_objects=4)


@pytest.fixture
def synthetic_dir(tmp_path):
    spec = SyntheticSpec(n_threads=12, responses_per_thread=6, n_signal_responses=2)
    write_synthetic(spec, tmp_path / "synth")
    return tmp_path / "synth"


def encode_synthetic(spec: SyntheticSpec, policy: PaddingPolicy, dims: ModelDims):
    threads, signals = generate(spec)
    encoder = ToyEncoder(d_text=dims.d_text, d_image=dims.d_image)
    encoded = encode_corpus_sync(threads, policy, encoder)
    return threads, signals, encoded


@pytest.fixture
def synthetic_corpus(toy_dims):
    spec = SyntheticSpec(n_threads=16, responses_per_thread=6, n_signal_responses=2)
    policy = PaddingPolicy(max_responses=6, max_tokens=8, max_objects=2)
    return encode_synthetic(spec, policy, toy_dims)
