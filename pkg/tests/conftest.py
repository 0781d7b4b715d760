import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sipkit import load_filter_bank, read_activations

settings.register_profile(
    "ci",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def mini_bank():
    return load_filter_bank(FIXTURES / "mini.filb")


@pytest.fixture(scope="session")
def fixture_activations():
    return {
        k: read_activations(FIXTURES / f"layer_{k:02d}.actv") for k in (1, 2, 3)
    }


@pytest.fixture(scope="session")
def small_synth_dataset(tmp_path_factory):
    """A 40-image generated dataset shared by manifest/pipeline/CLI tests."""
    from sipkit.synth import SynthModel, generate_dataset

    out = tmp_path_factory.mktemp("synthdata")
    model = SynthModel(
        weights={"fourier_slope": 0.6, "contrast": 0.4}, noise_sigma=0.5
    )
    summary = generate_dataset(40, 20240401, model, out)
    return summary


def rand_rgb(rng, h=32, w=32):
    return rng.random((h, w, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
