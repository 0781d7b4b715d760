import json

import numpy as np
import pytest

from sipkit.errors import SchemaError
from sipkit.manifest import load_manifest
from sipkit.synth import (
    SynthModel,
    compute_model_sips,
    generate_dataset,
    generate_image,
    load_model_spec,
    spectral_noise,
)


class TestSpectralNoise:
    def test_range_and_determinism(self):
        a = spectral_noise(64, -2.0, seed=3)
        b = spectral_noise(64, -2.0, seed=3)
        assert np.array_equal(a, b)
        assert a.min() >= 0.0 and a.max() <= 1.0

    def test_modes_differ(self):
        noisy = spectral_noise(64, -2.0, seed=1, magnitudes="noisy")
        radial = spectral_noise(64, -2.0, seed=1, magnitudes="radial")
        assert not np.allclose(noisy, radial)
        with pytest.raises(ValueError):
            spectral_noise(64, -2.0, seed=1, magnitudes="nope")


class TestGenerateImage:
    @pytest.mark.parametrize("kind", ["noise", "grating", "composition", "gradient"])
    def test_kinds_produce_valid_rgb(self, kind, rng):
        img = generate_image(kind, rng, (64, 96))
        assert img.ndim == 3 and img.shape[2] == 3
        assert 64 <= img.shape[0] <= 96 and 64 <= img.shape[1] <= 96
        assert img.min() >= 0.0 and img.max() <= 1.0
        # every kind must leave a usable gradient signal
        from sipkit.imgproc import to_grayscale

        assert to_grayscale(img).std() > 0

    def test_symmetric_compositions_never_constant(self):
        # regression guard: the mirror fold must not erase all shapes
        from sipkit.imgproc import to_grayscale

        for seed in range(40):
            rng = np.random.default_rng(seed)
            img = generate_image("composition", rng, (64, 96))
            assert to_grayscale(img).std() > 0


class TestGenerateDataset:
    def test_manifest_loads_and_is_deterministic(self, tmp_path):
        model = SynthModel(weights={"contrast": 1.0}, noise_sigma=0.2)
        out1 = generate_dataset(8, 5, model, tmp_path / "a")
        out2 = generate_dataset(8, 5, model, tmp_path / "b")
        m1 = (tmp_path / "a" / "manifest.csv").read_bytes()
        m2 = (tmp_path / "b" / "manifest.csv").read_bytes()
        assert m1 == m2
        manifest = load_manifest(out1["manifest"], out1["meta"])
        assert len(manifest.image_ids()) == 8
        assert manifest.scales == {"rating": (0.0, 1.0)}

    def test_rating_follows_declared_model(self, small_synth_dataset):
        sips = small_synth_dataset["model_sips"]
        ratings = small_synth_dataset["ratings"]
        z = {k: (v - v.mean()) / v.std() for k, v in sips.items()}
        signal = 0.6 * z["fourier_slope"] + 0.4 * z["contrast"]
        # ratings are an affine rescale of signal + noise(0.5)
        rho = np.corrcoef(signal, ratings)[0, 1]
        expected = np.sqrt(signal.var() / (signal.var() + 0.25))
        assert rho == pytest.approx(expected, abs=0.2)

    def test_rejects_cnn_dependent_weights(self):
        with pytest.raises(SchemaError):
            SynthModel(weights={"sparseness": 1.0})

    def test_model_spec_roundtrip(self, tmp_path):
        spec = {
            "weights": {"fourier_slope": 0.6, "contrast": 0.4},
            "noise_sigma": 0.5,
            "dataset_id": "demo",
        }
        path = tmp_path / "model.json"
        path.write_text(json.dumps(spec))
        model = load_model_spec(path)
        assert model.weights == spec["weights"]
        assert model.dataset_id == "demo"


class TestComputeModelSips:
    def test_matches_pipeline_values(self, rng, mini_bank):
        from sipkit.pipeline import compute_sip_vector

        img = generate_image("noise", rng, (96, 128))
        got = compute_model_sips(img, ["contrast", "fourier_slope"], seed=0)
        vec, _ = compute_sip_vector(img, mini_bank, seed=0)
        assert got["contrast"] == pytest.approx(vec.contrast, abs=1e-9)
        assert got["fourier_slope"] == pytest.approx(vec.fourier_slope, abs=1e-9)

    def test_unsupported_name(self, rng):
        img = generate_image("noise", rng, (64, 64))
        with pytest.raises(SchemaError):
            compute_model_sips(img, ["symmetry_lr"])
