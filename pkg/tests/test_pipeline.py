import numpy as np
import pytest

from sipkit import SIP_NAMES, SipTable, SipVector
from sipkit.errors import AlignmentError, DropBudgetExceeded, MissingActivations
from sipkit.manifest import load_manifest, rescale_ratings, subsample
from sipkit.pipeline import (
    compute_sip_table,
    compute_sip_vector,
    layer_predictors,
    report_correlations,
    report_descriptives,
    report_layer_probe,
    report_regression,
)
from sipkit.stats import CvScheme


def _table_from_matrix(X, ids=None, dataset_id="synthetic"):
    """Build a SipTable whose 20 columns are given by X (n x 20)."""
    n = X.shape[0]
    ids = ids or [f"img_{i:04d}" for i in range(n)]
    rows = {}
    for i, image_id in enumerate(ids):
        v = X[i]
        rows[image_id] = SipVector(
            hue=abs(v[0]) % 1.0 * 0.999, saturation=abs(v[1]) % 1.0,
            luminance=abs(v[2]) % 100.0, lab_a=v[3], lab_b=v[4],
            color_entropy=abs(v[5]) % 8.0, aspect_ratio=1.0 + abs(v[6]),
            image_size=500.0 + abs(v[7]) * 100, contrast=abs(v[8]) * 10,
            luminance_entropy=abs(v[9]) % 8.0, edge_entropy=abs(v[10]),
            self_similarity=abs(v[11]) % 1.0, complexity=abs(v[12]),
            anisotropy=abs(v[13]) * 0.01, fourier_slope=-2.0 + v[14] * 0.3,
            fourier_sigma=abs(v[15]) * 0.1, symmetry_lr=abs(v[16]) % 1.0,
            symmetry_ud=abs(v[17]) % 1.0, sparseness=abs(v[18]),
            variability=abs(v[19]),
        )
    return SipTable(dataset_id, rows)


@pytest.fixture(scope="module")
def random_table():
    rng = np.random.default_rng(8)
    return _table_from_matrix(rng.standard_normal((120, 20)))


class TestComputeSipVector:
    def test_full_vector_on_synthetic_image(self, mini_bank, rng):
        from sipkit.synth import spectral_noise

        field = spectral_noise(128, -2.0, seed=1)
        img = np.stack([field, field * 0.8, field * 0.5], axis=-1)
        vec, flags = compute_sip_vector(img, mini_bank, seed=0)
        assert flags == []
        assert vec.aspect_ratio == pytest.approx(1.0)
        assert vec.image_size == 256.0
        assert -4.0 < vec.fourier_slope < 0.0
        assert 0.0 <= vec.symmetry_lr <= 1.0

    def test_geometry_omitted_for_fixed_datasets(self, mini_bank, rng):
        img = rng.random((96, 96, 3))
        vec, _ = compute_sip_vector(img, mini_bank, seed=0, with_geometry=False)
        assert vec.aspect_ratio is None and vec.image_size is None


class TestComputeSipTable:
    def test_batch_shapes_and_determinism(self, small_synth_dataset, mini_bank):
        manifest = load_manifest(
            small_synth_dataset["manifest"], small_synth_dataset["meta"]
        )
        ids = subsample(manifest, 10, seed=4)
        t1, rep1 = compute_sip_table(manifest, ids, mini_bank, seed=4, threads=2)
        t2, rep2 = compute_sip_table(manifest, ids, mini_bank, seed=4, threads=1)
        assert rep1["n_computed"] == 10
        assert t1.image_ids() == t2.image_ids()
        for image_id in t1.image_ids():
            assert t1.rows[image_id] == t2.rows[image_id]

    def test_drop_budget(self, tmp_path, mini_bank, small_synth_dataset):
        import json
        import shutil

        src = small_synth_dataset["manifest"].parent
        work = tmp_path / "broken"
        shutil.copytree(src, work)
        # corrupt half of the subsampled images
        manifest = load_manifest(work / "manifest.csv", work / "meta.json")
        ids = subsample(manifest, 8, seed=0)
        for image_id in ids[:4]:
            (work / "images" / f"{image_id}.png").write_bytes(b"not a png")
        with pytest.raises(DropBudgetExceeded):
            compute_sip_table(manifest, ids, mini_bank, seed=0, threads=1)


class TestReportDescriptives:
    def test_quartile_convention(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((5, 20))
        X[:, 8] = [0.0, 1.0, 2.0, 3.0, 4.0]  # contrast column
        table = _table_from_matrix(np.abs(X))
        rows = report_descriptives([table])
        contrast_row = next(r for r in rows if r[1] == "contrast")
        assert contrast_row[2:5] == (0.25, 0.5, 0.75)

    def test_degenerate_scale_flagged(self):
        X = np.zeros((6, 20))
        table = _table_from_matrix(X)
        rows = report_descriptives([table])
        sat = next(r for r in rows if r[1] == "saturation")
        assert sat[-1] == "degenerate_scale"
        assert sat[2:7] == (0.5, 0.5, 0.5, 0.5, 0.5)

    def test_two_datasets_two_blocks(self, random_table):
        rng = np.random.default_rng(5)
        other = _table_from_matrix(rng.standard_normal((30, 20)), dataset_id="b")
        rows = report_descriptives([random_table, other])
        assert len(rows) == 40
        assert {r[0] for r in rows} == {"synthetic", "b"}


class TestReportCorrelations:
    def test_rating_equal_to_sip_gives_rho_one(self, random_table):
        ids = random_table.image_ids()
        ratings = dict(zip(ids, random_table.column("contrast")))
        rep = report_correlations(random_table, {"r": ratings})
        i = list(SIP_NAMES).index("contrast")
        assert rep["map"].rho[i, 0] == pytest.approx(1.0)
        assert rep["map"].p_values[i, 0] == pytest.approx(0.0, abs=1e-12)

    def test_noise_rating_null_calibration(self, random_table):
        ids = random_table.image_ids()
        counts = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            ratings = dict(zip(ids, rng.random(len(ids))))
            rep = report_correlations(random_table, {"r": ratings})
            counts.append(int(rep["significant"].sum()))
        assert 0.0 <= np.mean(counts) <= 3.0  # n=120 here; wide bound

    def test_identical_ratings_zero_distance(self, random_table):
        ids = random_table.image_ids()
        ratings = dict(zip(ids, np.linspace(0, 1, len(ids))))
        rep = report_correlations(random_table, {"a": ratings, "b": ratings})
        assert rep["distances"][0, 1] == pytest.approx(0.0)

    def test_alignment_error(self, random_table):
        with pytest.raises(AlignmentError):
            report_correlations(random_table, {"r": {"someone_else": 1.0}})

    def test_fixed_resolution_geometry_rows_missing(self):
        rng = np.random.default_rng(2)
        table = _table_from_matrix(rng.standard_normal((50, 20)))
        fixed_rows = {
            k: SipVector(**{**v.__dict__, "aspect_ratio": None, "image_size": None})
            for k, v in table.rows.items()
        }
        fixed = SipTable("fixed", fixed_rows, fixed_dims=True)
        ids = fixed.image_ids()
        ratings = dict(zip(ids, rng.random(len(ids))))
        rep = report_correlations(fixed, {"r": ratings})
        geom = [list(SIP_NAMES).index(n) for n in ("aspect_ratio", "image_size")]
        assert np.isnan(rep["map"].rho[geom, 0]).all()
        assert rep["n_missing"] == 2


class TestReportRegression:
    def _rating_from(self, table, weights, sigma, seed):
        rng = np.random.default_rng(seed)
        ids = table.image_ids()
        y = rng.normal(0, sigma, len(ids))
        for name, w in weights.items():
            col = table.column(name)
            y = y + w * (col - col.mean()) / col.std()
        return dict(zip(ids, y))

    def test_recovers_generating_sips(self, random_table):
        hits = 0
        for seed in range(215, 235):
            ratings = self._rating_from(
                random_table, {"fourier_slope": 0.6, "contrast": 0.4}, 0.5, seed
            )
            rep = report_regression(
                random_table, ratings, "r", "sips",
                CvScheme(repetitions=40, seed=seed),
            )
            hits += {"fourier_slope", "contrast"} <= set(rep["selected"])
        assert hits >= 18

    def test_noise_rating_empty_model(self, random_table):
        # With 20 candidate predictors some noise runs select a chance
        # correlate; the calibrated rate claim lives in the stats suite.
        # Here: the empty-model report shape, on seeds where it occurs.
        ids = random_table.image_ids()
        rng = np.random.default_rng(0)
        empties = 0
        for seed in range(215, 225):
            ratings = dict(zip(ids, rng.standard_normal(len(ids))))
            rep = report_regression(
                random_table, ratings, "r", "sips",
                CvScheme(repetitions=40, seed=seed),
            )
            if rep["empty_model"]:
                empties += 1
                assert rep["selected"] == []
                assert rep["standardized_betas"] == []
                assert rep["r2_adjusted_cv"] < 0.05
        assert empties >= 3

    def test_combined_source_no_duplicate_selection(
        self, random_table, fixture_activations
    ):
        # restrict to the 12 ids that exist in the fixture activation files
        matrix = fixture_activations[1]
        sub = SipTable(
            "synthetic",
            {k: random_table.rows[k] for k in matrix.image_ids},
        )
        ratings = self._rating_from(sub, {"contrast": 0.8}, 0.3, 7)
        rep = report_regression(
            sub, ratings, "r", "sips+layer:1", CvScheme(repetitions=10, seed=3),
            activations=fixture_activations,
        )
        assert len(rep["selected"]) == len(set(rep["selected"]))

    def test_missing_layer(self, random_table):
        with pytest.raises(MissingActivations):
            report_regression(
                random_table, {}, "r", "layer:13", CvScheme(seed=0),
                activations={},
            )

    def test_combined_source_at_least_best_single(self, random_table):
        # combined predictors are a superset, so greedy selection may lose at
        # most a small amount against the best single source
        from sipkit.activations import ActivationMatrix

        rng = np.random.default_rng(21)
        ids = random_table.image_ids()
        matrix = ActivationMatrix(
            layer_id=1, image_ids=list(ids),
            data=rng.standard_normal((len(ids), 10)),
        )
        ratings = self._rating_from(
            random_table, {"fourier_slope": 0.7, "contrast": 0.4}, 0.4, 3
        )
        scores = {}
        for source in ("sips", "layer:1", "sips+layer:1"):
            rep = report_regression(
                random_table, ratings, "r", source,
                CvScheme(repetitions=30, seed=5), activations={1: matrix},
            )
            scores[source] = rep["r2_adjusted_cv"]
        best_single = max(scores["sips"], scores["layer:1"])
        assert scores["sips+layer:1"] >= best_single - 0.02


class TestLayerProbe:
    def _aligned_table(self, fixture_activations, rng, inject=None):
        matrix = fixture_activations[2]
        X = rng.standard_normal((len(matrix.image_ids), 20))
        if inject is not None:
            name_idx, col = inject
            X[:, name_idx] = col
        return _table_from_matrix(X, ids=list(matrix.image_ids))

    def test_probe_shapes(self, fixture_activations, rng):
        table = self._aligned_table(fixture_activations, rng)
        result = report_layer_probe(
            table, fixture_activations, CvScheme(repetitions=5, seed=2),
        )
        assert result["layers"] == [1, 2, 3]
        assert set(result["sips"]) == set(SIP_NAMES)
        assert len(result["r2_adjusted_cv"]) == 60

    def test_injected_sip_is_recoverable(self):
        # Build activations whose first dimension IS a property column (with
        # dominant variance); that layer must then predict it almost exactly.
        from sipkit.activations import ActivationMatrix

        rng = np.random.default_rng(4)
        n = 60
        ids = [f"img_{i:04d}" for i in range(n)]
        contrast = rng.uniform(5, 40, n)
        data = rng.standard_normal((n, 10))
        data[:, 0] = contrast
        matrix = ActivationMatrix(layer_id=2, image_ids=ids, data=data)
        X = rng.standard_normal((n, 20))
        X[:, list(SIP_NAMES).index("contrast")] = contrast / 10.0
        table = _table_from_matrix(X, ids=ids)
        result = report_layer_probe(
            table, {2: matrix}, CvScheme(repetitions=20, seed=2),
        )
        assert result["r2_adjusted_cv"][("contrast", 2)] >= 0.99

    def test_noise_sip_not_predictable(self):
        from sipkit.activations import ActivationMatrix

        rng = np.random.default_rng(6)
        n = 60
        ids = [f"img_{i:04d}" for i in range(n)]
        matrix = ActivationMatrix(
            layer_id=3, image_ids=ids, data=rng.standard_normal((n, 10))
        )
        scores = []
        for seed in range(20):
            table = _table_from_matrix(
                np.random.default_rng(seed).standard_normal((n, 20)), ids=ids
            )
            result = report_layer_probe(
                table, {3: matrix}, CvScheme(repetitions=10, seed=seed),
            )
            scores.append(result["r2_adjusted_cv"][("contrast", 3)])
        assert max(scores) <= 0.05

    def test_content_classification(self):
        # two-label content (bright vs dark) encoded in one activation channel
        from sipkit.activations import ActivationMatrix

        rng = np.random.default_rng(9)
        n = 40
        ids = [f"img_{i:04d}" for i in range(n)]
        brightness = np.concatenate([rng.normal(-2, 0.4, n // 2),
                                     rng.normal(2, 0.4, n // 2)])
        data = rng.standard_normal((n, 8)) * 0.3
        data[:, 0] = brightness
        matrix = ActivationMatrix(layer_id=1, image_ids=ids, data=data)
        table = _table_from_matrix(rng.standard_normal((n, 20)), ids=ids)
        labels = {
            image_id: ("bright" if brightness[i] > 0 else "dark")
            for i, image_id in enumerate(ids)
        }
        result = report_layer_probe(
            table, {1: matrix}, CvScheme(repetitions=5, seed=0),
            content_labels=labels,
        )
        assert result["content_accuracy"]["layer:1"] >= 0.95
        assert "sips" in result["content_accuracy"]

    def test_missing_layers_listed(self, fixture_activations, rng):
        table = self._aligned_table(fixture_activations, rng)
        with pytest.raises(MissingActivations, match="5"):
            report_layer_probe(
                table, fixture_activations, CvScheme(seed=0), layers=[1, 5],
            )


class TestLayerPredictors:
    def test_small_layer_reduces_to_d_minus_1(self, fixture_activations):
        rng = np.random.default_rng(0)
        matrix = fixture_activations[1]  # D = 16 < 20
        table = _table_from_matrix(
            rng.standard_normal((12, 20)), ids=list(matrix.image_ids)
        )
        names, cols = layer_predictors(table, matrix, k=20)
        # k limited by min(D - 1, N - 1) = min(15, 11)
        assert cols.shape == (12, 11)
        assert names[0] == "L1:pc01"

    def test_alignment_error(self, fixture_activations, rng):
        table = _table_from_matrix(rng.standard_normal((3, 20)),
                                   ids=["x", "y", "z"])
        with pytest.raises(AlignmentError):
            layer_predictors(table, fixture_activations[1])
