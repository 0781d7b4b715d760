import colorsys
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from sipkit import display_rescale, load_image, rgb_to_hsv, rgb_to_lab, to_grayscale
from sipkit.errors import DecodeError, IoError


def _save_png(tmp_path, arr8, name="img.png"):
    path = tmp_path / name
    Image.fromarray(arr8, mode="RGB").save(path)
    return path


class TestLoadImage:
    def test_pure_red_png_roundtrip(self, tmp_path):
        arr = np.zeros((2, 2, 3), dtype=np.uint8)
        arr[..., 0] = 255
        img = load_image(_save_png(tmp_path, arr))
        assert img.shape == (2, 2, 3)
        assert np.allclose(img, [[1, 0, 0]] * 2)

    def test_missing_path(self, tmp_path):
        with pytest.raises(IoError):
            load_image(tmp_path / "nope.png")

    def test_jpeg_gray_128_within_codec_tolerance(self, tmp_path):
        arr = np.full((16, 16, 3), 128, dtype=np.uint8)
        path = tmp_path / "gray.jpg"
        Image.fromarray(arr, mode="RGB").save(path, quality=95)
        img = load_image(path)
        assert np.abs(img - 128 / 255).max() <= 2 / 255

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "bad.png"
        path.write_bytes(b"definitely not an image")
        with pytest.raises(DecodeError):
            load_image(path)

    def test_unsupported_format(self, tmp_path):
        path = tmp_path / "img.tiff"
        Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(path, format="TIFF")
        with pytest.raises(DecodeError):
            load_image(path)


class TestRgbToHsv:
    def test_pure_red(self):
        hsv = rgb_to_hsv(np.tile([1.0, 0.0, 0.0], (2, 2, 1)))
        assert np.allclose(hsv[0, 0], [0.0, 1.0, 1.0])

    def test_achromatic_hue_zero(self):
        hsv = rgb_to_hsv(np.full((2, 2, 3), 0.5))
        assert np.allclose(hsv[0, 0], [0.0, 0.0, 0.5])

    def test_pure_green(self):
        hsv = rgb_to_hsv(np.tile([0.0, 1.0, 0.0], (1, 1, 1)))
        assert np.allclose(hsv[0, 0], [1 / 3, 1.0, 1.0])

    @given(st.integers(0, 2**32 - 1))
    def test_matches_colorsys(self, seed):
        rng = np.random.default_rng(seed)
        rgb = rng.random(3)
        h, s, v = colorsys.rgb_to_hsv(*rgb)
        got = rgb_to_hsv(rgb.reshape(1, 1, 3))[0, 0]
        assert np.allclose(got, [h, s, v], atol=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip_for_saturated_pixels(self, seed):
        rng = np.random.default_rng(seed)
        rgb = rng.random(3)
        h, s, v = rgb_to_hsv(rgb.reshape(1, 1, 3))[0, 0]
        if s > 0:
            back = colorsys.hsv_to_rgb(h, s, v)
            assert np.allclose(back, rgb, atol=1e-6)


class TestRgbToLab:
    def test_white_point(self):
        lab = rgb_to_lab(np.ones((2, 2, 3)))[0, 0]
        assert lab[0] == pytest.approx(100.0, abs=1e-3)
        assert abs(lab[1]) < 0.5 and abs(lab[2]) < 0.5

    def test_black(self):
        lab = rgb_to_lab(np.zeros((2, 2, 3)))[0, 0]
        assert np.allclose(lab, [0.0, 0.0, 0.0], atol=1e-8)

    def test_matches_reference_colorimetry(self):
        skimage_color = pytest.importorskip("skimage.color")
        rng = np.random.default_rng(0)
        rgb = rng.random((5, 7, 3))
        rgb[0, 0] = [1.0, 0.0, 0.0]
        ours = rgb_to_lab(rgb)
        ref = skimage_color.rgb2lab(rgb)
        assert np.abs(ours - ref).max() < 0.5

    def test_l_monotone_in_gray_level(self):
        grays = np.linspace(0, 1, 32).reshape(-1, 1, 1) * np.ones((32, 1, 3))
        L = rgb_to_lab(grays)[..., 0].ravel()
        assert (np.diff(L) > 0).all()


class TestToGrayscale:
    def test_white_and_black(self):
        assert to_grayscale(np.ones((2, 2, 3)))[0, 0] == pytest.approx(1.0)
        assert to_grayscale(np.zeros((2, 2, 3)))[0, 0] == pytest.approx(0.0)

    def test_pure_red_linear_weight(self):
        g = to_grayscale(np.tile([1.0, 0.0, 0.0], (2, 2, 1)))
        assert g[0, 0] == pytest.approx(0.2126, abs=1e-12)


class TestDisplayRescale:
    def test_fits_unchanged(self):
        img = np.random.default_rng(0).random((600, 800, 3))
        out = display_rescale(img)
        assert out is img

    def test_exact_double(self):
        img = np.zeros((2400, 3840, 3))
        out = display_rescale(img)
        assert out.shape[:2] == (1200, 1920)

    def test_width_bound_factor(self):
        # factor = min(1920/4000, 1200/1000) = 0.48
        img = np.zeros((1000, 4000, 3))
        out = display_rescale(img)
        assert out.shape[:2] == (480, 1920)

    @given(st.integers(1, 5000), st.integers(1, 5000))
    def test_idempotent_and_aspect_preserving(self, w, h):
        img = np.zeros((h, w, 3))
        once = display_rescale(img)
        hh, ww = once.shape[:2]
        assert ww <= 1920 and hh <= 1200
        assert display_rescale(once).shape == once.shape
        if (w, h) != (ww, hh):
            # half-up rounding on both axes, except where the 1 px floor wins
            factor = min(1920 / w, 1200 / h)
            assert ww == max(1, int(np.floor(w * factor + 0.5)))
            assert hh == max(1, int(np.floor(h * factor + 0.5)))
            if min(ww, hh) > 1:
                assert abs(ww - w * factor) <= 0.5 + 1e-9
                assert abs(hh - h * factor) <= 0.5 + 1e-9

    def test_interpolation_preserves_constant(self):
        img = np.full((2400, 2400, 3), 0.25)
        out = display_rescale(img)
        assert np.allclose(out, 0.25, atol=1e-6)
