import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from conftest import dice_of
from oracles import otsu_bruteforce
from tumorseg.acwe import segment
from tumorseg.edges import EdgeParams, gradient_magnitude, otsu_threshold, segment_baseline
from tumorseg.errors import ParameterError
from tumorseg.imaging import NATIVE512, BoundingBox
from tumorseg.phantoms import disk_phantom, generate


def step_image(width=12, height=6, at=6):
    img = np.zeros((height, width))
    img[:, at:] = 1.0
    return img


class TestGradient:
    @pytest.mark.parametrize("op", ["prewitt", "sobel"])
    def test_constant(self, op):
        assert (gradient_magnitude(np.full((5, 5), 0.3), op) == 0).all()

    def test_prewitt_step_by_hand(self):
        # columns 5 and 6 straddle the step; the x-kernel sums three rows of (+1 - 0) there
        out = gradient_magnitude(step_image(), "prewitt")
        expected = np.zeros((6, 12))
        expected[:, 5:7] = 1.0
        np.testing.assert_array_equal(out, expected)

    def test_sobel_peaks_at_same_columns(self):
        p = gradient_magnitude(step_image(), "prewitt")
        s = gradient_magnitude(step_image(), "sobel")
        assert set(np.flatnonzero(p.max(axis=0))) == set(np.flatnonzero(s.max(axis=0))) == {5, 6}

    def test_too_small(self):
        with pytest.raises(ParameterError):
            gradient_magnitude(np.zeros((2, 5)))

    def test_unknown_operator(self):
        with pytest.raises(ParameterError):
            gradient_magnitude(np.zeros((4, 4)), "roberts")

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(-4, 4), st.integers(-4, 4))
    def test_translation_equivariance(self, seed, dy, dx):
        img = np.zeros((40, 40))
        img[12:28, 12:28] = np.random.default_rng(seed).random((16, 16))
        shifted = np.roll(img, (dy, dx), axis=(0, 1))
        a = np.roll(gradient_magnitude(img), (dy, dx), axis=(0, 1))
        b = gradient_magnitude(shifted)
        np.testing.assert_allclose(a[6:-6, 6:-6], b[6:-6, 6:-6], atol=1e-12)


class TestOtsu:
    def test_constant(self):
        assert otsu_threshold(np.full((4, 4), 0.6)) == 0.0

    def test_two_level(self):
        img = np.array([0.2] * 8 + [0.8] * 8).reshape(4, 4)
        t = otsu_threshold(img)
        assert 0.2 < t < 0.8

    def test_three_level_matches_bruteforce(self):
        img = np.array([0.1] * 30 + [0.45] * 50 + [0.9] * 20).reshape(10, 10)
        k = otsu_bruteforce(img)
        assert otsu_threshold(img) == (k + 0.5) / 255

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.floats(0, 1)))
    def test_matches_bruteforce(self, img):
        k = otsu_bruteforce(img)
        expected = 0.0 if k is None else (k + 0.5) / 255
        assert otsu_threshold(img) == expected


class TestBaseline:
    @pytest.mark.parametrize("op", ["prewitt", "sobel"])
    def test_noiseless_disk(self, op):
        img, mask, box = generate(disk_phantom(sigma=0.0))
        out = segment_baseline(img, box, EdgeParams(operator=op))
        assert dice_of(out, mask) >= 0.95

    def test_constant_window(self):
        img = np.full((100, 100), 0.4)
        out = segment_baseline(img, BoundingBox(30, 30, 40, 40, img_frame(img)))
        assert out.sum() == 0

    def test_rician_below_chanvese(self):
        img, mask, box = generate(disk_phantom(sigma=0.1, seed=77))
        cv, _ = segment(img, box)
        pw = segment_baseline(img, box)
        assert dice_of(pw, mask) < dice_of(cv, mask)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.0, 0.25), st.integers(15, 50))
    def test_single_component_or_empty(self, seed, sigma, radius):
        img, _, box = generate(disk_phantom(radius=radius, sigma=sigma, seed=seed))
        out = segment_baseline(img, box)
        _, n = ndimage.label(out, structure=ndimage.generate_binary_structure(2, 1))
        assert n <= 1

    def test_fixed_threshold(self):
        img, mask, box = generate(disk_phantom(sigma=0.0))
        out = segment_baseline(img, box, EdgeParams(threshold=0.5))
        assert dice_of(out, mask) >= 0.95

    def test_box_outside(self):
        with pytest.raises(ParameterError):
            segment_baseline(np.zeros((50, 50)), BoundingBox(10, 10, 10, 10, NATIVE512))

    @pytest.mark.parametrize(
        "kwargs", [{"operator": "canny"}, {"threshold": 1.5}, {"threshold": "mean"}, {"closing_radius": -1}]
    )
    def test_params_validation(self, kwargs):
        with pytest.raises(ParameterError):
            EdgeParams(**kwargs)

    def test_params_json(self):
        for p in (EdgeParams(), EdgeParams("sobel", 0.25, 3)):
            assert EdgeParams.from_json(p.to_json()) == p


def img_frame(img):
    from tumorseg.imaging import frame_of

    return frame_of(img)
