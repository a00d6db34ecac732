import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import ndimage

from gims import imagekp
from gims.core import Image, Keypoint


def blob_image():
    yy, xx = np.mgrid[0:200, 0:200]
    return Image(np.exp(-((xx - 100.0) ** 2 + (yy - 100.0) ** 2) / (2 * 2.0 ** 2)))


def checkerboard():
    yy, xx = np.mgrid[0:120, 0:220]
    return Image(((xx // 20 + yy // 20) % 2).astype(float))  # 5 x 10 = 50 inner corners


def smooth_random(seed, shape=(96, 96)):
    z = ndimage.gaussian_filter(np.random.default_rng(seed).random(shape), 3)
    return Image((z - z.min()) / (z.max() - z.min()))


def test_grayscale_examples():
    assert np.all(imagekp.to_grayscale(Image(np.ones((4, 4, 3)))).pixels == 1.0)
    g = Image(np.random.default_rng(0).random((5, 5)))
    assert imagekp.to_grayscale(g) is g or np.array_equal(imagekp.to_grayscale(g).pixels, g.pixels)
    red = np.zeros((2, 2, 3))
    red[..., 0] = 1
    assert imagekp.to_grayscale(Image(red)).pixels[0, 0] == pytest.approx(0.299)


def test_constant_image_has_no_keypoints():
    assert imagekp.detect_keypoints(Image(np.full((64, 64), 0.5))) == []


def test_single_blob():
    kps = imagekp.detect_keypoints(blob_image())
    assert len(kps) == 1
    assert math.hypot(kps[0].x - 100, kps[0].y - 100) <= 1.0


def test_max_kp_keeps_global_top():
    img = checkerboard()
    full = imagekp.detect_keypoints(img)
    top = imagekp.detect_keypoints(img, max_kp=10)
    assert len(full) > 10 and len(top) == 10
    want = sorted((k.response for k in full), reverse=True)[:10]
    assert sorted((k.response for k in top), reverse=True) == want


def test_detector_rejects_colour_and_tiny():
    with pytest.raises(ValueError):
        imagekp.detect_keypoints(Image(np.zeros((32, 32, 3))))
    with pytest.raises(ValueError):
        imagekp.detect_keypoints(Image(np.zeros((8, 8))))
    with pytest.raises(ValueError):
        imagekp.detect_keypoints(Image(np.zeros((32, 32))), max_kp=-1)


@settings(max_examples=15)
@given(st.integers(0, 2**31), st.integers(0, 40))
def test_detector_properties(seed, cap):
    img = smooth_random(seed)
    kps = imagekp.detect_keypoints(img, max_kp=cap)
    assert len(kps) <= cap
    for k in kps:
        assert k.inside(img.width, img.height)
        assert k.response >= 0.03 and k.scale > 0
        assert 0 <= k.orientation < 2 * math.pi


def test_pyramid_shapes():
    pyr = imagekp.build_pyramid(smooth_random(1, (64, 80)))
    assert pyr.gaussians[0].shape[1:] == (127, 159)  # upsampled first octave
    assert all(len(d) == pyr.scales + 2 for d in pyr.dogs)
    assert pyr.octave_factor(0) == 0.5


def test_patch_of_constant_image_is_constant():
    pyr = imagekp.build_pyramid(Image(np.full((100, 100), 0.25)))
    p = imagekp.extract_patch(pyr, Keypoint(50, 50, 2.0))
    assert p.shape == (32, 32)
    assert np.allclose(p, 0.25)


def test_opposite_orientations_give_rotated_patches():
    pyr = imagekp.build_pyramid(smooth_random(2))
    a = imagekp.extract_patch(pyr, Keypoint(47.3, 51.8, 3.0, orientation=0.4))
    b = imagekp.extract_patch(pyr, Keypoint(47.3, 51.8, 3.0, orientation=0.4 + math.pi))
    assert np.abs(np.rot90(a, 2) - b).max() < 1e-6


def test_patch_near_border_is_defined():
    pyr = imagekp.build_pyramid(smooth_random(3))
    p = imagekp.extract_patch(pyr, Keypoint(5, 5, 4.0, orientation=1.0))
    assert np.all(np.isfinite(p))
    assert imagekp.extract_patches(pyr, []).shape == (0, 32, 32)
