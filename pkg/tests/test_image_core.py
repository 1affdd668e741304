"""Image representation, I/O, noise, patch kernel, distances, and metrics."""

import math

import numpy as np
import pytest

from nlmlab import (BorderPolicy, NoiseSpec, add_gaussian_noise, as_gray_image,
                    gaussian_patch_kernel, load_image, mse, patch_distance_sq,
                    psnr, save_image)
from nlmlab.image import domain_mask, gather_patch, reflect_indices


# ---------------------------------------------------------------------------
# PGM / PNG I/O


def test_pgm_decodes_bytes_directly(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
    img = load_image(p)
    assert img.shape == (2, 2)
    assert img.tolist() == [[0.0, 128.0], [255.0, 64.0]]


def test_pgm_header_comments_and_whitespace(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P5 # magic\n# a comment line\n 3\t1 # dims\n255\n" + bytes([9, 8, 7]))
    img = load_image(p)
    assert img.tolist() == [[9.0, 8.0, 7.0]]


def test_pgm_round_trip_identity(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(13, 7)).astype(np.float64)
    path = tmp_path / "rt.pgm"
    save_image(img, path)
    assert np.array_equal(load_image(path), img)


def test_save_rounds_half_away_from_zero_and_clamps(tmp_path):
    img = np.array([[254.6, -3.2], [100.0, 267.0]])
    path = tmp_path / "r.pgm"
    save_image(img, path)
    out = load_image(path)
    assert out.tolist() == [[255.0, 0.0], [100.0, 255.0]]
    # half-away-from-zero, not banker's rounding
    save_image(np.array([[0.5, 1.5], [2.5, 3.5]]), path)
    assert load_image(path).tolist() == [[1.0, 2.0], [3.0, 4.0]]
    # in-memory input untouched
    assert img[0, 1] == -3.2


def test_pgm_errors(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError, match="P5"):
        load_image(p)
    p.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(ValueError, match="maxval"):
        load_image(p)
    p.write_bytes(b"P5\n2 2\n255\n\x00")
    with pytest.raises(ValueError, match="truncated"):
        load_image(p)
    with pytest.raises(OSError):
        load_image(tmp_path / "missing.pgm")
    p.write_bytes(b"GIF89a...")
    with pytest.raises(ValueError, match="unsupported image format"):
        load_image(p)


def test_png_grayscale_and_rgb_luma(tmp_path):
    from PIL import Image

    gray = np.array([[0, 100], [200, 255]], dtype=np.uint8)
    gp = tmp_path / "g.png"
    Image.fromarray(gray, mode="L").save(gp)
    assert np.array_equal(load_image(gp), gray.astype(np.float64))

    rgb = np.zeros((1, 3, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 255, 255)
    rgb[0, 1] = (255, 0, 0)
    rgb[0, 2] = (0, 255, 0)
    cp = tmp_path / "c.png"
    Image.fromarray(rgb, mode="RGB").save(cp)
    img = load_image(cp)
    assert img[0, 0] == pytest.approx(255.0, abs=1e-9)
    assert img[0, 1] == pytest.approx(76.245, abs=1e-9)
    assert img[0, 2] == pytest.approx(0.587 * 255.0, abs=1e-9)


def test_png_16bit_rejected(tmp_path):
    from PIL import Image

    arr = np.full((2, 2), 1000, dtype=np.uint16)
    p = tmp_path / "deep.png"
    Image.fromarray(arr).save(p)
    with pytest.raises(ValueError, match="mode"):
        load_image(p)


def test_as_gray_image_validation():
    with pytest.raises(ValueError, match="2D"):
        as_gray_image(np.zeros((2, 2, 3)))
    with pytest.raises(ValueError, match="finite"):
        as_gray_image(np.array([[1.0, np.nan]]))


# ---------------------------------------------------------------------------
# Noise synthesis


def test_noise_sigma_zero_is_exact_identity():
    img = np.arange(12.0).reshape(3, 4)
    noisy, noise = add_gaussian_noise(img, NoiseSpec(sigma=0.0, seed=99))
    assert np.array_equal(noise, np.zeros_like(img))
    assert np.array_equal(noisy, img)


def test_noise_is_deterministic_per_seed():
    img = np.zeros((16, 16))
    n1 = add_gaussian_noise(img, NoiseSpec(20.0, 1234))[1]
    n2 = add_gaussian_noise(img, NoiseSpec(20.0, 1234))[1]
    n3 = add_gaussian_noise(img, NoiseSpec(20.0, 1235))[1]
    assert np.array_equal(n1, n2)
    assert not np.array_equal(n1, n3)


def test_noise_additivity_and_no_clamping():
    img = np.full((8, 8), 250.0)
    noisy, noise = add_gaussian_noise(img, NoiseSpec(40.0, 7))
    assert np.array_equal(noisy, img + noise)
    assert noisy.max() > 255.0  # unclamped by construction at this sigma


def test_noise_sample_variance_concentration():
    # chi-square concentration: sample variance of 256x256 draws at
    # sigma=20 stays within 3 relative standard errors of 400.
    img = np.zeros((256, 256))
    _, noise = add_gaussian_noise(img, NoiseSpec(20.0, 5))
    var = float(np.mean(noise**2))
    band = 3.0 * math.sqrt(2.0 / 65536.0)
    assert 400.0 * (1.0 - band) < var < 400.0 * (1.0 + band)


def test_noise_spec_rejects_negative_sigma():
    with pytest.raises(ValueError):
        NoiseSpec(sigma=-1.0)


# ---------------------------------------------------------------------------
# Patch kernel


def test_kernel_seven_by_seven_has_49_weights():
    k = gaussian_patch_kernel(radius=3, a=2.0)
    assert k.weights.shape == (7, 7)
    assert k.flat_weights().size == 49


def test_kernel_uniform_limit():
    k = gaussian_patch_kernel(radius=3, a=math.inf)
    assert np.allclose(k.weights, 1.0 / 49.0, rtol=0, atol=1e-15)


def test_kernel_center_weight_radius1_a1():
    # hand normalization of the 9 terms: 1 / (1 + 4 e^{-1/2} + 4 e^{-1})
    k = gaussian_patch_kernel(radius=1, a=1.0)
    expected = 1.0 / (1.0 + 4.0 * math.exp(-0.5) + 4.0 * math.exp(-1.0))
    assert k.center_weight == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("radius,a", [(1, 0.5), (2, 1.0), (3, 2.0), (3, math.inf), (4, 7.5)])
def test_kernel_invariants(radius, a):
    k = gaussian_patch_kernel(radius, a)
    w = k.weights
    assert abs(w.sum() - 1.0) < 1e-12
    assert (w >= 0).all()
    # symmetric under 90-degree rotation and reflection
    assert np.allclose(w, np.rot90(w), atol=1e-15)
    assert np.allclose(w, np.flipud(w), atol=1e-15)
    assert np.allclose(w, np.fliplr(w), atol=1e-15)
    # non-increasing with distance from center
    ii, jj = np.meshgrid(*([np.arange(-radius, radius + 1)] * 2), indexing="ij")
    r2 = (ii**2 + jj**2).ravel()
    order = np.argsort(r2, kind="stable")
    vals = w.ravel()[order]
    assert (np.diff(vals) <= 1e-15).all()


def test_kernel_center_excluded_renormalizes():
    k = gaussian_patch_kernel(3, 2.0)
    w = k.flat_weights(exclude_center=True)
    assert w[49 // 2] == 0.0
    assert abs(w.sum() - 1.0) < 1e-12
    assert np.count_nonzero(w) == 48


def test_kernel_rejects_bad_parameters():
    with pytest.raises(ValueError):
        gaussian_patch_kernel(0, 2.0)
    with pytest.raises(ValueError):
        gaussian_patch_kernel(3, 0.0)
    with pytest.raises(ValueError):
        gaussian_patch_kernel(3, -1.5)


# ---------------------------------------------------------------------------
# Patch distances


def test_reflect_indices_no_edge_repeat():
    idx = np.array([-2, -1, 0, 3, 4, 5])
    assert reflect_indices(idx, 4).tolist() == [2, 1, 0, 3, 2, 1]
    assert reflect_indices(np.array([0, 1, 5]), 1).tolist() == [0, 0, 0]


def test_patch_distance_zero_at_same_pixel():
    rng = np.random.default_rng(3)
    img = rng.uniform(0, 255, (10, 10))
    k = gaussian_patch_kernel(3, 2.0)
    for excl in (False, True):
        assert patch_distance_sq(img, (4, 5), (4, 5), k, exclude_center=excl) == 0.0


def test_patch_distance_constant_offset_equals_c_squared():
    rng = np.random.default_rng(4)
    base = rng.uniform(0, 200, (20, 20))
    img = base.copy()
    img[:, 10:] = base[:, :10] + 13.0  # right half = shifted-left half + c
    k = gaussian_patch_kernel(2, 1.5)
    d = patch_distance_sq(img, (9, 4), (9, 14), k)
    assert d == pytest.approx(13.0 * 13.0, rel=1e-12)
    d0 = patch_distance_sq(img, (9, 4), (9, 14), k, exclude_center=True)
    assert d0 == pytest.approx(13.0 * 13.0, rel=1e-12)


def test_patch_distance_center_only_difference():
    rng = np.random.default_rng(5)
    img = rng.uniform(0, 255, (20, 20))
    x, y = (6, 6), (6, 13)
    # make the two patches identical, then perturb only the centers
    img[y[0] - 3 : y[0] + 4, y[1] - 3 : y[1] + 4] = img[x[0] - 3 : x[0] + 4, x[1] - 3 : x[1] + 4]
    img[y] = img[x] + 9.0
    k = gaussian_patch_kernel(3, 2.0)
    assert patch_distance_sq(img, x, y, k, exclude_center=True) == pytest.approx(0.0, abs=1e-12)
    include = patch_distance_sq(img, x, y, k, exclude_center=False)
    assert include == pytest.approx(k.center_weight * 81.0, rel=1e-12)


def test_patch_distance_symmetry_shift_scale():
    rng = np.random.default_rng(6)
    img = rng.uniform(0, 255, (15, 17))
    k = gaussian_patch_kernel(3, 2.0)
    pairs = [((3, 4), (11, 9)), ((0, 0), (14, 16)), ((7, 7), (7, 8))]
    for x, y in pairs:
        for excl in (False, True):
            d1 = patch_distance_sq(img, x, y, k, exclude_center=excl)
            d2 = patch_distance_sq(img, y, x, k, exclude_center=excl)
            assert d1 == pytest.approx(d2, rel=1e-12)
            dshift = patch_distance_sq(img + 42.0, x, y, k, exclude_center=excl)
            assert dshift == pytest.approx(d1, rel=1e-9, abs=1e-9)
            dscale = patch_distance_sq(img * 3.0, x, y, k, exclude_center=excl)
            assert dscale == pytest.approx(9.0 * d1, rel=1e-12)


def test_patch_distance_noise_expectation_disjoint():
    # disjoint patches on pure noise: mean distance over seeds ~ 2 sigma^2
    sigma = 20.0
    k = gaussian_patch_kernel(3, 2.0)
    vals = []
    for seed in range(300):
        _, noise = add_gaussian_noise(np.zeros((16, 30)), NoiseSpec(sigma, seed))
        vals.append(patch_distance_sq(noise, (8, 7), (8, 22), k))
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    assert abs(mean - 2.0 * sigma * sigma) < 3.0 * se


def test_patch_distance_crop_domain_errors():
    img = np.zeros((10, 10))
    k = gaussian_patch_kernel(3, 2.0)
    with pytest.raises(ValueError, match="domain"):
        patch_distance_sq(img, (1, 5), (5, 5), k, border=BorderPolicy.CROP)
    # mirror accepts edge pixels
    assert patch_distance_sq(img, (0, 0), (5, 5), k) == 0.0


def test_gather_patch_mirror_matches_manual_reflection():
    img = np.arange(12.0).reshape(3, 4)
    got = gather_patch(img, (0, 0), 1, BorderPolicy.MIRROR).reshape(3, 3)
    expected = np.array([[5.0, 4.0, 5.0], [1.0, 0.0, 1.0], [5.0, 4.0, 5.0]])
    assert np.array_equal(got, expected)


def test_domain_mask_shapes():
    assert domain_mask((5, 5), 2, BorderPolicy.MIRROR).all()
    m = domain_mask((5, 5), 2, BorderPolicy.CROP)
    assert m.sum() == 1 and m[2, 2]
    assert not domain_mask((4, 4), 2, BorderPolicy.CROP).any()


# ---------------------------------------------------------------------------
# Metrics


def test_mse_psnr_basics():
    a = np.zeros((4, 4))
    assert mse(a, a) == 0.0
    assert psnr(a, a) == math.inf
    b = a + 16.0
    assert mse(a, b) == 256.0
    assert psnr(a, b) == pytest.approx(24.04840395556061, rel=1e-12)
    assert mse(a, b) == mse(b, a)
    with pytest.raises(ValueError, match="mismatch"):
        mse(a, np.zeros((4, 5)))
