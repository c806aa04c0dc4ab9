import math

import numpy as np
import pytest

from triprism import (
    Perturbation,
    add_gaussian_noise,
    rotate_and_crop,
    split_windows,
    synth_fbm,
)


class TestSplitWindows:
    def test_512_gives_16_windows_of_128(self):
        img = np.random.default_rng(0).uniform(0, 255, (512, 512))
        wins = split_windows(img, 128)
        assert len(wins) == 16
        assert all(w.shape == (128, 128) for w in wins)

    def test_exact_fit_returns_input(self):
        img = np.random.default_rng(1).uniform(0, 255, (128, 128))
        wins = split_windows(img, 128)
        assert len(wins) == 1
        assert np.array_equal(wins[0], img)

    def test_margin_dropped(self):
        assert len(split_windows(np.zeros((130, 128)), 128)) == 1

    def test_oversized_window_gives_empty_list(self):
        assert split_windows(np.zeros((100, 100)), 128) == []

    def test_count_formula(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            h, w = rng.integers(2, 200, 2)
            win = int(rng.integers(2, 80))
            got = len(split_windows(np.zeros((h, w)), win))
            assert got == (h // win) * (w // win)

    def test_row_major_order(self):
        img = np.arange(16, dtype=float).reshape(4, 4)
        wins = split_windows(img, 2)
        assert wins[0][0, 0] == 0.0 and wins[1][0, 0] == 2.0 and wins[2][0, 0] == 8.0


class TestGaussianNoise:
    def test_zero_ratio_identity(self):
        img = np.random.default_rng(0).uniform(0, 255, (30, 30))
        assert np.array_equal(add_gaussian_noise(img, 0.0, seed=3), img)

    def test_vanishing_sigma_is_identity_within_tolerance(self):
        img = np.random.default_rng(0).uniform(1, 254, (30, 30))
        out = add_gaussian_noise(img, 1.0, noise_sigma=1e-12, seed=3)
        np.testing.assert_allclose(out, img, atol=1e-9)

    def test_exact_pixel_count(self):
        # mid-gray base keeps the noise clear of the clamp, so the
        # changed-pixel count equals the drawn count exactly
        img = np.full((100, 100), 128.0)
        out = add_gaussian_noise(img, 0.03, seed=11)
        assert int(np.sum(out != img)) == 300

    def test_changed_count_never_exceeds_draw(self):
        img = np.random.default_rng(5).uniform(0, 255, (100, 100))
        out = add_gaussian_noise(img, 0.03, seed=11)
        assert int(np.sum(out != img)) <= 300

    def test_clamped_to_range(self):
        img = np.full((50, 50), 250.0)
        out = add_gaussian_noise(img, 1.0, noise_sigma=100.0, seed=0)
        assert out.min() >= 0.0 and out.max() <= 255.0

    def test_bit_identical_reruns(self):
        img = np.random.default_rng(9).uniform(0, 255, (40, 40))
        a = add_gaussian_noise(img, 0.2, seed=21)
        b = add_gaussian_noise(img, 0.2, seed=21)
        assert np.array_equal(a, b)

    def test_ratio_out_of_range(self):
        with pytest.raises(ValueError):
            add_gaussian_noise(np.zeros((4, 4)), 1.5)


class TestRotateAndCrop:
    def test_angle_zero_is_central_crop(self):
        img = np.random.default_rng(0).uniform(0, 255, (128, 128))
        out = rotate_and_crop(img, 0.0)
        assert out.shape == (90, 90)  # floor(128 / sqrt(2))
        lo = (128 - 90) // 2
        assert np.array_equal(out, img[lo : lo + 90, lo : lo + 90])

    def test_180_is_point_reflection(self):
        img = np.random.default_rng(1).uniform(0, 255, (64, 64))
        side = math.floor(64 / math.sqrt(2))
        lo = (64 - side) // 2
        expected = np.rot90(img, 2)[lo : lo + side, lo : lo + side]
        assert np.array_equal(rotate_and_crop(img, 180.0), expected)

    def test_constant_image_any_angle(self):
        img = np.full((64, 64), 113.0)
        for angle in (17.3, 45.0, 90.0, 211.0):
            out = rotate_and_crop(img, angle)
            np.testing.assert_allclose(out, 113.0, atol=1e-9)

    def test_multiples_of_90_exact_on_constant(self):
        img = np.full((32, 32), 7.0)
        for k in range(4):
            assert np.array_equal(rotate_and_crop(img, 90.0 * k), np.full((22, 22), 7.0))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            rotate_and_crop(np.zeros((10, 12)), 30.0)

    def test_bilinear_angles_compose_approximately(self):
        # two 30-degree rotations vs one 60-degree rotation of a smooth
        # field; interpolation blurs, so compare loosely away from edges
        yy, xx = np.mgrid[0:128, 0:128]
        img = 127.5 + 60 * np.sin(xx / 25.0) + 50 * np.cos(yy / 30.0)
        once = rotate_and_crop(img, 60.0)
        twice = rotate_and_crop(rotate_and_crop(img, 30.0), 30.0)
        # the double path crops twice; compare the common central region
        m = twice.shape[0]
        lo = (once.shape[0] - m) // 2
        core = slice(5, m - 5)
        np.testing.assert_allclose(
            once[lo : lo + m, lo : lo + m][core, core], twice[core, core], atol=1.5
        )


class TestSynthFbm:
    def test_deterministic(self):
        a = synth_fbm(0.5, 257, seed=4)
        b = synth_fbm(0.5, 257, seed=4)
        assert np.array_equal(a, b)

    def test_rescaled_to_full_range(self):
        img = synth_fbm(0.3, 65, seed=2)
        assert img.min() == 0.0
        assert img.max() == 255.0

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            synth_fbm(0.0, 64)
        with pytest.raises(ValueError):
            synth_fbm(0.5, 20)  # not >= 32 and not a power of two plus one
        synth_fbm(0.5, 17, seed=0)  # 2^4 + 1 is allowed

    @staticmethod
    def _increment_slope(img, lags=(1, 2, 4, 8, 16, 32)):
        """Independent oracle: OLS slope of log mean-squared increment
        against log lag, sampled along both axes."""
        means = []
        for lag in lags:
            dx = img[:, lag:] - img[:, :-lag]
            dy = img[lag:, :] - img[:-lag, :]
            means.append(np.mean(np.concatenate([dx.ravel() ** 2, dy.ravel() ** 2])))
        return np.polyfit(np.log(lags), np.log(means), 1)[0]

    @pytest.mark.parametrize("hurst", [0.3, 0.7])
    def test_increment_scaling_matches_hurst(self, hurst):
        slopes = [self._increment_slope(synth_fbm(hurst, 257, seed=s)) for s in range(5)]
        assert np.mean(slopes) == pytest.approx(2 * hurst, abs=0.3)

    def test_increment_slope_monotone_in_hurst(self):
        means = []
        for hurst in (0.2, 0.5, 0.8):
            means.append(
                np.mean([self._increment_slope(synth_fbm(hurst, 257, seed=s)) for s in range(5)])
            )
        assert means[0] < means[1] < means[2]


class TestPerturbation:
    def test_noise_dispatch(self):
        img = np.full((20, 20), 90.0)
        spec = Perturbation(kind="gaussian_noise", noise_ratio=0.1, seed=5)
        assert np.array_equal(spec.apply(img), add_gaussian_noise(img, 0.1, seed=5))

    def test_rotation_dispatch(self):
        img = np.random.default_rng(3).uniform(0, 255, (32, 32))
        spec = Perturbation(kind="rotation", angle_degrees=90.0)
        assert np.array_equal(spec.apply(img), rotate_and_crop(img, 90.0))

    def test_invariant_validation(self):
        with pytest.raises(ValueError):
            Perturbation(kind="blur")
        with pytest.raises(ValueError):
            Perturbation(kind="gaussian_noise", noise_ratio=2.0)
        with pytest.raises(ValueError):
            Perturbation(kind="gaussian_noise", noise_sigma=0.0)
        with pytest.raises(ValueError):
            Perturbation(kind="rotation", angle_degrees=360.0)
