import math

import numpy as np
import pytest
import scipy.linalg
from oracles import oracle_hist_cc, oracle_mae, oracle_mwu_exact_p, oracle_ssim

from voxsynth.errors import DegenerateError, DomainError, ShapeError
from voxsynth.metrics import (
    aggregate_per_slice,
    dice,
    downsampled_pixel_features,
    evaluate_volume_pair,
    frechet_gaussian,
    frechet_gaussian_info,
    fsim,
    hist_cc,
    mae,
    mann_whitney_u,
    pearson_cc,
    psnr,
    ssim,
)
from voxsynth.volumes import Modality, scalar_volume


# -- ssim / psnr / mae / histcc / dice ---------------------------------------


class TestSSIM:
    def test_self_similarity(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 255, (16, 16))
        assert ssim(x, x, 255.0) == pytest.approx(1.0, abs=1e-12)

    def test_constant_pair_luminance_only(self):
        a = np.full((12, 12), 100.0)
        b = np.full((12, 12), 140.0)
        c1 = (0.01 * 255.0) ** 2
        expect = (2 * 100 * 140 + c1) / (100**2 + 140**2 + c1)
        assert ssim(a, b, 255.0) == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("hw", [8, 16, 32])
    def test_matches_windowed_oracle(self, hw):
        rng = np.random.default_rng(hw)
        a = rng.uniform(0, 255, (hw, hw))
        b = np.clip(a + rng.normal(0, 20, (hw, hw)), 0, 255)
        assert ssim(a, b, 255.0) == pytest.approx(oracle_ssim(a, b, 255.0), abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        a, b = rng.uniform(0, 255, (2, 16, 16))
        assert ssim(a, b, 255.0) == pytest.approx(ssim(b, a, 255.0), abs=1e-13)

    def test_range(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            a = rng.uniform(0, 255, (8, 8))
            b = rng.uniform(0, 255, (8, 8))
            v = ssim(a, b, 255.0)
            assert -1.0 <= v <= 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ssim(np.zeros((8, 8)), np.zeros((8, 9)), 255.0)

    def test_bad_dynamic_range(self):
        with pytest.raises(DomainError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)), 0.0)


class TestPSNR:
    def test_identical_reports_inf(self):
        x = np.ones((8, 8))
        assert psnr(x, x, 255.0) == math.inf

    def test_mse_equals_peak_squared_gives_zero(self):
        a = np.zeros((4, 4))
        b = np.full((4, 4), 255.0)
        assert psnr(a, b, 255.0) == pytest.approx(0.0, abs=1e-12)

    def test_known_mse(self):
        a = np.zeros((2, 2))
        b = np.full((2, 2), 2.0)  # mse 4
        assert psnr(a, b, 255.0) == pytest.approx(10 * math.log10(255**2 / 4), rel=1e-12)

    def test_matches_scalar_formula_random(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0, 255, (16, 16))
        b = rng.uniform(0, 255, (16, 16))
        mse = float(np.mean((a - b) ** 2))
        assert psnr(a, b, 255.0) == pytest.approx(10 * math.log10(255**2 / mse), rel=1e-12)


class TestMAE:
    def test_identical(self):
        x = np.ones((4, 4))
        assert mae(x, x) == 0.0

    def test_constant_offset(self):
        x = np.zeros((4, 4))
        assert mae(x, x + 5.0) == 5.0

    def test_matches_sum_oracle(self):
        rng = np.random.default_rng(2)
        a, b = rng.uniform(-100, 100, (2, 9, 7))
        assert mae(a, b) == pytest.approx(oracle_mae(a, b), rel=1e-12)


class TestHistCC:
    def test_identical_images(self):
        rng = np.random.default_rng(3)
        a = rng.uniform(0, 255, (16, 16))
        assert hist_cc(a, a, bins=16, value_range=(0, 255)) == pytest.approx(1.0)

    def test_reversed_counts_give_minus_one(self):
        # counts (1, 2, 3) vs (3, 2, 1) -> Pearson -1
        assert pearson_cc([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_matches_pearson_oracle(self):
        rng = np.random.default_rng(4)
        a = rng.uniform(0, 100, (12, 12))
        b = rng.uniform(0, 100, (12, 12))
        got = hist_cc(a, b, bins=10, value_range=(0.0, 100.0))
        assert got == pytest.approx(oracle_hist_cc(a, b, 10, (0.0, 100.0)), rel=1e-9)

    def test_zero_variance_degenerate(self):
        # every bin equally filled -> zero-variance count vector
        a = np.repeat([0.5, 1.5, 2.5, 3.5], 16).reshape(8, 8)
        with pytest.raises(DegenerateError):
            hist_cc(a, a, bins=4, value_range=(0, 4))

    def test_bins_bound(self):
        with pytest.raises(DomainError):
            hist_cc(np.zeros((4, 4)), np.zeros((4, 4)), bins=1)


class TestDice:
    def test_identical_nonempty(self):
        m = np.zeros((8, 8), bool)
        m[2:5, 2:5] = True
        assert dice(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((8, 8), bool)
        b = np.zeros((8, 8), bool)
        a[:2], b[6:] = True, True
        assert dice(a, b) == 0.0

    def test_counted_fixture(self):
        # |a|=100, |b|=60, overlap 40 -> 2*40/160 = 0.5
        a = np.zeros((20, 20), bool)
        b = np.zeros((20, 20), bool)
        a.ravel()[:100] = True
        b.ravel()[60:120] = True
        assert int(a.sum()) == 100 and int(b.sum()) == 60
        assert int((a & b).sum()) == 40
        assert dice(a, b) == 0.5

    def test_both_empty_convention(self):
        assert dice(np.zeros((4, 4), bool), np.zeros((4, 4), bool)) == 1.0

    def test_monotone_in_overlap(self):
        # fixed |a| + |b|, growing intersection
        prev = -1.0
        for overlap in range(0, 11):
            a = np.zeros(30, bool)
            b = np.zeros(30, bool)
            a[:10] = True
            b[10 - overlap : 20 - overlap] = True
            d = dice(a, b)
            assert d >= prev
            prev = d


class TestFSIM:
    def image(self, seed=0, hw=48):
        rng = np.random.default_rng(seed)
        yy, xx = np.mgrid[:hw, :hw]
        img = (
            120
            + 60 * np.sin(xx / 5.0)
            + 40 * ((yy - hw / 2) ** 2 + (xx - hw / 2) ** 2 < (hw / 3) ** 2)
        )
        return img + rng.normal(0, 2, (hw, hw))

    def test_self_similarity(self):
        img = self.image()
        assert fsim(img, img) == pytest.approx(1.0, abs=1e-12)

    def test_affine_invariance(self):
        a, b = self.image(1), self.image(2)
        base = fsim(a, b)
        assert fsim(2.5 * a + 30.0, 2.5 * b + 30.0) == pytest.approx(base, abs=1e-12)

    def test_monotone_noise_degradation(self):
        a = self.image(3)
        rng = np.random.default_rng(7)
        noise = rng.normal(0, 1, a.shape)
        values = [fsim(a, a + amp * noise) for amp in (5.0, 20.0, 60.0)]
        assert values[0] > values[1] > values[2]

    def test_symmetry(self):
        a, b = self.image(4), self.image(5)
        assert fsim(a, b) == pytest.approx(fsim(b, a), abs=1e-12)

    def test_range(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            a = rng.uniform(0, 255, (32, 32))
            b = rng.uniform(0, 255, (32, 32))
            assert 0.0 <= fsim(a, b) <= 1.0

    def test_too_small_rejected(self):
        with pytest.raises(DomainError):
            fsim(np.zeros((16, 16)), np.zeros((16, 16)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            fsim(np.zeros((32, 32)), np.zeros((32, 33)))


class TestFrechet:
    def test_identical_sets_zero(self):
        rng = np.random.default_rng(0)
        f = rng.normal(0, 1, (200, 4))
        assert frechet_gaussian(f, f) == pytest.approx(0.0, abs=1e-8)

    def test_one_dimensional_closed_form(self):
        # N(0,1) vs N(m,1): d^2 -> m^2
        rng = np.random.default_rng(1)
        m = 1.0
        a = rng.normal(0, 1, (10_000, 1))
        b = rng.normal(m, 1, (10_000, 1))
        assert frechet_gaussian(a, b) == pytest.approx(m**2, abs=0.05)

    def test_matches_scipy_sqrtm_oracle(self):
        rng = np.random.default_rng(2)
        a = rng.normal(0, 1, (500, 2)) @ np.array([[1.0, 0.3], [0.0, 0.7]]) + [0.5, -0.2]
        b = rng.normal(0, 1, (500, 2)) @ np.array([[0.8, -0.1], [0.2, 1.1]]) + [-0.1, 0.4]
        mu_a, sig_a = a.mean(0), np.cov(a, rowvar=False)
        mu_b, sig_b = b.mean(0), np.cov(b, rowvar=False)
        covmean = scipy.linalg.sqrtm(sig_a @ sig_b)
        expect = float(
            np.sum((mu_a - mu_b) ** 2)
            + np.trace(sig_a + sig_b - 2.0 * np.real(covmean))
        )
        assert frechet_gaussian(a, b) == pytest.approx(expect, abs=1e-8)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a = rng.normal(0, 1, (100, 3))
        b = rng.normal(0.5, 1.2, (100, 3))
        assert frechet_gaussian(a, b) == pytest.approx(frechet_gaussian(b, a), abs=1e-9)

    def test_singular_covariance_regularized(self):
        a = np.zeros((50, 2))  # zero variance
        rng = np.random.default_rng(4)
        b = rng.normal(0, 1, (50, 2))
        info = frechet_gaussian_info(a, b)
        assert info.regularized
        assert info.value >= 0.0

    def test_needs_more_samples_than_dims(self):
        with pytest.raises(DomainError):
            frechet_gaussian(np.zeros((3, 4)), np.zeros((10, 4)))

    def test_pixel_feature_extractor(self):
        slices = [np.arange(64, dtype=float).reshape(8, 8) for _ in range(5)]
        feats = downsampled_pixel_features(slices, grid=(2, 2))
        assert feats.shape == (5, 4)
        assert feats[0, 0] == pytest.approx(np.arange(64).reshape(8, 8)[:4, :4].mean())


class TestMannWhitney:
    def test_identical_multisets(self):
        a = [1.0, 2.0, 3.0, 4.0]
        u, p = mann_whitney_u(a, list(a))
        assert u == len(a) ** 2 / 2
        assert p == pytest.approx(1.0)

    def test_fully_separated(self):
        u, p = mann_whitney_u([1, 2, 3], [4, 5, 6])
        assert u == 0.0
        assert p == pytest.approx(0.1)  # 2 of 20 arrangements

    def test_exact_matches_enumeration_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            a = rng.integers(0, 12, size=int(rng.integers(2, 6))).astype(float)
            b = rng.integers(0, 12, size=int(rng.integers(2, 6))).astype(float)
            u, p = mann_whitney_u(a, b)
            u_ref, p_ref = oracle_mwu_exact_p(a, b)
            assert u == pytest.approx(u_ref)
            assert p == pytest.approx(p_ref, abs=1e-12)

    def test_five_vs_five_enumeration(self):
        rng = np.random.default_rng(1)
        a = rng.normal(0, 1, 5)
        b = rng.normal(1, 1, 5)
        u, p = mann_whitney_u(a, b)
        u_ref, p_ref = oracle_mwu_exact_p(a, b)
        assert (u, p) == (pytest.approx(u_ref), pytest.approx(p_ref))

    def test_normal_approximation_branch(self):
        rng = np.random.default_rng(2)
        a = rng.normal(0, 1, 40)
        b = rng.normal(0.8, 1, 40)
        u, p = mann_whitney_u(a, b)
        assert 0.0 <= p <= 1.0
        assert p < 0.05  # clearly separated samples

    def test_normal_approx_close_to_exact_on_same_data(self):
        from scipy.stats import rankdata

        from voxsynth.metrics.mannwhitney import _exact_two_sided_p, _normal_two_sided_p

        rng = np.random.default_rng(3)
        a = rng.normal(0, 1, 8)
        b = rng.normal(0.3, 1, 8)
        ranks = rankdata(np.concatenate([a, b]))
        u = float(ranks[:8].sum()) - 8 * 9 / 2.0
        p_exact = _exact_two_sided_p(ranks, 8, 8, u)
        p_norm = _normal_two_sided_p(ranks, 8, 8, u)
        assert abs(p_exact - p_norm) < 0.05

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            mann_whitney_u([], [1.0])


class TestSymmetryAndRanges:
    def test_random_trials(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            a = rng.uniform(0, 255, (8, 8))
            b = rng.uniform(0, 255, (8, 8))
            assert ssim(a, b, 255.0) == pytest.approx(ssim(b, a, 255.0), abs=1e-12)
            assert mae(a, b) == mae(b, a)
            assert 0.0 <= mae(a, b)
            ha = hist_cc(a, b, bins=8, value_range=(0, 255))
            hb = hist_cc(b, a, bins=8, value_range=(0, 255))
            assert ha == pytest.approx(hb, abs=1e-12)
            assert -1.0 <= ha <= 1.0
            ma = rng.random((8, 8)) > 0.5
            mb = rng.random((8, 8)) > 0.5
            assert dice(ma, mb) == dice(mb, ma)
            assert 0.0 <= dice(ma, mb) <= 1.0


class TestReport:
    def volumes_pair(self):
        rng = np.random.default_rng(0)
        ref = rng.uniform(-500, 500, (4, 16, 16))
        pred = ref + rng.normal(0, 30, ref.shape)
        mk = lambda d: scalar_volume(d, (1, 1, 5), Modality.CT_HU, (-1024, 3000))
        return mk(pred), mk(ref)

    def test_aggregate_recomputable_bit_for_bit(self):
        pred, ref = self.volumes_pair()
        report = evaluate_volume_pair(pred, ref)
        assert report.recompute_aggregate() == report.aggregate

    def test_per_slice_rows_complete(self):
        pred, ref = self.volumes_pair()
        report = evaluate_volume_pair(pred, ref)
        assert len(report.per_slice) == 4 * 4  # 4 slices x 4 metrics
        names = {m for _, m, _ in report.per_slice}
        assert names == {"ssim", "mae", "psnr", "hist_cc"}

    def test_psnr_inf_excluded_from_aggregate(self):
        pred, ref = self.volumes_pair()
        report = evaluate_volume_pair(ref, ref)  # identical -> psnr inf everywhere
        assert "psnr" not in report.aggregate
        assert report.metadata["infinite_counts"]["psnr"] == 4
        agg, infs = aggregate_per_slice(report.per_slice)
        assert infs["psnr"] == 4

    def test_csv_export(self, tmp_path):
        from voxsynth.metrics import report_to_csv

        pred, ref = self.volumes_pair()
        report = evaluate_volume_pair(pred, ref)
        out = tmp_path / "r.csv"
        report_to_csv(report, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "scope,slice,metric,value"
        assert len(lines) == 1 + 16 + 2 * len(report.aggregate)

    def test_dice_grid(self, tmp_path):
        from voxsynth.metrics import dice_grid, dice_grid_to_csv

        rng = np.random.default_rng(1)
        pred = {f"s{i}": rng.integers(0, 3, (1, 8, 8)) for i in range(3)}
        refs = {k: v.copy() for k, v in pred.items()}
        grid, subjects = dice_grid(pred, refs, [1, 2])
        assert np.allclose(grid, 1.0)
        assert subjects == ["s0", "s1", "s2"]
        dice_grid_to_csv(grid, subjects, [1, 2], tmp_path / "g.csv")
        assert (tmp_path / "g.csv").read_text().startswith("subject,class_1,class_2")
