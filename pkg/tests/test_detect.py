import numpy as np
import pytest
from scipy import stats

from fdl.data import gen_power_law_gaussian
from fdl.detect import (
    DetectionReport,
    PowerLawFit,
    _cv_accuracy_batch,
    _stratified_folds,
    classify,
    export_detection_csv,
    export_detection_summary_csv,
    featurize,
    fit_power_law,
    logistic_fit,
    permutation_test,
    run_detection,
)
from fdl.errors import DegenerateDataError
from fdl.spectral import band_mask, frequency_order


def high_band(shape, fraction):
    return band_mask(frequency_order(shape), "high", fraction)


class TestPowerLawFit:
    def test_exact_power_law_recovered(self):
        d, tau = 64, 0.25
        band = high_band((8, 8), tau)
        f = np.arange(d) / d
        m = np.zeros(d)
        m[1:] = 2.0 * (f[1:] / tau) ** (-1.0)
        fit = fit_power_law(m, band=band, tau=tau)
        assert abs(fit.a - 2.0) <= 1e-10
        assert abs(fit.b + 1.0) <= 1e-10
        assert fit.tau == tau

    def test_flat_magnitudes(self):
        fit = fit_power_law(np.full(64, 3.5), band=high_band((8, 8), 0.25), tau=0.25)
        assert abs(fit.a - 3.5) <= 1e-10
        assert abs(fit.b) <= 1e-10

    def test_scale_equivariance(self):
        rng = np.random.default_rng(0)
        m = np.exp(rng.standard_normal(64))
        band = high_band((8, 8), 0.5)
        base = fit_power_law(m, band=band, tau=0.5)
        scaled = fit_power_law(10.0 * m, band=band, tau=0.5)
        assert abs(scaled.a / base.a - 10.0) <= 1e-12
        assert abs(scaled.b - base.b) <= 1e-12

    def test_all_zero_band(self):
        with pytest.raises(DegenerateDataError):
            fit_power_law(np.zeros(64), band=high_band((8, 8), 0.25), tau=0.25)

    def test_too_few_bins(self):
        with pytest.raises(ValueError, match="at least 3"):
            fit_power_law(np.ones(3))

    def test_zero_bins_floored_not_fatal(self):
        # a few zeros among positives get the 1e-12 floor
        m = np.ones(64)
        m[60] = 0.0
        fit = fit_power_law(m, band=high_band((8, 8), 0.25), tau=0.25)
        assert np.isfinite(fit.b)

    def test_fit_validation(self):
        with pytest.raises(ValueError):
            PowerLawFit(a=0.0, b=-1.0, tau=0.5)
        with pytest.raises(ValueError):
            PowerLawFit(a=1.0, b=-1.0, tau=0.0)

    def test_slope_ci_coverage(self):
        # multiplicative lognormal noise (sigma = 0.1): the classical OLS
        # 95% CI for the slope should cover the truth ~95% of 1000 trials
        d, tau = 64, 0.5
        band = high_band((8, 8), tau)
        sel = np.arange(d)[d - band.count :]
        sel = sel[sel > 0]
        x = np.log(sel / (d * tau))
        k = sel.size
        true_b = -1.5
        clean = 2.0 * (sel / d / tau) ** true_b
        tq = stats.t.ppf(0.975, k - 2)
        rng = np.random.default_rng(23)
        cover = 0
        for _ in range(1000):
            m = np.zeros(d)
            m[sel] = clean * np.exp(0.1 * rng.standard_normal(k))
            fit = fit_power_law(m, band=band, tau=tau)
            resid = np.log(m[sel]) - (np.log(fit.a) + fit.b * x)
            se = np.sqrt(resid @ resid / (k - 2) / np.sum((x - x.mean()) ** 2))
            cover += abs(fit.b - true_b) <= tq * se
        assert cover >= 930


class TestFeaturize:
    def test_row_count_and_duplication(self):
        ds, _ = gen_power_law_gaussian(12, (8, 8), amplitude=2.0, exponent=2.0, seed=1)
        feats = featurize(ds.items, 0.25)
        assert feats.shape == (12, 2)
        doubled = featurize(np.concatenate([ds.items, ds.items]), 0.25)
        assert np.array_equal(doubled[:12], doubled[12:])

    def test_standardized_columns(self):
        ds, _ = gen_power_law_gaussian(40, (8, 8), amplitude=2.0, exponent=2.0, seed=2)
        feats = featurize(ds.items, 0.25)
        assert np.max(np.abs(feats.mean(axis=0))) <= 1e-12
        assert np.max(np.abs(feats.std(axis=0) - 1.0)) <= 1e-12

    def test_exponent_clusters_separate(self):
        # variance exponents 2 vs 4 give magnitude slopes about 1 apart
        d1, _ = gen_power_law_gaussian(60, (32, 32), amplitude=4.0, exponent=2.0, seed=3)
        d2, _ = gen_power_law_gaussian(60, (32, 32), amplitude=4.0, exponent=4.0, seed=4)
        f1 = featurize(d1.items, 0.25, standardize=False)
        f2 = featurize(d2.items, 0.25, standardize=False)
        gap = f1[:, 1].mean() - f2[:, 1].mean()
        assert 0.8 <= gap <= 1.6

    def test_constant_feature_columns_guarded(self):
        # identical items give zero-spread feature columns; standardization
        # must not divide by zero
        item = np.random.default_rng(6).standard_normal((8, 8))
        feats = featurize(np.broadcast_to(item, (5, 8, 8)), 0.25)
        assert np.all(np.isfinite(feats))
        assert np.max(np.abs(feats)) <= 1e-12

    def test_all_zero_band_items_rejected(self):
        with pytest.raises(DegenerateDataError):
            featurize(np.ones((5, 8, 8)), 0.25)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            featurize(np.empty((0, 8, 8)), 0.25)


class TestLogistic:
    def test_separable_training_accuracy(self):
        rng = np.random.default_rng(5)
        f1 = rng.standard_normal((30, 2)) + 4.0
        f2 = rng.standard_normal((30, 2)) - 4.0
        feats = np.vstack([f1, f2])
        labels = np.repeat([1.0, 0.0], 30)
        model = logistic_fit(feats, labels)
        pred = (classify(model, feats) > 0.5).astype(float)
        assert np.array_equal(pred, labels)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            logistic_fit(np.zeros((4, 2)), np.zeros(4))

    def test_bad_labels_rejected(self):
        with pytest.raises(ValueError, match="0/1"):
            logistic_fit(np.zeros((3, 2)), np.array([0.0, 1.0, 2.0]))

    def test_count_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            logistic_fit(np.zeros((3, 2)), np.array([0.0, 1.0]))

    def test_constant_features_tie_break(self):
        # balanced labels on all-zero features: weights stay at zero and
        # every point predicts class 0
        feats = np.zeros((20, 2))
        labels = np.repeat([0.0, 1.0], 10)
        model = logistic_fit(feats, labels)
        assert np.max(np.abs(model.weights)) <= 1e-12
        acc = np.mean((classify(model, feats) > 0.5) == labels)
        assert acc == 0.5

    def test_null_cv_accuracy_band(self):
        # no class signal: held-out accuracy concentrates near 1/2
        hits = 0
        for s in range(100):
            rng = np.random.default_rng(3000 + s)
            feats = rng.standard_normal((200, 2))
            labels = rng.permutation(np.repeat([0.0, 1.0], 100))
            folds = _stratified_folds(labels)
            acc = _cv_accuracy_batch(feats, labels[None, :], folds)[0]
            hits += 0.4 <= acc <= 0.6
        assert hits >= 95


class TestPermutationTest:
    def separable_case(self):
        rng = np.random.default_rng(5)
        f1 = rng.standard_normal((20, 2)) + 4.0
        f2 = rng.standard_normal((20, 2)) - 4.0
        return np.vstack([f1, f2]), np.repeat([0.0, 1.0], 20)

    def test_needs_100_permutations(self):
        feats, labels = self.separable_case()
        with pytest.raises(ValueError, match="100"):
            permutation_test(feats, labels, b=50)

    def test_separable_minimum_p(self):
        feats, labels = self.separable_case()
        p, obs = permutation_test(feats, labels, b=150, rng=np.random.default_rng(6))
        assert obs == 1.0
        assert p == 1.0 / 151.0

    def test_null_split_insignificant(self):
        rng = np.random.default_rng(28)
        feats = rng.standard_normal((40, 2))
        p, obs = permutation_test(
            feats, np.repeat([0.0, 1.0], 20), b=150, rng=np.random.default_rng(9)
        )
        assert p > 0.1
        assert 0.3 <= obs <= 0.7

    def test_duplication_preserves_statistic(self):
        rng = np.random.default_rng(10)
        feats = rng.standard_normal((50, 2))
        feats[25:] += 0.8
        labels = np.repeat([0.0, 1.0], 25)
        _, obs1 = permutation_test(feats, labels, b=100, rng=np.random.default_rng(1))
        _, obs2 = permutation_test(
            np.repeat(feats, 2, axis=0), np.repeat(labels, 2), b=100, rng=np.random.default_rng(1)
        )
        assert abs(obs1 - obs2) <= 1e-12

    def test_label_swap_symmetry(self):
        rng = np.random.default_rng(11)
        feats = rng.standard_normal((40, 2))
        feats[20:] += 1.0
        labels = np.repeat([0.0, 1.0], 20)
        p1, obs1 = permutation_test(feats, labels, b=120, rng=np.random.default_rng(2))
        p2, obs2 = permutation_test(feats, 1.0 - labels, b=120, rng=np.random.default_rng(2))
        assert p1 == p2
        assert obs1 == obs2

    def test_p_range(self):
        feats, labels = self.separable_case()
        p, _ = permutation_test(feats, labels, b=100, rng=np.random.default_rng(3))
        assert 1.0 / 101.0 <= p <= 1.0

    def test_degenerate_folds(self):
        feats = np.zeros((4, 2))
        with pytest.raises(ValueError, match="degenerate"):
            permutation_test(feats, np.array([0.0, 0.0, 0.0, 1.0]), b=100)


class TestRunDetection:
    def test_insufficient_data(self):
        a = np.zeros((10, 4, 4))
        with pytest.raises(ValueError, match="at least"):
            run_detection(a, a, splits=100)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="share"):
            run_detection(np.zeros((10, 4, 4)), np.zeros((10, 8, 8)), splits=4)

    def test_separable_end_to_end(self, tmp_path):
        r1, _ = gen_power_law_gaussian(48, (16, 16), amplitude=4.0, exponent=2.0, seed=70)
        r2, _ = gen_power_law_gaussian(48, (16, 16), amplitude=4.0, exponent=4.0, seed=71)
        reports = run_detection(r1, r2, band_fractions=(0.25,), splits=4, b=100, seed=11)
        assert len(reports) == 1
        r = reports[0]
        assert isinstance(r, DetectionReport)
        assert r.band == 0.25
        assert r.p_values.shape == (4,) and r.accuracies.shape == (4,)
        assert 0.0 <= r.tp_rate_05 <= 1.0 and 0.0 <= r.tp_rate_01 <= 1.0
        assert r.mean_accuracy >= 0.7
        assert r.tp_rate_05 == 1.0

        per_split = tmp_path / "det.csv"
        summary = tmp_path / "sum.csv"
        export_detection_csv(per_split, reports)
        export_detection_summary_csv(summary, reports)
        lines = per_split.read_text().strip().split("\n")
        assert lines[0] == "band,split,p_value,accuracy"
        assert len(lines) == 5
        slines = summary.read_text().strip().split("\n")
        assert slines[0] == "band,mean_acc,tp05,tp01"
        assert len(slines) == 2
        assert slines[1].startswith("0.25,")

    def test_deterministic_given_seed(self):
        r1, _ = gen_power_law_gaussian(24, (8, 8), amplitude=2.0, exponent=2.0, seed=72)
        r2, _ = gen_power_law_gaussian(24, (8, 8), amplitude=2.0, exponent=3.0, seed=73)
        a = run_detection(r1, r2, band_fractions=(0.5,), splits=2, b=100, seed=12)
        b = run_detection(r1, r2, band_fractions=(0.5,), splits=2, b=100, seed=12)
        assert np.array_equal(a[0].p_values, b[0].p_values)
        assert np.array_equal(a[0].accuracies, b[0].accuracies)
