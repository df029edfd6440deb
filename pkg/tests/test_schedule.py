"""Schedules, SNR algebra, and calibration."""

import numpy as np
import pytest

from fdl.errors import ScheduleError
from fdl.schedule import (
    ALPHABAR_MIN,
    MixingSchedule,
    alphabar_from_snr,
    calibrate_ddpm_to_equal,
    calibrate_to_ddpm,
    export_schedule_csv,
    make_schedule,
    mean_snr,
    snr_profile,
)

# frozen from an independent evaluation of the closed-form cosine expression
# (scratch script; f(t) = cos^2(((t/T + 0.008) / 1.008) * pi/2), abar = f/f(0))
COSINE_T10_ABAR5 = 0.49384359044063775
COSINE_T10_ABAR1 = 0.972092737113969
COSINE_T10_ABAR10_RAW = 3.749982237642683e-33  # clamps to 1e-8
LINEAR_T10_ABAR10 = 0.9037394161512371


class TestMakeSchedule:
    @pytest.mark.parametrize("kind", ["linear", "cosine"])
    def test_alphabar0_is_one(self, kind):
        assert make_schedule(kind, 10).alphabar[0] == 1.0

    def test_cosine_strictly_decreasing_T1000(self):
        ab = make_schedule("cosine", 1000).alphabar
        assert np.all(np.diff(ab) < 0)

    def test_cosine_T10_frozen_values(self):
        ab = make_schedule("cosine", 10).alphabar
        assert ab[5] == pytest.approx(COSINE_T10_ABAR5, rel=1e-14)
        assert ab[1] == pytest.approx(COSINE_T10_ABAR1, rel=1e-14)
        assert COSINE_T10_ABAR10_RAW < ALPHABAR_MIN
        assert ab[10] == ALPHABAR_MIN  # clamped

    def test_linear_T10_frozen_value(self):
        ab = make_schedule("linear", 10).alphabar
        assert ab[10] == pytest.approx(LINEAR_T10_ABAR10, rel=1e-14)

    def test_T_validation(self):
        with pytest.raises(ScheduleError):
            make_schedule("cosine", 0)
        with pytest.raises(ScheduleError):
            make_schedule("quadratic", 10)

    def test_retain_ratio_product_recovers_alphabar(self):
        s = make_schedule("cosine", 20)
        prod = 1.0
        for t in range(1, 21):
            prod *= s.retain_ratio(t)
        assert prod == pytest.approx(s.alphabar[20], rel=1e-12)

    def test_custom_requires_monotone(self):
        with pytest.raises(ScheduleError):
            MixingSchedule(np.array([1.0, 0.5, 0.6]))
        with pytest.raises(ScheduleError):
            MixingSchedule(np.array([0.9, 0.5]))


class TestSnrProfile:
    def setup_method(self):
        self.sched = MixingSchedule(np.array([1.0, 0.8, 0.5, 0.2]))

    def test_ddpm_substitution(self):
        c = np.full((1,), 4.0)
        s = snr_profile("ddpm", self.sched, c, 2)  # abar = 0.5
        assert s[0] == pytest.approx(4.0, abs=1e-15)

    def test_equalsnr_flat(self):
        c = np.random.default_rng(0).uniform(0.5, 4.0, (4, 4))
        s = snr_profile("equalsnr", self.sched, c, 1)  # abar = 0.8
        assert np.all(s == s.reshape(-1)[0])
        assert s.reshape(-1)[0] == pytest.approx(4.0, rel=1e-15)

    def test_flipped_two_bins(self):
        c = np.array([8.0, 2.0])
        s = snr_profile("flippedsnr", self.sched, c, 2)  # abar = 0.5
        assert np.allclose(s, [2.0, 8.0], rtol=1e-15)

    def test_flipped_is_ddpm_rank_reversed(self):
        rng = np.random.default_rng(1)
        c = rng.uniform(0.5, 4.0, (4, 4))
        from fdl.spectral import frequency_order, rank_reversal

        flip = rank_reversal(frequency_order((4, 4)))
        ddpm = snr_profile("ddpm", self.sched, c, 2).reshape(-1)
        flipped = snr_profile("flippedsnr", self.sched, c, 2).reshape(-1)
        assert np.array_equal(flipped, ddpm[flip])

    def test_t_out_of_range(self):
        with pytest.raises(ScheduleError):
            snr_profile("ddpm", self.sched, np.ones(2), 0)
        with pytest.raises(ScheduleError):
            snr_profile("ddpm", self.sched, np.ones(2), 4)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            snr_profile("other", self.sched, np.ones(2), 1)


class TestAlphabarFromSnr:
    def test_examples(self):
        assert alphabar_from_snr(1.0, 2.0, 2.0) == pytest.approx(0.5)
        assert alphabar_from_snr(0.0, 1.0, 1.0) == 0.0
        assert alphabar_from_snr(3.0, 3.0, 1.0) == pytest.approx(0.5)

    def test_round_trip_with_snr_profile(self):
        sched = MixingSchedule(np.array([1.0, 0.7, 0.3]))
        c = np.array([2.0, 5.0])
        for t in (1, 2):
            s = snr_profile("ddpm", sched, c, t)
            back = alphabar_from_snr(s, c, np.ones_like(c))
            assert np.allclose(back, sched.alphabar[t], rtol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            alphabar_from_snr(-1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            alphabar_from_snr(1.0, 0.0, 1.0)


class TestCalibration:
    def test_substitution_examples(self):
        s = MixingSchedule(np.array([1.0, 0.5]))
        c2 = np.array([1.0, 3.0])  # mean 2
        assert calibrate_to_ddpm(s, c2).alphabar[1] == pytest.approx(2.0 / 3.0, rel=1e-15)
        c1 = np.array([0.5, 1.5])  # mean 1: fixed point
        assert calibrate_to_ddpm(s, c1).alphabar[1] == pytest.approx(0.5, rel=1e-15)
        s2 = MixingSchedule(np.array([1.0, 0.2]))
        c4 = np.array([4.0, 4.0])
        assert calibrate_to_ddpm(s2, c4).alphabar[1] == pytest.approx(0.5, rel=1e-15)

    def test_mean_snr_identity(self):
        # calibrated equal-SNR schedule reproduces the white-noise mean SNR
        rng = np.random.default_rng(2)
        c = rng.uniform(0.2, 5.0, (8, 8))
        ddpm = MixingSchedule(np.array([1.0, 0.9, 0.6, 0.3, 0.05]))
        eq = calibrate_to_ddpm(ddpm, c)
        for t in range(1, 5):
            want = mean_snr(snr_profile("ddpm", ddpm, c, t))
            got = mean_snr(snr_profile("equalsnr", eq, c, t))
            assert got == pytest.approx(want, rel=1e-12)

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(3)
        c = rng.uniform(0.2, 5.0, (6, 6))
        ddpm = MixingSchedule(np.array([1.0, 0.85, 0.55, 0.25, 0.04]))
        back = calibrate_ddpm_to_equal(calibrate_to_ddpm(ddpm, c), c)
        assert np.max(np.abs(back.alphabar - ddpm.alphabar)) <= 1e-12


def test_export_schedule_csv(tmp_path):
    path = tmp_path / "s.csv"
    export_schedule_csv(path, make_schedule("cosine", 10))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,alphabar,mean_snr_db"
    assert len(lines) == 11
    t, ab, db = lines[1].split(",")
    assert int(t) == 1
    assert float(ab) == make_schedule("cosine", 10).alphabar[1]
