"""Transforms, ordering, masks, and Hermitian noise."""

import numpy as np
import pytest

from fdl.errors import SpectrumSymmetryError
from fdl.spectral import (
    apply_mask,
    band_mask,
    conjugate_map,
    forward_transform,
    frequency_order,
    inverse_transform,
    is_hermitian,
    rank_reversal,
    sample_hermitian_noise,
    symmetrized_profile,
)

from util import mc_bin_variance, random_hermitian_spectrum, slow_dft


class TestTransforms:
    @pytest.mark.parametrize("shape", [(8,), (16,), (4, 4), (8, 8), (5, 7), (1, 6)])
    @pytest.mark.parametrize("seed", [0, 1])
    def test_round_trip(self, shape, seed):
        x = np.random.default_rng(seed).standard_normal(shape)
        back = inverse_transform(forward_transform(x))
        assert np.max(np.abs(back - x)) <= 1e-12

    @pytest.mark.parametrize("shape", [(8,), (4, 6), (5, 5)])
    def test_matches_slow_dft(self, shape):
        x = np.random.default_rng(3).standard_normal(shape)
        fast = forward_transform(x)
        slow = slow_dft(x)
        assert np.max(np.abs(fast - slow)) <= 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_parseval(self, seed):
        x = np.random.default_rng(seed).standard_normal((12, 9))
        y = forward_transform(x)
        a = np.sum(x**2)
        b = np.sum(np.abs(y) ** 2)
        assert abs(a - b) <= 1e-10 * a

    def test_linearity(self):
        rng = np.random.default_rng(7)
        x, z = rng.standard_normal((2, 6, 6))
        lhs = forward_transform(2.5 * x - 1.25 * z)
        rhs = 2.5 * forward_transform(x) - 1.25 * forward_transform(z)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12

    def test_zero_spectrum(self):
        assert np.array_equal(inverse_transform(np.zeros((4, 4), complex)), np.zeros((4, 4)))

    def test_dc_only(self):
        y = np.zeros((2, 2), complex)
        y[0, 0] = 2.0
        x = inverse_transform(y)
        assert np.allclose(x, 1.0, atol=1e-14)

    def test_hermitian_round_trip(self):
        y = random_hermitian_spectrum((6, 8), np.random.default_rng(11))
        back = forward_transform(inverse_transform(y))
        assert np.max(np.abs(back - y)) <= 1e-12

    def test_inverse_rejects_asymmetric(self):
        y = np.zeros((4, 4), complex)
        y[0, 1] = 1.0  # partner (0,3) left at zero
        with pytest.raises(SpectrumSymmetryError):
            inverse_transform(y)

    def test_rejects_non_finite(self):
        x = np.zeros((4, 4))
        x[0, 0] = np.nan
        with pytest.raises(ValueError):
            forward_transform(x)
        y = np.zeros((4, 4), complex)
        y[1, 1] = np.inf
        with pytest.raises(ValueError):
            inverse_transform(y)

    def test_rejects_3d(self):
        with pytest.raises(ValueError):
            forward_transform(np.zeros((2, 2, 2)))


class TestOrdering:
    def test_2x2_distances(self):
        o = frequency_order((2, 2))
        assert sorted(o.distances.tolist()) == [0, 1, 1, 2]
        assert o.ranks[0] == 0  # DC first

    def test_1d_length4(self):
        o = frequency_order((4,))
        assert sorted(o.distances.tolist()) == [0, 1, 1, 2]

    def test_tie_break_lexicographic(self):
        o = frequency_order((3, 3))
        # (0,1) and (1,0) both at distance 1; (0,1) = flat 1 precedes (1,0) = flat 3
        d1 = [i for i in o.ranks if o.distances[i] == 1]
        assert d1.index(1) < d1.index(3)

    def test_rank_of_inverts_ranks(self):
        o = frequency_order((4, 6))
        inv = o.rank_of()
        assert np.array_equal(np.sort(inv), np.arange(o.size))
        assert np.array_equal(o.ranks[inv], np.arange(o.size))

    def test_rank_reversal_is_involution(self):
        o = frequency_order((5, 4))
        flip = rank_reversal(o)
        assert np.array_equal(flip[flip], np.arange(o.size))
        # lowest bin maps to highest
        assert flip[o.ranks[0]] == o.ranks[-1]


class TestMasks:
    def test_full_mask_identity(self):
        o = frequency_order((4, 4))
        m = band_mask(o, "low", 1.0)
        y = random_hermitian_spectrum((4, 4), np.random.default_rng(0))
        assert np.array_equal(apply_mask(y, m), y)

    def test_zero_mask_zeroes(self):
        o = frequency_order((4, 4))
        m = band_mask(o, "low", 1.0)
        m.keep = np.zeros_like(m.keep)
        y = random_hermitian_spectrum((4, 4), np.random.default_rng(0))
        assert np.array_equal(apply_mask(y, m), np.zeros_like(y))

    def test_high_pass_epsilon_2x2(self):
        o = frequency_order((2, 2))
        m = band_mask(o, "high", 0.01)
        assert m.count == 1
        assert m.keep[1, 1]  # the distance-2 bin

    def test_partition(self):
        o = frequency_order((16,))
        lo = band_mask(o, "low", 0.25)
        hi = band_mask(o, "high", 0.75)
        assert not np.any(lo.keep & hi.keep)
        assert np.all(lo.keep | hi.keep)

    def test_low_pass_kills_nyquist_sinusoid(self):
        x = np.cos(np.pi * np.arange(8))  # pure highest-frequency mode
        y = forward_transform(x)
        # 5/8 keeps {DC, +-1, +-2}, a pair-closed set excluding the Nyquist bin
        m = band_mask(frequency_order((8,)), "low", 0.625)
        out = inverse_transform(apply_mask(y, m))
        assert np.max(np.abs(out)) <= 1e-12

    def test_asymmetric_mask_rejected(self):
        o = frequency_order((4, 4))
        m = band_mask(o, "low", 1.0)
        m.keep = m.keep.copy()
        m.keep[0, 1] = False  # partner (0,3) still kept
        y = random_hermitian_spectrum((4, 4), np.random.default_rng(1))
        with pytest.raises(SpectrumSymmetryError):
            apply_mask(y, m)

    def test_fraction_validation(self):
        o = frequency_order((4,))
        with pytest.raises(ValueError):
            band_mask(o, "low", 0.0)
        with pytest.raises(ValueError):
            band_mask(o, "mid", 0.5)

    def test_band_selects_by_rank(self):
        # on a rectangular grid the rank sequence is a nontrivial permutation
        # of flat order; the kept bins must be exactly the lowest/highest ranks
        o = frequency_order((3, 4))
        lo = band_mask(o, "low", 0.5)
        assert set(np.flatnonzero(lo.keep.reshape(-1))) == set(o.ranks[: lo.count])
        hi = band_mask(o, "high", 0.25)
        assert set(np.flatnonzero(hi.keep.reshape(-1))) == set(o.ranks[12 - hi.count :])
        # low band never contains a bin farther out than an excluded one
        kept_d = o.distances[lo.keep.reshape(-1)]
        dropped_d = o.distances[~lo.keep.reshape(-1)]
        assert kept_d.max() <= dropped_d.min()


class TestHermitianNoise:
    def test_exactly_hermitian(self):
        prof = np.random.default_rng(0).uniform(0.5, 2.0, (6, 8))
        prof = symmetrized_profile(prof)
        z = sample_hermitian_noise(prof, np.random.default_rng(1))
        assert is_hermitian(z, tol=0.0)

    def test_dc_imag_zero(self):
        z = sample_hermitian_noise(np.ones((8, 8)), np.random.default_rng(2))
        assert z[0, 0].imag == 0.0
        assert z[4, 4].imag == 0.0  # Nyquist-Nyquist

    def test_unit_profile_pixel_variance(self):
        # profile = 1 everywhere: inverse transform is white with variance 1
        rng = np.random.default_rng(3)
        z = sample_hermitian_noise(np.ones((8, 8)), rng, n=1600)
        x = np.fft.ifftn(z, axes=(1, 2), norm="ortho").real
        v = x.var()
        assert abs(v - 1.0) <= 0.02  # ~10^5 pixel values

    def test_per_bin_variance_matches_profile(self):
        prof = np.random.default_rng(4).uniform(0.5, 3.0, (4, 4))
        prof = symmetrized_profile(prof)
        v = mc_bin_variance(prof, 100_000, np.random.default_rng(5))
        assert np.max(np.abs(v / prof - 1.0)) <= 0.03

    def test_asymmetric_profile_pair_averaged(self):
        prof = np.zeros((4,))
        prof[1] = 2.0  # partner bin 3 gets 0 requested; realizable target is 1 each
        v = mc_bin_variance(prof, 50_000, np.random.default_rng(6))
        assert abs(v[1] - 1.0) <= 0.05
        assert abs(v[3] - 1.0) <= 0.05

    def test_negative_profile_rejected(self):
        with pytest.raises(ValueError):
            sample_hermitian_noise(np.array([-1.0, 1.0]), np.random.default_rng(0))

    def test_inverse_is_real(self):
        prof = np.random.default_rng(7).uniform(0.1, 2.0, (6, 6))
        z = sample_hermitian_noise(symmetrized_profile(prof), np.random.default_rng(8))
        resid = np.abs(np.fft.ifftn(z, norm="ortho").imag).max()
        assert resid <= 1e-12

    def test_conjugate_map_involution(self):
        rev = conjugate_map((6, 5))
        assert np.array_equal(rev[rev], np.arange(30))
