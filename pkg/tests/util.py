"""Shared helpers for the test suite."""

import numpy as np

from fdl.spectral import sample_hermitian_noise


def slow_dft(x):
    """O(N^2) direct-sum unitary DFT; independent oracle for the fft path."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim == 1:
        n = x.size
        k = np.arange(n)
        kern = np.exp(-2j * np.pi * np.outer(k, k) / n)
        return kern @ x / np.sqrt(n)
    h, w = x.shape
    j, k = np.arange(h), np.arange(w)
    kh = np.exp(-2j * np.pi * np.outer(j, j) / h)
    kw = np.exp(-2j * np.pi * np.outer(k, k) / w)
    return kh @ x @ kw.T / np.sqrt(h * w)


def mc_bin_variance(profile, n, rng, chunk=5000):
    """Per-bin Var(Re)+Var(Im) over n Hermitian noise draws, chunked."""
    profile = np.asarray(profile, dtype=np.float64)
    s_re = np.zeros(profile.shape)
    s_re2 = np.zeros(profile.shape)
    s_im = np.zeros(profile.shape)
    s_im2 = np.zeros(profile.shape)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        z = sample_hermitian_noise(profile, rng, n=m)
        s_re += z.real.sum(axis=0)
        s_re2 += (z.real**2).sum(axis=0)
        s_im += z.imag.sum(axis=0)
        s_im2 += (z.imag**2).sum(axis=0)
        done += m
    var_re = s_re2 / n - (s_re / n) ** 2
    var_im = s_im2 / n - (s_im / n) ** 2
    return var_re + var_im


def random_hermitian_spectrum(shape, rng, scale=1.0):
    """Random conjugate-symmetric spectrum via the noise sampler."""
    return sample_hermitian_noise(np.full(shape, scale), rng)
