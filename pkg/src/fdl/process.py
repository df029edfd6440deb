"""Forward diffusion processes in Fourier space.

A forward process is determined by a mixing schedule and a per-bin noise
variance profile Sigma. The marginal at step t of a spectrum y0 is

    y_t = sqrt(abar_t) * y0 + sqrt(1 - abar_t) * eps,   eps ~ CN(0, Sigma)

with eps conjugate-symmetric so that y_t stays real-representable. The
per-step form uses the retain ratio rho_t = abar_t / abar_{t-1}:

    y_t = sqrt(rho_t) * y_{t-1} + sqrt(1 - rho_t) * eps.

Sigma is diagonal (an array shaped like the field) for all three kinds:
"ddpm" is white noise, "equalsnr" scales noise with the signal variance, and
"flippedsnr" reverses the SNR profile across frequency ranks.

Note on "flippedsnr": the rank-reversal formula Sigma_i = C_i / C_flip(i) can
assign different values to the two members of a conjugate pair, which exactly
Hermitian noise cannot realize per bin. `sigma` stores the formula value;
`realized_sigma` is its average over each conjugate pair, which is what the
noise sampler actually produces (identical for ddpm/equalsnr). Everything
that predicts variances (oracles, posterior means) uses `realized_sigma`.
"""

from dataclasses import dataclass, field

import numpy as np

from ._csvio import write_csv
from .errors import DegenerateDataError
from .schedule import PROCESS_KINDS, MixingSchedule, floor_profile, snr_profile
from .spectral import (
    frequency_order,
    rank_reversal,
    sample_hermitian_noise,
    symmetrized_profile,
)


def noise_covariance(kind, c, c0=1.0):
    """Per-bin noise variance Sigma for a process kind, floored at 1e-12*max."""
    c = np.asarray(c, dtype=np.float64)
    if kind == "ddpm":
        sigma = np.ones_like(c)
    elif kind == "equalsnr":
        sigma = c0 * c
    elif kind == "flippedsnr":
        flip = rank_reversal(frequency_order(c.shape))
        sigma = (c.reshape(-1) / c.reshape(-1)[flip]).reshape(c.shape)
    else:
        raise ValueError(f"unknown process kind {kind!r} (want one of {PROCESS_KINDS})")
    return floor_profile(sigma)


@dataclass(eq=False)
class ForwardProcess:
    """Bundle of process kind, signal profile C, schedule, and noise profile."""

    kind: str
    c: np.ndarray
    schedule: MixingSchedule
    c0: float = 1.0
    sigma: np.ndarray = field(init=False)
    realized_sigma: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.float64)
        if np.any(c <= 0) or not np.all(np.isfinite(c)):
            raise ValueError("variance profile entries must be finite and > 0")
        self.c = c
        self.sigma = noise_covariance(self.kind, c, self.c0)
        self.realized_sigma = symmetrized_profile(self.sigma)

    @property
    def shape(self):
        return self.c.shape

    @property
    def T(self):
        return self.schedule.T


@dataclass(eq=False)
class NoisyState:
    """Spectrum at a forward-process step; y may carry a leading batch axis."""

    y: np.ndarray
    t: int


def _alphabar(p, t):
    if not 0 <= t <= p.T:
        raise ValueError(f"t must be in [0, {p.T}], got {t}")
    return float(p.schedule.alphabar[t])


def forward_marginal_sample(y0, t, p, rng, n=None):
    """Sample y_t | y_0 from the forward marginal.

    y0 may be a single spectrum or a batch (n, *shape) matching `n`.
    """
    y0 = np.asarray(y0, dtype=np.complex128)
    if y0.shape[-len(p.shape) :] != p.shape:
        raise ValueError(f"spectrum shape {y0.shape} does not match process {p.shape}")
    ab = _alphabar(p, t)
    if n is None and y0.ndim == len(p.shape) + 1:
        n = y0.shape[0]  # batched input: one fresh noise draw per item
    if t == 0:
        y = y0.copy() if n is None else np.broadcast_to(y0, (n,) + p.shape).copy()
        return NoisyState(y=y, t=0)
    eps = sample_hermitian_noise(p.sigma, rng, n=n)
    y = np.sqrt(ab) * y0 + np.sqrt(1.0 - ab) * eps
    return NoisyState(y=y, t=int(t))


def forward_step_sample(prev, t, p, rng):
    """One forward step y_{t-1} -> y_t using the retain ratio rho_t."""
    if t != prev.t + 1:
        raise ValueError(f"step target t={t} does not follow state at t={prev.t}")
    if not 1 <= t <= p.T:
        raise ValueError(f"t must be in [1, {p.T}], got {t}")
    rho = p.schedule.retain_ratio(t)
    n = prev.y.shape[0] if prev.y.ndim > len(p.shape) else None
    eps = sample_hermitian_noise(p.sigma, rng, n=n)
    y = np.sqrt(rho) * prev.y + np.sqrt(1.0 - rho) * eps
    return NoisyState(y=y, t=int(t))


def empirical_snr(signals, p, t, rng, n=20000):
    """Monte Carlo per-bin SNR estimate at step t.

    signals: stack of clean spectra (m, *shape); the signal part resamples the
    dataset with replacement, the noise part draws fresh Hermitian noise.
    Var means Var(Re) + Var(Im) per bin.
    """
    signals = np.asarray(signals, dtype=np.complex128)
    if signals.ndim != len(p.shape) + 1 or signals.shape[1:] != p.shape:
        raise ValueError(f"expected signals shaped (m, *{p.shape}), got {signals.shape}")
    if signals.shape[0] < 2:
        raise DegenerateDataError("need at least 2 signal spectra to estimate SNR")
    ab = _alphabar(p, t)
    idx = rng.integers(0, signals.shape[0], size=n)
    sig = np.sqrt(ab) * signals[idx]
    noise = np.sqrt(1.0 - ab) * sample_hermitian_noise(p.sigma, rng, n=n)
    var_s = sig.real.var(axis=0) + sig.imag.var(axis=0)
    var_n = noise.real.var(axis=0) + noise.imag.var(axis=0)
    return var_s / var_n


def export_snr_heatmap_csv(path, process_kind, schedule, c, ts=None, c0=1.0):
    """Write the forward SNR heatmap as `t,rank,snr_db` rows, t-major."""
    ts = range(1, schedule.T + 1) if ts is None else ts
    order = frequency_order(np.asarray(c).shape)
    rows = []
    for t in ts:
        prof = snr_profile(process_kind, schedule, c, t, c0=c0).reshape(-1)
        by_rank = prof[order.ranks]  # ranks[r] = flat bin of rank r
        for rank, s in enumerate(by_rank):
            rows.append((int(t), rank, 10.0 * np.log10(float(s))))
    write_csv(path, ("t", "rank", "snr_db"), rows)
