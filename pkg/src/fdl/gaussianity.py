"""Normality diagnostics for the reverse process.

The pipeline estimates one-dimensional marginals of single Fourier bins by
KDE, reconstructs the single-step posterior through Bayes' rule on a grid,
and scores densities against Gaussian references:

* KL to the moment-matched Gaussian (the violation score),
* total variation to the best-fit Gaussian (the counterexample's measure),
* exact KL between circularly-symmetric complex Gaussians,
* the per-step ELBO KL term, which reduces to a noise-weighted quadratic.

Everything operates on uniform grids with trapezoid quadrature; densities
carry their own grid so downstream scores cannot mix supports.

One convention note: complex-Gaussian KL here has no leading 1/2. The
circular claim is checked against a Monte Carlo estimate in the tests, and
the convention only scales proportionality constants downstream.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._csvio import write_csv
from ._kernels import kde_gauss
from .errors import DegenerateDataError
from .process import forward_marginal_sample
from .spectral import conjugate_map, forward_transform_stack, frequency_order

GRID_POINTS = 1024
GRID_SPAN = 4.0  # half-width in sample standard deviations


# ---------------------------------------------------------------------------
# densities on uniform grids
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Density1D:
    """Nonnegative values on a uniform grid, integrating to 1 (trapezoid)."""

    grid: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.mass = np.asarray(self.mass, dtype=np.float64)
        if self.grid.shape != self.mass.shape or self.grid.ndim != 1:
            raise ValueError("grid and mass must be matching 1-d arrays")
        steps = np.diff(self.grid)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ValueError("grid must be uniformly spaced")
        if np.any(self.mass < 0.0):
            raise ValueError("density mass must be nonnegative")
        total = np.trapezoid(self.mass, self.grid)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"density integrates to {total}, not 1")

    def mean(self):
        return float(np.trapezoid(self.grid * self.mass, self.grid))

    def var(self):
        mu = self.mean()
        return float(np.trapezoid((self.grid - mu) ** 2 * self.mass, self.grid))

    def quantile(self, q):
        """Inverse CDF by linear interpolation of the trapezoid cumulative."""
        if not 0.0 < q < 1.0:
            raise ValueError(f"quantile must be in (0, 1), got {q}")
        dx = self.grid[1] - self.grid[0]
        seg = 0.5 * (self.mass[1:] + self.mass[:-1]) * dx
        cdf = np.concatenate([[0.0], np.cumsum(seg)])
        cdf /= cdf[-1]
        return float(np.interp(q, cdf, self.grid))


def _normalize(grid, values):
    total = np.trapezoid(values, grid)
    if total <= 0.0 or not np.isfinite(total):
        raise DegenerateDataError("density normalizer underflowed to zero")
    return Density1D(grid=grid, mass=values / total)


def silverman_bandwidth(samples):
    """0.9 min(std, iqr/1.34) n^(-1/5); the robust-spread variant."""
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    sd = samples.std(ddof=1)
    q75, q25 = np.percentile(samples, [75.0, 25.0])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if spread <= 0.0:
        raise DegenerateDataError("zero-spread samples admit no bandwidth")
    return 0.9 * spread * n ** (-0.2)


def marginal_estimate(samples, bandwidth=None):
    """Gaussian-kernel density of one bin's real scalar samples.

    Evaluated on a 1024-point grid spanning +-4 sample standard deviations
    around the mean, then renormalized on that grid. bandwidth defaults to
    Silverman's rule on these samples; pass a value to share one bandwidth
    across several bins.
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size < 1000:
        raise ValueError(f"need at least 1000 samples, got {samples.size}")
    sd = samples.std(ddof=1)
    if sd <= 0.0:
        raise DegenerateDataError("degenerate (zero variance) samples; density is a point mass")
    if bandwidth is None:
        bandwidth = silverman_bandwidth(samples)
    mu = samples.mean()
    grid = np.linspace(mu - GRID_SPAN * sd, mu + GRID_SPAN * sd, GRID_POINTS)
    dens = kde_gauss(samples, grid, float(bandwidth))
    return _normalize(grid, dens)


# ---------------------------------------------------------------------------
# the bimodal prior and Bayes reconstruction
# ---------------------------------------------------------------------------


@dataclass
class MixtureConfig:
    """Equal two-Gaussian mixture at -+1 observed through additive noise."""

    delta: float
    noise_variance: float = 4.0

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.noise_variance <= 0.0:
            raise ValueError("noise variance must be positive")


def mixture_density(cfg, half_width=2.0, points=4097):
    """Analytic density of the -+1 mixture on a symmetric grid.

    points defaults to odd so the grid contains 0 and is exactly symmetric,
    which keeps symmetric posteriors symmetric to rounding.
    """
    grid = np.linspace(-half_width, half_width, points)
    d2 = cfg.delta**2
    vals = 0.5 * (
        np.exp(-0.5 * (grid + 1.0) ** 2 / d2) + np.exp(-0.5 * (grid - 1.0) ** 2 / d2)
    ) / np.sqrt(2.0 * np.pi * d2)
    return _normalize(grid, vals)


def bayes_posterior_1d(prior, noise_variance, y, scale=1.0):
    """Posterior on the prior grid for a Gaussian observation channel.

    Observation model: y = scale * x + noise, noise ~ N(0, noise_variance).
    scale carries the per-step retention factor sqrt(rho_t) when used on the
    forward chain; the default 1 is the plain additive-noise case. Works in
    log space so distant observations do not underflow prematurely.
    """
    if noise_variance <= 0.0:
        raise ValueError("noise variance must be positive")
    x = prior.grid
    with np.errstate(divide="ignore"):
        logp = np.log(prior.mass)
    logp = logp - 0.5 * (y - scale * x) ** 2 / noise_variance
    peak = logp.max()
    # direct-space evaluation would underflow at every grid point; the
    # observation is incompatible with the prior's support
    if not np.isfinite(peak) or peak < -700.0:
        raise DegenerateDataError("posterior mass underflowed to zero on the prior grid")
    return _normalize(x, np.exp(logp - peak))


# ---------------------------------------------------------------------------
# Gaussian reference scores
# ---------------------------------------------------------------------------


def _gauss(grid, mu, var):
    return np.exp(-0.5 * (grid - mu) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def kl_to_moment_matched_gaussian(d):
    """KL(d || N(mean(d), var(d))) by trapezoid quadrature; >= 0 up to noise."""
    mu, var = d.mean(), d.var()
    # analytic log of the reference: the evaluated pdf underflows to 0 in
    # the far tail, where the density can still carry denormal-scale mass
    log_ref = -0.5 * (d.grid - mu) ** 2 / var - 0.5 * np.log(2.0 * np.pi * var)
    mask = d.mass > 0.0
    integrand = np.zeros_like(d.mass)
    integrand[mask] = d.mass[mask] * (np.log(d.mass[mask]) - log_ref[mask])
    return float(np.trapezoid(integrand, d.grid))


def _tv_against(d, mu, sigma):
    ref = _gauss(d.grid, mu, sigma**2)
    inside = 0.5 * np.trapezoid(np.abs(d.mass - ref), d.grid)
    outside = 0.5 * max(0.0, 1.0 - np.trapezoid(ref, d.grid))
    return inside + outside


def tv_to_best_gaussian(d, tol=1e-4):
    """Minimal total variation to any single Gaussian, with the argmin.

    Coarse 64x64 search over (mu, sigma) spanning the grid, then alternating
    golden-section refinement per coordinate until the TV improvement drops
    below tol. Returns (tv, mu, sigma).
    """
    lo, hi = float(d.grid[0]), float(d.grid[-1])
    span = hi - lo
    dx = float(d.grid[1] - d.grid[0])
    mus = np.linspace(lo, hi, 64)
    sigmas = np.geomspace(max(dx, 1e-12), span / 2.0, 64)
    best = (np.inf, 0.0, 1.0)
    for mu in mus:
        for s in sigmas:
            tv = _tv_against(d, mu, s)
            if tv < best[0]:
                best = (tv, float(mu), float(s))

    def golden(f, a, b):
        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        c = b - invphi * (b - a)
        e = a + invphi * (b - a)
        fc, fe = f(c), f(e)
        while b - a > tol * max(1.0, abs(b) + abs(a)):
            if fc < fe:
                b, e, fe = e, c, fc
                c = b - invphi * (b - a)
                fc = f(c)
            else:
                a, c, fc = c, e, fe
                e = a + invphi * (b - a)
                fe = f(e)
        return (a + b) / 2.0

    tv, mu, s = best
    for _ in range(4):
        mu = golden(lambda m: _tv_against(d, m, s), mu - span / 8.0, mu + span / 8.0)
        s = golden(lambda q: _tv_against(d, mu, q), s / 2.0, s * 2.0)
        new_tv = _tv_against(d, mu, s)
        if tv - new_tv < tol:
            tv = min(tv, new_tv)
            break
        tv = new_tv
    return float(tv), float(mu), float(s)


# ---------------------------------------------------------------------------
# complex-Gaussian KL and ELBO term
# ---------------------------------------------------------------------------


@dataclass
class ComplexGaussianParams:
    """Mean vector and positive diagonal covariance (complex convention)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.complex128)
        self.cov = np.asarray(self.cov, dtype=np.float64)
        if self.mean.shape != self.cov.shape:
            raise ValueError("mean and cov must share a shape")
        if np.any(self.cov <= 0.0):
            raise ValueError("covariance must be positive")


def kl_complex_gaussian(p, q):
    """KL(p || q) for circularly-symmetric diagonal complex Gaussians.

    Per bin: log(Sq/Sp) + Sp/Sq + |mu_p - mu_q|^2 / Sq - 1, summed. No
    leading 1/2; per-component the complex convention counts both parts.
    """
    d = p.mean - q.mean
    terms = (
        np.log(q.cov / p.cov)
        + p.cov / q.cov
        + (d.real**2 + d.imag**2) / q.cov
        - 1.0
    )
    return float(np.sum(terms))


def forward_posterior_params(y0, y_t, p, t):
    """Per-bin mean and variance of the forward single-step posterior
    q(y_{t-1} | y_t, y_0) under the process p. Variance is expressed in the
    complex convention using the pair-averaged (realizable) noise profile."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    ab_t = float(p.schedule.alphabar[t])
    ab_prev = float(p.schedule.alphabar[t - 1])
    rho = ab_t / ab_prev
    mean = (np.sqrt(ab_prev) * (1.0 - rho) * y0 + np.sqrt(rho) * (1.0 - ab_prev) * y_t) / (
        1.0 - ab_t
    )
    var = (1.0 - ab_prev) * (1.0 - rho) / (1.0 - ab_t) * p.realized_sigma
    return mean, var


def elbo_kl_term(y0, y_t, mu_theta, p, t):
    """KL between the forward posterior and the model's reverse kernel when
    both share the posterior variance: a noise-weighted squared mean gap.

    Bins with zero posterior variance (only at t = 1, where abar_0 = 1)
    contribute 0 for a matching mean and +inf otherwise.
    """
    mean, var = forward_posterior_params(y0, y_t, p, t)
    gap = np.asarray(mu_theta, dtype=np.complex128) - mean
    g2 = gap.real**2 + gap.imag**2
    out = np.zeros_like(g2)
    pos = var > 0.0
    out[pos] = g2[pos] / var[pos]
    out[~pos] = np.where(g2[~pos] == 0.0, 0.0, np.inf)
    return float(np.sum(out))


def direction_snr(v, cov_s, cov_n):
    """Directional SNR (v* Cov_s v) / (v* Cov_n v); covariances may be
    diagonal (1-d array) or dense matrices."""
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if not np.any(v != 0.0):
        raise ValueError("direction must be nonzero")

    def quad(cov):
        cov = np.asarray(cov, dtype=np.float64)
        if cov.ndim == 1:
            return float(np.sum((v.real**2 + v.imag**2) * cov))
        return float(np.real(np.conj(v) @ cov @ v))

    return quad(cov_s) / quad(cov_n)


# ---------------------------------------------------------------------------
# per-frequency violation report
# ---------------------------------------------------------------------------


@dataclass
class ViolationRow:
    rank: int
    flat_index: int
    kl: float
    posterior: Density1D


def _real_part_noise_variance(sigma_flat, idx, rev):
    # complex variance splits evenly across parts except on self-conjugate
    # (purely real) bins
    full = float(sigma_flat[idx])
    return full if rev[idx] == idx else 0.5 * full


def gaussian_violation_report(dataset, p, t, ranks=(None, None), rng=None, quantile=0.7):
    """Normality-violation score per selected frequency.

    For each requested rank: KDE of the bin's real part at t-1 and the
    Bayes-reconstructed single-step posterior at the `quantile` point of the
    t-1 marginal, scored by KL to the moment-matched Gaussian. One shared
    KDE bandwidth, set by Silverman's rule on the lowest requested rank
    after per-bin standardization (bandwidth scales with each bin's spread).

    ranks defaults to (lowest, highest). Returns a list of ViolationRow.
    """
    items = np.asarray(getattr(dataset, "items", dataset), dtype=np.float64)
    if items.shape[0] < 5000:
        raise ValueError(f"need at least 5000 items, got {items.shape[0]}")
    if rng is None:
        rng = np.random.default_rng(0)
    shape = items.shape[1:]
    ordering = frequency_order(shape)
    d = ordering.size
    resolved = [r if r is not None else (0 if i == 0 else d - 1) for i, r in enumerate(ranks)]
    rev = conjugate_map(shape)
    sigma_flat = p.realized_sigma.reshape(-1)

    y0 = forward_transform_stack(items)
    prev = forward_marginal_sample(y0, t - 1, p, rng).y.reshape(items.shape[0], -1)
    ab_t = float(p.schedule.alphabar[t])
    ab_prev = float(p.schedule.alphabar[t - 1])
    rho = ab_t / ab_prev

    # shared bandwidth in standardized units from the first requested rank
    ref_idx = int(ordering.ranks[resolved[0]])
    ref = prev[:, ref_idx].real
    bw0 = silverman_bandwidth((ref - ref.mean()) / ref.std(ddof=1))

    rows = []
    for rank in resolved:
        idx = int(ordering.ranks[rank])
        samples = prev[:, idx].real
        sd = samples.std(ddof=1)
        if sd <= 0.0:
            raise DegenerateDataError(f"bin at rank {rank} has zero spread")
        prior = marginal_estimate(samples, bandwidth=bw0 * sd)
        y_star = prior.quantile(quantile)
        nv = (1.0 - rho) * _real_part_noise_variance(sigma_flat, idx, rev)
        post = bayes_posterior_1d(prior, nv, y_star, scale=np.sqrt(rho))
        rows.append(
            ViolationRow(
                rank=rank, flat_index=idx, kl=kl_to_moment_matched_gaussian(post), posterior=post
            )
        )
    return rows


def export_violation_csv(path, process_kind, t, rows):
    """`process,t,rank,kl` rows for the report command."""
    write_csv(
        path,
        ("process", "t", "rank", "kl"),
        [(process_kind, int(t), r.rank, r.kl) for r in rows],
    )


def export_density_csv(path, density):
    """`x,mass` rows for one curve."""
    write_csv(path, ("x", "mass"), list(zip(density.grid, density.mass)))
