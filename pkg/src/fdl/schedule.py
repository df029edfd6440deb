"""Mixing schedules, per-frequency SNR algebra, and schedule calibration.

A mixing schedule is the array abar_0..abar_T of cumulative signal-retain
coefficients: the forward marginal at step t is
``y_t = sqrt(abar_t) y_0 + sqrt(1 - abar_t) eps``. The per-step retain ratio
is ``rho_t = abar_t / abar_{t-1}`` (so the classic per-step noise variance is
``1 - rho_t``).

The signal-to-noise ratio of bin i at step t is

    snr_t(i) = abar_t * C_i / ((1 - abar_t) * Sigma_ii)

with C the per-bin signal variance and Sigma the per-bin noise variance.
The three process kinds differ only in Sigma: white noise ("ddpm"),
noise proportional to the signal ("equalsnr", every bin gets the same SNR),
and noise chosen so the SNR profile is the rank-reversal of the white-noise
one ("flippedsnr").
"""

from dataclasses import dataclass

import numpy as np

from ._csvio import write_csv
from .errors import ScheduleError
from .spectral import frequency_order, rank_reversal

ALPHABAR_MIN = 1e-8
ALPHABAR_MAX = 1.0 - 1e-8

PROCESS_KINDS = ("ddpm", "equalsnr", "flippedsnr")
SCHEDULE_KINDS = ("linear", "cosine", "custom")


@dataclass(eq=False)
class MixingSchedule:
    """Cumulative mixing coefficients abar_0..abar_T.

    abar_0 is exactly 1; later entries are strictly decreasing, clamped into
    [ALPHABAR_MIN, ALPHABAR_MAX].
    """

    alphabar: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        ab = np.asarray(self.alphabar, dtype=np.float64)
        if ab.ndim != 1 or ab.size < 2:
            raise ScheduleError("alphabar must be a 1D array of length T+1 with T >= 1")
        if self.kind not in SCHEDULE_KINDS:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        if ab[0] != 1.0:
            raise ScheduleError(f"alphabar_0 must be 1, got {ab[0]}")
        tail = ab[1:]
        if np.any(tail < ALPHABAR_MIN) or np.any(tail > ALPHABAR_MAX):
            raise ScheduleError(
                f"alphabar_t for t >= 1 must lie in [{ALPHABAR_MIN}, {ALPHABAR_MAX}]"
            )
        if np.any(np.diff(ab) >= 0):
            raise ScheduleError("alphabar must be strictly decreasing")
        self.alphabar = ab

    @property
    def T(self):
        return self.alphabar.size - 1

    def retain_ratio(self, t):
        """rho_t = abar_t / abar_{t-1}, the per-step signal retain fraction."""
        if not 1 <= t <= self.T:
            raise ScheduleError(f"t must be in [1, {self.T}], got {t}")
        return float(self.alphabar[t] / self.alphabar[t - 1])


def _clamp(raw):
    return np.clip(raw, ALPHABAR_MIN, ALPHABAR_MAX)


def make_schedule(kind, T):
    """Build a "cosine" or "linear" schedule with T steps."""
    T = int(T)
    if T < 1:
        raise ScheduleError(f"T must be >= 1, got {T}")
    if kind == "cosine":
        s = 0.008
        t = np.arange(T + 1, dtype=np.float64)
        f = np.cos(((t / T + s) / (1.0 + s)) * (np.pi / 2.0)) ** 2
        raw = f / f[0]
    elif kind == "linear":
        # per-step noise variance ramps linearly from 1e-4 to 0.02
        beta = np.linspace(1e-4, 0.02, T)
        raw = np.concatenate([[1.0], np.cumprod(1.0 - beta)])
    else:
        raise ScheduleError(f"unknown schedule kind {kind!r} (want 'linear' or 'cosine')")
    alphabar = np.concatenate([[1.0], _clamp(raw[1:])])
    return MixingSchedule(alphabar=alphabar, kind=kind)


# ---------------------------------------------------------------------------
# SNR algebra
# ---------------------------------------------------------------------------


def _check_profile(c):
    c = np.asarray(c, dtype=np.float64)
    if np.any(c <= 0) or not np.all(np.isfinite(c)):
        raise ValueError("variance profile entries must be finite and > 0")
    return c


def floor_profile(c, rel=1e-12):
    """Floor profile entries at rel * max(entry); guards later divisions."""
    c = np.asarray(c, dtype=np.float64)
    return np.maximum(c, rel * float(c.max()))


def snr_profile(process_kind, schedule, c, t, c0=1.0):
    """Per-bin SNR at step t for the given process kind.

    c is the per-bin signal variance, shaped like the field. Returns an array
    of the same shape.
    """
    c = _check_profile(c)
    if not 1 <= t <= schedule.T:
        raise ScheduleError(f"t must be in [1, {schedule.T}], got {t}")
    ab = float(schedule.alphabar[t])
    if ab >= 1.0:
        raise ScheduleError("alphabar_t = 1 gives infinite SNR; use a clamped schedule")
    ratio = ab / (1.0 - ab)
    if process_kind == "ddpm":
        return ratio * c
    if process_kind == "equalsnr":
        return np.full_like(c, ratio / c0)
    if process_kind == "flippedsnr":
        flip = rank_reversal(frequency_order(c.shape))
        return (ratio * c.reshape(-1)[flip]).reshape(c.shape)
    raise ValueError(f"unknown process kind {process_kind!r}")


def mean_snr(profile):
    """Arithmetic mean of a per-bin SNR profile."""
    return float(np.mean(profile))


def alphabar_from_snr(s, c_i, sigma_ii):
    """Mixing coefficient that realizes SNR `s` at a bin with signal variance
    c_i and noise variance sigma_ii: abar = s*Sigma / (C + s*Sigma)."""
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("target SNR must be >= 0")
    if np.any(np.asarray(c_i) <= 0) or np.any(np.asarray(sigma_ii) <= 0):
        raise ValueError("variances must be > 0")
    q = s * sigma_ii
    out = q / (c_i + q)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# calibration between white-noise and equal-SNR schedules
# ---------------------------------------------------------------------------


def calibrate_to_ddpm(ddpm, c, c0=1.0):
    """Equal-SNR schedule whose mean SNR matches the white-noise schedule.

    abar_eq = abar*m / ((1 - abar) + abar*m) with m = mean(C)/c0.
    """
    c = _check_profile(c)
    m = float(np.mean(c)) / c0
    ab = ddpm.alphabar[1:]
    eq = ab * m / ((1.0 - ab) + ab * m)
    return MixingSchedule(np.concatenate([[1.0], _clamp(eq)]), kind="custom")


def calibrate_ddpm_to_equal(eq, c, c0=1.0):
    """Inverse calibration: white-noise schedule matching an equal-SNR one.

    abar = abar_eq / (m*(1 - abar_eq) + abar_eq) with m = mean(C)/c0.
    """
    c = _check_profile(c)
    m = float(np.mean(c)) / c0
    ab = eq.alphabar[1:]
    dd = ab / (m * (1.0 - ab) + ab)
    return MixingSchedule(np.concatenate([[1.0], _clamp(dd)]), kind="custom")


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def export_schedule_csv(path, schedule, c=None, process_kind="ddpm", c0=1.0):
    """Write `t,alphabar,mean_snr_db` rows for t = 1..T.

    With no variance profile given, a flat unit profile is assumed (so the
    column is just the schedule's own SNR trajectory in dB).
    """
    if c is None:
        c = np.ones(1)
    rows = []
    for t in range(1, schedule.T + 1):
        prof = snr_profile(process_kind, schedule, c, t, c0=c0)
        rows.append((t, float(schedule.alphabar[t]), 10.0 * np.log10(mean_snr(prof))))
    write_csv(path, ("t", "alphabar", "mean_snr_db"), rows)
