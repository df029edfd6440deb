"""Deterministic (DDIM-style) reverse process in Fourier space.

Starting from a base draw y_T ~ CN(0, Sigma), each step predicts the clean
spectrum and moves to

    y_{t-1} = sqrt(abar_{t-1}) y0_hat
              + (sqrt(1 - abar_{t-1}) / sqrt(1 - abar_t)) (y_t - sqrt(abar_t) y0_hat)

and the final y_0 is inverse-transformed to a pixel field. Fewer inference
steps than the training grid are taken by a uniform stride with abar looked
up at the selected indices.

For a per-bin linear denoiser the whole reverse pass is a per-bin linear map,
so the final variance obeys a closed recurrence (variance_recurrence_oracle);
Monte Carlo over ddim_sample must agree with it, which is the main
sampler-correctness check.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._csvio import write_csv
from .errors import SamplingDivergedError
from .process import NoisyState
from .spectral import frequency_order, inverse_transform_stack, sample_hermitian_noise


@dataclass
class SamplerConfig:
    """Inference-time settings; steps may undercut the training grid."""

    steps: int
    seed: Optional[int] = None
    record_trajectory: bool = False


@dataclass(eq=False)
class Trajectory:
    """States visited on the way down, t strictly decreasing.

    variances[i] holds the per-bin Var(Re)+Var(Im) across the batch at
    ts[i] (only meaningful for batched sampling; None otherwise).
    """

    ts: list
    states: list
    variances: Optional[list] = None


def inference_grid(T, steps):
    """Strictly increasing index grid 0 = t_0 < ... < t_steps = T."""
    if not 1 <= steps <= T:
        raise ValueError(f"steps must be in [1, {T}], got {steps}")
    grid = np.unique(np.round(np.linspace(0.0, T, steps + 1)).astype(int))
    return grid


def ddim_step(state, y0_hat, schedule, t_prev=None):
    """One deterministic reverse update from state.t down to t_prev.

    t_prev defaults to state.t - 1; a smaller value strides the schedule.
    """
    t = state.t
    if t < 1:
        raise ValueError(f"cannot step below t=0 (state at t={t})")
    t_prev = t - 1 if t_prev is None else int(t_prev)
    if not 0 <= t_prev < t:
        raise ValueError(f"t_prev must be in [0, {t - 1}], got {t_prev}")
    ab_t = float(schedule.alphabar[t])
    ab_prev = float(schedule.alphabar[t_prev])
    resid = state.y - np.sqrt(ab_t) * y0_hat
    y_prev = np.sqrt(ab_prev) * y0_hat + np.sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * resid
    return NoisyState(y=y_prev, t=t_prev)


def _run_reverse(denoiser, p, cfg, rng, n):
    grid = inference_grid(p.T, cfg.steps)[::-1]  # T ... 0
    y = sample_hermitian_noise(p.sigma, rng, n=n)
    state = NoisyState(y=y, t=int(grid[0]))
    traj = Trajectory(ts=[state.t], states=[state], variances=[]) if cfg.record_trajectory else None
    if traj is not None:
        traj.variances.append(_batch_variance(state.y, p.shape))
    for t_prev in grid[1:]:
        y0_hat = denoiser.predict(state.y, state.t)
        state = ddim_step(state, y0_hat, p.schedule, t_prev=int(t_prev))
        if not np.all(np.isfinite(state.y)):
            raise SamplingDivergedError(f"non-finite state at t={state.t}")
        if traj is not None:
            traj.ts.append(state.t)
            traj.states.append(state)
            traj.variances.append(_batch_variance(state.y, p.shape))
    return state, traj


def _batch_variance(y, shape):
    if y.ndim == len(shape):
        return None
    return y.real.var(axis=0) + y.imag.var(axis=0)


def ddim_sample(denoiser, p, cfg, rng=None):
    """Draw one sample; returns (field, trajectory or None)."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    state, traj = _run_reverse(denoiser, p, cfg, rng, n=None)
    field = inverse_transform_stack(state.y[None])[0]
    return field, traj


def ddim_sample_batch(denoiser, p, cfg, rng=None, n=1):
    """Draw n samples in one vectorized reverse pass; same per-sample law as
    ddim_sample. Returns (fields (n, *shape), trajectory or None)."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    state, traj = _run_reverse(denoiser, p, cfg, rng, n=int(n))
    fields = inverse_transform_stack(state.y)
    return fields, traj


# ---------------------------------------------------------------------------
# closed-form variance recurrence for linear denoisers
# ---------------------------------------------------------------------------


def _step_multiplier(ab_t, ab_prev, c, sigma):
    m = ab_t * c + (1.0 - ab_t) * sigma
    k = np.sqrt(ab_t) * c / m
    return np.sqrt(ab_prev) * k + np.sqrt((1.0 - ab_prev) / (1.0 - ab_t)) * (
        1.0 - np.sqrt(ab_t) * k
    )


def variance_recurrence_oracle(p, c, schedule, steps):
    """Predicted per-bin variance of the final y_0 under the analytic
    (posterior-mean) denoiser: v_T = Sigma, v_{t-1} = a_t^2 v_t."""
    c = np.asarray(c, dtype=np.float64)
    sigma = p.realized_sigma
    grid = inference_grid(schedule.T, steps)[::-1]
    v = sigma.copy()
    for t, t_prev in zip(grid[:-1], grid[1:]):
        a = _step_multiplier(
            float(schedule.alphabar[t]), float(schedule.alphabar[t_prev]), c, sigma
        )
        v = a * a * v
    return v


# ---------------------------------------------------------------------------
# reverse-process SNR proxy
# ---------------------------------------------------------------------------

REVERSE_SNR_DB_CAP = 100.0


def reverse_snr_proxy(y0_hat_batch, eps_hat_batch, schedule, t):
    """Per-bin reverse SNR at step t from batches of predictions.

    eps_hat is the reparameterized noise estimate
    (y_t - sqrt(abar_t) y0_hat) / sqrt(1 - abar_t). The ratio weights the
    predicted-signal variance by sqrt(abar_{t-1}) and the predicted-noise
    variance by sqrt(1 - abar_{t-1}); at abar_{t-1} = 1 the ratio is infinite
    and reported as the +100 dB sentinel in dB form.
    """
    ab_prev = float(schedule.alphabar[t - 1])
    vs = y0_hat_batch.real.var(axis=0) + y0_hat_batch.imag.var(axis=0)
    vn = eps_hat_batch.real.var(axis=0) + eps_hat_batch.imag.var(axis=0)
    num = np.sqrt(ab_prev) * vs
    den = np.sqrt(1.0 - ab_prev) * vn
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0.0, num / den, np.inf)
        out = np.where((num == 0.0) & (den == 0.0), 0.0, out)
    return out


def eps_hat_from_prediction(y_t, y0_hat, schedule, t):
    """Reparameterized noise estimate at step t (standard divisor)."""
    ab_t = float(schedule.alphabar[t])
    return (y_t - np.sqrt(ab_t) * y0_hat) / np.sqrt(1.0 - ab_t)


def snr_to_db(snr, cap=REVERSE_SNR_DB_CAP):
    """10 log10(snr) with +/- caps so sentinels stay finite in exports."""
    snr = np.asarray(snr, dtype=np.float64)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(snr)
    return np.clip(db, -cap, cap)


def reverse_snr_heatmap(denoiser, p, cfg, rng, n=2000):
    """Run a batched reverse pass collecting the per-bin reverse SNR at each
    visited step. Returns (ts, list of per-bin SNR arrays)."""
    grid = inference_grid(p.T, cfg.steps)[::-1]
    y = sample_hermitian_noise(p.sigma, rng, n=int(n))
    state = NoisyState(y=y, t=int(grid[0]))
    ts, profiles = [], []
    for t_prev in grid[1:]:
        y0_hat = denoiser.predict(state.y, state.t)
        eps_hat = eps_hat_from_prediction(state.y, y0_hat, p.schedule, state.t)
        ts.append(state.t)
        profiles.append(reverse_snr_proxy(y0_hat, eps_hat, p.schedule, state.t))
        state = ddim_step(state, y0_hat, p.schedule, t_prev=int(t_prev))
    return ts, profiles


def export_reverse_snr_csv(path, shape, ts, profiles):
    """Write `t,rank,snr_db` rows (t-major, dB capped at +/-100)."""
    order = frequency_order(shape)
    rows = []
    for t, prof in zip(ts, profiles):
        db = snr_to_db(prof.reshape(-1)[order.ranks])
        for rank, v in enumerate(db):
            rows.append((int(t), rank, float(v)))
    write_csv(path, ("t", "rank", "snr_db"), rows)


def export_trajectory_csv(path, shape, traj):
    """Write `t,rank,variance` rows for a batched trajectory."""
    if traj is None or traj.variances is None or traj.variances[0] is None:
        raise ValueError("trajectory with batch variances required")
    order = frequency_order(shape)
    rows = []
    for t, var in zip(traj.ts, traj.variances):
        by_rank = var.reshape(-1)[order.ranks]
        for rank, v in enumerate(by_rank):
            rows.append((int(t), rank, float(v)))
    write_csv(path, ("t", "rank", "variance"), rows)
