"""Denoisers and the training loop.

Two denoisers share one interface (predict a clean spectrum from a noisy one):

* LinearGaussianDenoiser: the exact Bayes posterior mean when the clean data
  is zero-mean complex Gaussian with diagonal Fourier covariance C. Per bin,

      y0_hat_i = sqrt(abar_t) C_i / (abar_t C_i + (1 - abar_t) Sigma_ii) * y_t,i

  This is the analytic oracle the samplers are checked against.

* MlpDenoiser: a small fully connected network over pixel space with a
  sinusoidal time embedding appended to the flattened input, with the
  gradients derived by hand. The training loop draws (x0, t, noise), forms
  y_t, predicts the clean sample through the network, and minimizes the
  C-weighted squared error sum_i |y0_i - y0_hat_i|^2 / C_i by plain SGD
  (optional momentum).

The loss gradient with respect to the network's pixel output is
2 * Re(F^{-1}(residual / C)), F unitary: the DFT's adjoint is its inverse.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from ._csvio import write_csv
from .errors import TensorFormatError, TrainingDivergedError
from .spectral import forward_transform_stack, inverse_transform_stack, sample_hermitian_noise


class Denoiser:
    """Interface: map a (batch of) noisy spectra at step t to clean predictions."""

    def predict(self, y, t):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# analytic oracle
# ---------------------------------------------------------------------------


class LinearGaussianDenoiser(Denoiser):
    """Bayes posterior mean for Gaussian data; exact per-bin linear map."""

    def __init__(self, c, process):
        self.c = np.asarray(c, dtype=np.float64)
        self.process = process

    def coefficient(self, t):
        """Per-bin multiplier k_t; lies in [0, 1/sqrt(abar_t)]."""
        ab = float(self.process.schedule.alphabar[t])
        m = ab * self.c + (1.0 - ab) * self.process.realized_sigma
        return np.sqrt(ab) * self.c / m

    def predict(self, y, t):
        y = np.asarray(y, dtype=np.complex128)
        return self.coefficient(t) * y


def analytic_predict(d, y_t, t):
    """Functional form of LinearGaussianDenoiser.predict."""
    return d.predict(y_t, t)


def weighted_loss(y0, y0_hat, c):
    """C-weighted squared error: sum_i |y0_i - y0_hat_i|^2 / C_i."""
    y0 = np.asarray(y0)
    y0_hat = np.asarray(y0_hat)
    if y0.shape != y0_hat.shape:
        raise ValueError(f"shape mismatch: {y0.shape} vs {y0_hat.shape}")
    r = y0 - y0_hat
    return float(np.sum((r.real**2 + r.imag**2) / c))


# ---------------------------------------------------------------------------
# MLP denoiser
# ---------------------------------------------------------------------------


def _time_embedding(t, t_max, dim):
    """Sinusoidal embedding of t/t_max: dim/2 sine and dim/2 cosine channels
    with geometrically spaced frequencies in [1, 1000], scaled to unit norm
    (sin^2 + cos^2 sums to dim/2) so the embedding does not dominate the
    input covariance."""
    tau = np.atleast_1d(np.asarray(t, dtype=np.float64)) / t_max
    freqs = np.geomspace(1.0, 1000.0, dim // 2)
    ang = tau[:, None] * freqs[None, :]
    emb = np.concatenate([np.sin(ang), np.cos(ang)], axis=1)
    return emb / np.sqrt(dim / 2.0)


class MlpDenoiser(Denoiser):
    """Fully connected tanh network over pixel space.

    hidden=() degenerates to a single affine layer, which is the trainable
    linear denoiser used to check convergence against the analytic oracle.
    """

    def __init__(self, shape, hidden=(128, 128), t_max=1000, embed_dim=16, seed=0):
        self.shape = tuple(int(s) for s in shape)
        self.hidden = tuple(int(h) for h in hidden)
        self.t_max = int(t_max)
        self.embed_dim = int(embed_dim)
        if self.embed_dim % 2 != 0:
            raise ValueError("embed_dim must be even")
        d = int(np.prod(self.shape))
        sizes = [d + self.embed_dim, *self.hidden, d]
        rng = np.random.default_rng(seed)
        self.params = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = rng.standard_normal((fan_out, fan_in)) / np.sqrt(fan_in)
            b = np.zeros(fan_out)
            self.params.append([w, b])

    # -- forward ------------------------------------------------------------

    def _features(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == len(self.shape)
        if single:
            x = x[None]
        if x.shape[1:] != self.shape:
            raise ValueError(f"input shape {x.shape[1:]} != model shape {self.shape}")
        n = x.shape[0]
        ts = np.broadcast_to(np.atleast_1d(t), (n,))
        feats = np.concatenate(
            [x.reshape(n, -1), _time_embedding(ts, self.t_max, self.embed_dim)], axis=1
        )
        return feats, single

    def _forward(self, feats):
        """Returns (output, activations) with activations[i] the input to layer i."""
        acts = [feats]
        a = feats
        for w, b in self.params[:-1]:
            a = np.tanh(a @ w.T + b)
            acts.append(a)
        w, b = self.params[-1]
        return a @ w.T + b, acts

    def predict_pixels(self, x, t):
        """Pixel-space forward pass (the network itself)."""
        feats, single = self._features(x, t)
        out, _ = self._forward(feats)
        out = out.reshape((-1,) + self.shape)
        return out[0] if single else out

    def predict(self, y, t):
        """Spectrum-to-spectrum prediction: inverse transform, network, transform."""
        y = np.asarray(y, dtype=np.complex128)
        single = y.ndim == len(self.shape)
        ys = y[None] if single else y
        x = inverse_transform_stack(ys)
        out = self.predict_pixels(x, t)
        out = out[None] if out.ndim == len(self.shape) else out
        yhat = forward_transform_stack(out)
        return yhat[0] if single else yhat


def mlp_predict(m, x_t, t):
    """Functional form of MlpDenoiser.predict_pixels."""
    return m.predict_pixels(x_t, t)


def backprop_grads(m, x_t, t, y0, c):
    """Loss and exact parameter gradients for a batch.

    Loss is the batch mean of weighted_loss(y0, F(net(x_t, t)), c). Returns
    (loss, grads) with grads shaped like m.params.
    """
    y0 = np.asarray(y0, dtype=np.complex128)
    feats, single = m._features(x_t, t)
    if single:
        y0 = y0[None]
    n = feats.shape[0]
    out, acts = m._forward(feats)
    yhat = forward_transform_stack(out.reshape((n,) + m.shape))
    r = yhat - y0
    loss = float(np.sum((r.real**2 + r.imag**2) / c) / n)
    # adjoint of the unitary DFT is the inverse transform
    g_out = 2.0 * inverse_transform_stack(r / c).reshape(n, -1) / n
    grads = [[np.zeros_like(w), np.zeros_like(b)] for w, b in m.params]
    g = g_out
    for li in range(len(m.params) - 1, -1, -1):
        w, _ = m.params[li]
        a_in = acts[li]
        grads[li][0] = g.T @ a_in
        grads[li][1] = g.sum(axis=0)
        if li > 0:
            g = (g @ w) * (1.0 - acts[li] ** 2)  # tanh'
    return loss, grads


@dataclass
class TrainConfig:
    """Hyperparameters and bookkeeping for the training loop."""

    steps: int
    lr: float = 1e-3
    batch: int = 32
    seed: int = 0
    momentum: float = 0.0

    def __post_init__(self):
        if self.steps < 0 or self.lr <= 0 or self.batch < 1:
            raise ValueError("steps must be >= 0, lr > 0, batch >= 1")


def train(model, data, p, cfg):
    """Train a denoiser on clean fields with the C-weighted clean-sample loss.

    data: array (n, *shape) of pixel fields, or an object with an `items`
    attribute holding one. Returns the loss trace (length cfg.steps).
    Deterministic for a fixed seed. Aborts with TrainingDivergedError if the
    loss stays above 1e3 * initial loss for 100 consecutive steps.
    """
    items = np.asarray(getattr(data, "items", data), dtype=np.float64)
    if items.ndim != len(model.shape) + 1 or items.shape[1:] != model.shape:
        raise ValueError(f"expected data shaped (n, *{model.shape}), got {items.shape}")
    if items.shape[0] == 0:
        raise ValueError("empty dataset")
    T = p.schedule.T
    ab = p.schedule.alphabar
    rng = np.random.default_rng(cfg.seed)
    velocity = [[np.zeros_like(w), np.zeros_like(b)] for w, b in model.params]
    trace = []
    ref_loss = None
    bad_streak = 0
    bshape = (-1,) + (1,) * len(model.shape)
    for _ in range(cfg.steps):
        idx = rng.integers(0, items.shape[0], size=cfg.batch)
        x0 = items[idx]
        y0 = forward_transform_stack(x0)
        ts = rng.integers(1, T + 1, size=cfg.batch)
        eps = sample_hermitian_noise(p.sigma, rng, n=cfg.batch)
        abt = ab[ts].reshape(bshape)
        y_t = np.sqrt(abt) * y0 + np.sqrt(1.0 - abt) * eps
        x_t = inverse_transform_stack(y_t)
        loss, grads = backprop_grads(model, x_t, ts, y0, p.c)
        for (w, b), (gw, gb), (vw, vb) in zip(model.params, grads, velocity):
            if cfg.momentum > 0.0:
                vw *= cfg.momentum
                vw += gw
                vb *= cfg.momentum
                vb += gb
                w -= cfg.lr * vw
                b -= cfg.lr * vb
            else:
                w -= cfg.lr * gw
                b -= cfg.lr * gb
        trace.append(loss)
        if ref_loss is None:
            ref_loss = loss if loss > 0 else 1.0
        if loss > 1e3 * ref_loss or not np.isfinite(loss):
            bad_streak += 1
            if bad_streak >= 100:
                raise TrainingDivergedError(
                    f"loss {loss:.3e} above 1e3 x initial {ref_loss:.3e} "
                    f"for 100 consecutive steps (step {len(trace) - 1})"
                )
        else:
            bad_streak = 0
    return trace


# ---------------------------------------------------------------------------
# checkpoint and trace I/O
# ---------------------------------------------------------------------------

CHECKPOINT_MAGIC = b"FDLM"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, model):
    """Versioned binary checkpoint: magic, version, JSON header, f64 LE params."""
    header = json.dumps(
        {
            "shape": list(model.shape),
            "hidden": list(model.hidden),
            "t_max": model.t_max,
            "embed_dim": model.embed_dim,
        }
    ).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for w, b in model.params:
            fh.write(w.astype("<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise TensorFormatError(f"bad checkpoint magic {blob[:4]!r}")
    if len(blob) < 12:
        raise TensorFormatError(f"truncated checkpoint header: missing {12 - len(blob)} bytes")
    version, hlen = struct.unpack("<II", blob[4:12])
    if version != CHECKPOINT_VERSION:
        raise TensorFormatError(f"unsupported checkpoint version {version}")
    if len(blob) < 12 + hlen:
        raise TensorFormatError(
            f"truncated checkpoint header: missing {12 + hlen - len(blob)} bytes"
        )
    header = json.loads(blob[12 : 12 + hlen].decode())
    model = MlpDenoiser(
        shape=tuple(header["shape"]),
        hidden=tuple(header["hidden"]),
        t_max=header["t_max"],
        embed_dim=header["embed_dim"],
        seed=0,
    )
    offset = 12 + hlen
    payload = blob[offset:]
    need = sum(w.size + b.size for w, b in model.params) * 8
    if len(payload) != need:
        raise TensorFormatError(
            f"checkpoint payload has {len(payload)} bytes, expected {need} "
            f"(missing {max(0, need - len(payload))})"
        )
    pos = 0
    for w, b in model.params:
        for arr in (w, b):
            cnt = arr.size * 8
            arr[...] = np.frombuffer(payload[pos : pos + cnt], dtype="<f8").reshape(arr.shape)
            pos += cnt
    return model


def export_loss_csv(path, trace):
    write_csv(path, ("step", "loss"), [(i, float(v)) for i, v in enumerate(trace)])
