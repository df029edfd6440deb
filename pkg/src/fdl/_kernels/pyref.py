"""Pure-numpy reference implementations of the hot kernels.

These are the fallback backend when the compiled extension is unavailable
(or when FDL_PURE_PYTHON=1). They define the semantics; the Cython versions
in _fast.pyx must agree bitwise for hermitian_scatter and to float tolerance
for the reduction-based kernels (summation order differs).
"""

import numpy as np

BACKEND = "python"


def hermitian_scatter(pair_vals, self_vals, pair_a, pair_b, self_idx, size):
    """Scatter per-pair complex values and per-self-bin real values into spectra.

    pair_vals: (n, P) complex, value for the first member of each conjugate pair.
    self_vals: (n, S) real, value for each self-conjugate bin.
    Returns (n, size) complex with out[:, pair_b] = conj(out[:, pair_a]).
    """
    pair_vals = np.ascontiguousarray(pair_vals, dtype=np.complex128)
    self_vals = np.ascontiguousarray(self_vals, dtype=np.float64)
    n = pair_vals.shape[0]
    out = np.zeros((n, size), dtype=np.complex128)
    out[:, pair_a] = pair_vals
    out[:, pair_b] = np.conj(pair_vals)
    out[:, self_idx] = self_vals
    return out


def kde_gauss(samples, grid, bandwidth):
    """Gaussian-kernel density estimate of `samples` evaluated on `grid`.

    Returns the unnormalized-in-the-tails density (mean of kernel bumps);
    callers renormalize on their grid. Chunked so the (n, g) temporary stays
    below ~32 MB.
    """
    samples = np.asarray(samples, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    n = samples.size
    norm = 1.0 / (bandwidth * np.sqrt(2.0 * np.pi))
    out = np.zeros(grid.size, dtype=np.float64)
    step = max(1, int(4_000_000 // max(grid.size, 1)))
    for lo in range(0, n, step):
        chunk = samples[lo : lo + step]
        z = (grid[None, :] - chunk[:, None]) / bandwidth
        out += np.exp(-0.5 * z * z).sum(axis=0)
    return out * (norm / n)


def logistic_gd_batch(x, labels, iters, lr, l2):
    """Fit `m` logistic-regression models sharing the design matrix `x`.

    x: (n, k) features, no intercept column. labels: (m, n) in {0, 1}.
    Plain gradient descent on the mean cross-entropy with an L2 penalty on
    the non-intercept weights. Returns (m, k + 1) with column 0 = intercept.

    Each model's gradient is independent, so this matches a loop of
    single-model fits.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    n, k = x.shape
    m = labels.shape[0]
    w = np.zeros((m, k + 1), dtype=np.float64)
    yt = labels.T  # (n, m)
    for _ in range(iters):
        z = x @ w[:, 1:].T + w[:, 0]  # (n, m)
        p = 1.0 / (1.0 + np.exp(-z))
        g = (p - yt) / n
        gw = g.T @ x + l2 * w[:, 1:]  # (m, k)
        gb = g.sum(axis=0)
        w[:, 1:] -= lr * gw
        w[:, 0] -= lr * gb
    return w
