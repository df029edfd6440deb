"""Unitary DFT wrappers, frequency ordering, band masks, and Hermitian noise.

Conventions used throughout the package:

* Real fields are float64 arrays, 1D or 2D; spectra are complex128 arrays of
  the same shape (full storage, no half-spectrum packing).
* Both transform directions carry 1/sqrt(N), so Parseval holds exactly:
  ``norm(x)**2 == norm(forward_transform(x))**2``.
* The variance of a complex quantity always means Var(Re) + Var(Im).
* A spectrum represents a real field iff it is conjugate-symmetric: the entry
  at multi-index j equals the conjugate of the entry at (-j mod shape).
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil

import numpy as np

from . import _kernels
from .errors import SpectrumSymmetryError

# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def _validate_field(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2):
        raise ValueError(f"expected a 1D or 2D field, got ndim={x.ndim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("field contains non-finite values")
    return x


def forward_transform(x):
    """Unitary DFT of a real field (batched over leading axes if ndim > 2 is
    a stack: the last one or two axes are transformed by the caller passing
    2D/1D arrays; stacks use forward_transform_stack)."""
    x = _validate_field(x)
    return np.fft.fftn(x, norm="ortho")


def forward_transform_stack(xs):
    """Unitary DFT applied to a stack of fields along the trailing axes."""
    xs = np.asarray(xs, dtype=np.float64)
    if not np.all(np.isfinite(xs)):
        raise ValueError("field stack contains non-finite values")
    axes = tuple(range(1, xs.ndim))
    return np.fft.fftn(xs, axes=axes, norm="ortho")


def conjugate_map(shape):
    """Flat index of the conjugate partner of every bin: j -> (-j) mod shape."""
    return _tables(tuple(int(n) for n in shape)).rev


def is_hermitian(y, tol=1e-9):
    """True if y is conjugate-symmetric within `tol` (relative to max |y|)."""
    y = np.asarray(y, dtype=np.complex128)
    rev = conjugate_map(y.shape)
    flat = y.reshape(-1)
    err = np.max(np.abs(flat - np.conj(flat[rev])))
    scale = max(1.0, float(np.max(np.abs(flat))) if flat.size else 1.0)
    return bool(err <= tol * scale)


def inverse_transform(y, tol=1e-9):
    """Inverse unitary DFT of a conjugate-symmetric spectrum, as a real field.

    Raises SpectrumSymmetryError if y is not Hermitian within `tol`.
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim not in (1, 2):
        raise ValueError(f"expected a 1D or 2D spectrum, got ndim={y.ndim}")
    if not np.all(np.isfinite(y)):
        raise ValueError("spectrum contains non-finite values")
    if not is_hermitian(y, tol=tol):
        raise SpectrumSymmetryError(
            "spectrum is not conjugate-symmetric within tolerance "
            f"{tol}; it does not represent a real field"
        )
    return np.fft.ifftn(y, norm="ortho").real


def inverse_transform_stack(ys):
    """Inverse unitary DFT of a stack of spectra; no symmetry check (callers
    pass constructed-Hermitian stacks), imaginary residue discarded."""
    ys = np.asarray(ys, dtype=np.complex128)
    axes = tuple(range(1, ys.ndim))
    return np.fft.ifftn(ys, axes=axes, norm="ortho").real


# ---------------------------------------------------------------------------
# frequency ordering and masks
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class FrequencyOrdering:
    """Bins sorted by Manhattan distance to DC on the centered grid.

    ranks[r] is the flat index of the r-th lowest bin; ties within a distance
    class are broken by row-major multi-index order. distances is indexed by
    flat bin index.
    """

    shape: tuple
    ranks: np.ndarray
    distances: np.ndarray

    @property
    def size(self):
        return self.ranks.size

    def rank_of(self):
        """Inverse permutation: flat bin index -> rank."""
        inv = np.empty_like(self.ranks)
        inv[self.ranks] = np.arange(self.ranks.size)
        return inv


def frequency_order(shape):
    shape = tuple(int(n) for n in shape)
    if len(shape) not in (1, 2):
        raise ValueError(f"expected a 1D or 2D shape, got {shape}")
    dist = np.zeros(shape, dtype=np.int64)
    for axis, n in enumerate(shape):
        idx = np.arange(n)
        offset = ((idx + n // 2) % n) - n // 2
        shp = [1] * len(shape)
        shp[axis] = n
        dist = dist + np.abs(offset).reshape(shp)
    flat = dist.reshape(-1)
    ranks = np.argsort(flat, kind="stable")  # stable = lexicographic tie-break
    return FrequencyOrdering(shape=shape, ranks=ranks, distances=flat)


def rank_reversal(ordering):
    """Flat-index permutation pairing rank r with rank d-1-r."""
    perm = np.empty(ordering.size, dtype=np.int64)
    perm[ordering.ranks] = ordering.ranks[::-1]
    return perm


@dataclass(eq=False)
class BandMask:
    """Boolean keep-mask over bins plus the ordering it was built from."""

    keep: np.ndarray  # bool, shaped like the field
    kind: str  # "low" or "high"
    count: int  # number of kept bins


def band_mask(ordering, kind, fraction):
    """Keep the lowest (kind="low") or highest (kind="high") ceil(fraction*d)
    bins of the ordering."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if kind not in ("low", "high"):
        raise ValueError(f"kind must be 'low' or 'high', got {kind!r}")
    d = ordering.size
    count = int(ceil(fraction * d))
    keep_flat = np.zeros(d, dtype=bool)
    chosen = ordering.ranks[:count] if kind == "low" else ordering.ranks[d - count :]
    keep_flat[chosen] = True
    return BandMask(keep=keep_flat.reshape(ordering.shape), kind=kind, count=count)


def apply_mask(y, mask):
    """Zero out bins not kept by the mask.

    The keep set must be closed under conjugate reversal, otherwise the output
    of a real-representable spectrum would stop being one.
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != mask.keep.shape:
        raise ValueError(f"shape mismatch: spectrum {y.shape} vs mask {mask.keep.shape}")
    keep_flat = mask.keep.reshape(-1)
    rev = conjugate_map(y.shape)
    if not np.array_equal(keep_flat, keep_flat[rev]):
        raise SpectrumSymmetryError(
            "mask is not symmetric under index reversal; masking would break "
            "conjugate symmetry"
        )
    return np.where(mask.keep, y, 0.0 + 0.0j)


# ---------------------------------------------------------------------------
# Hermitian noise
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class _PairTables:
    rev: np.ndarray  # flat conjugate-partner index per bin
    pair_a: np.ndarray  # first member of each conjugate pair (a < partner)
    pair_b: np.ndarray  # second member
    self_idx: np.ndarray  # self-conjugate bins (DC, Nyquist combinations)


@lru_cache(maxsize=64)
def _tables(shape):
    grids = np.indices(shape)
    rev_multi = tuple((-grids[a]) % shape[a] for a in range(len(shape)))
    rev = np.ravel_multi_index(rev_multi, shape).reshape(-1)
    idx = np.arange(rev.size)
    self_idx = np.flatnonzero(rev == idx)
    pair_a = np.flatnonzero(idx < rev)
    pair_b = rev[pair_a]
    return _PairTables(rev=rev, pair_a=pair_a, pair_b=pair_b, self_idx=self_idx)


def symmetrized_profile(profile):
    """Average a per-bin variance profile over each conjugate pair.

    This is the realizable target for exactly-Hermitian noise: conjugate bins
    share their magnitude, so they cannot carry different variances. A no-op
    for profiles already symmetric under index reversal.
    """
    profile = np.asarray(profile, dtype=np.float64)
    rev = conjugate_map(profile.shape)
    flat = profile.reshape(-1)
    return (0.5 * (flat + flat[rev])).reshape(profile.shape)


def sample_hermitian_noise(profile, rng, n=None):
    """Zero-mean complex Gaussian noise with conjugate symmetry.

    Per bin, Var(Re) + Var(Im) equals the profile entry: non-self-conjugate
    bins get independent Re and Im with variance profile/2 each (partner bin
    enforced as the conjugate); self-conjugate bins are real with variance
    profile. A profile differing across a conjugate pair is averaged over the
    pair first (the closest realizable target; see symmetrized_profile).

    Returns an array of shape `profile.shape`, or (n, *shape) when n is given.
    """
    profile = np.asarray(profile, dtype=np.float64)
    if np.any(profile < 0) or not np.all(np.isfinite(profile)):
        raise ValueError("noise profile entries must be finite and >= 0")
    shape = profile.shape
    tab = _tables(tuple(int(s) for s in shape))
    flat = symmetrized_profile(profile).reshape(-1)

    batch = 1 if n is None else int(n)
    z = rng.standard_normal((batch, 2, tab.pair_a.size))
    pair_vals = (z[:, 0] + 1j * z[:, 1]) * np.sqrt(0.5 * flat[tab.pair_a])
    self_vals = rng.standard_normal((batch, tab.self_idx.size)) * np.sqrt(
        flat[tab.self_idx]
    )
    out = _kernels.hermitian_scatter(
        pair_vals, self_vals, tab.pair_a, tab.pair_b, tab.self_idx, flat.size
    )
    out = out.reshape((batch,) + shape)
    return out[0] if n is None else out
