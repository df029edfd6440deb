"""Synthetic datasets, profile estimation, and tensor/image I/O.

Generators produce fields in the pixel convention [-1, +1]:

* dots: black background, a handful of white pixels placed uniformly.
* power-law Gaussian: exactly zero-mean Gaussian fields whose Fourier
  variance profile is A * (1 + distance)^(-p). The generating profile is
  returned alongside the dataset so estimators can be checked against it.
* mixture1d: scalar draws from 0.5 N(-1, delta^2) + 0.5 N(+1, delta^2).
* signed field: a fixed pattern multiplied by a random sign per item plus
  a small white jitter; every Fourier bin then has a bimodal marginal,
  which is the stress case for the Gaussianity diagnostics.

Tensor files use a small versioned binary format (FTEN): magic "FTEN",
version u32 LE, dtype byte (0 real f64 / 1 complex interleaved f64),
ndim byte, dims u64 LE, row-major little-endian payload. Images export
as binary PGM (P5), [-1, 1] mapped to [0, 255].
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDataError, TensorFormatError
from .schedule import floor_profile
from .spectral import forward_transform_stack, frequency_order, inverse_transform_stack, sample_hermitian_noise

FTEN_MAGIC = b"FTEN"
FTEN_VERSION = 1
DB_EPS = 1e-12


@dataclass
class Dataset:
    """A stack of same-shape real fields plus generator metadata."""

    items: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.items = np.asarray(self.items, dtype=np.float64)
        if self.items.shape[0] == 0:
            raise DegenerateDataError("dataset must be non-empty")

    def __len__(self):
        return self.items.shape[0]

    @property
    def field_shape(self):
        return self.items.shape[1:]


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def gen_dots(n, h=32, w=32, min_count=46, max_count=50, rng=None, seed=None):
    """Binary images: background -1, k pixels +1, k uniform in [min, max]."""
    if rng is None:
        rng = np.random.default_rng(seed)
    if not 0 <= min_count <= max_count:
        raise ValueError(f"need 0 <= min_count <= max_count, got [{min_count}, {max_count}]")
    if max_count > h * w:
        raise ValueError(f"max_count {max_count} exceeds pixel budget {h * w}")
    items = np.full((n, h, w), -1.0)
    for j in range(n):
        k = int(rng.integers(min_count, max_count + 1))
        idx = rng.choice(h * w, size=k, replace=False)
        items[j].flat[idx] = 1.0
    meta = {"generator": "dots", "h": h, "w": w, "min_count": min_count,
            "max_count": max_count, "seed": seed}
    return Dataset(items, meta)


def power_law_profile(shape, amplitude, exponent):
    """C_i = amplitude * (1 + manhattan_distance_i)^(-exponent)."""
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    dist = frequency_order(shape).distances.reshape(shape)
    return amplitude * (1.0 + dist) ** (-float(exponent))


def gen_power_law_gaussian(n, shape, amplitude=1.0, exponent=2.0, rng=None, seed=None):
    """Zero-mean Gaussian fields with a power-law Fourier variance profile.

    Returns (dataset, c) where c is the exact generating profile.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    c = power_law_profile(shape, amplitude, exponent)
    fields = inverse_transform_stack(sample_hermitian_noise(c, rng, n=n))
    meta = {"generator": "power-law", "shape": list(shape), "amplitude": amplitude,
            "exponent": exponent, "seed": seed}
    return Dataset(fields, meta), c


def gen_mixture1d(n, delta, rng=None, seed=None):
    """Scalar draws from the equal mixture of N(-1, delta^2) and N(+1, delta^2)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if rng is None:
        rng = np.random.default_rng(seed)
    signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    vals = signs + delta * rng.standard_normal(n)
    meta = {"generator": "mixture1d", "delta": delta, "seed": seed}
    return Dataset(vals, meta)


def gen_signed_field(n, pattern, delta, rng=None, seed=None):
    """Items are sign * pattern + delta * white noise, sign a fair coin.

    Every Fourier bin inherits a two-lobe marginal at +-pattern_bin, so the
    dataset is maximally non-Gaussian per bin while its second moments match
    the spectrum of the pattern.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if rng is None:
        rng = np.random.default_rng(seed)
    pattern = np.asarray(pattern, dtype=np.float64)
    signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    noise = delta * rng.standard_normal((n,) + pattern.shape)
    items = signs.reshape((n,) + (1,) * pattern.ndim) * pattern + noise
    meta = {"generator": "signed-field", "delta": delta, "seed": seed,
            "shape": list(pattern.shape)}
    return Dataset(items, meta)


# ---------------------------------------------------------------------------
# estimation and summaries
# ---------------------------------------------------------------------------


def estimate_variance_profile(d):
    """Per-bin Var(Re) + Var(Im) of the transformed dataset, floored positive."""
    if len(d) < 2:
        raise DegenerateDataError(f"need at least 2 items to estimate variance, got {len(d)}")
    y = forward_transform_stack(d.items)
    var = y.real.var(axis=0, ddof=1) + y.imag.var(axis=0, ddof=1)
    if var.max() <= 0.0:
        # all-identical dataset: fall back to a flat absolute floor
        return np.full(var.shape, 1e-12)
    return floor_profile(var)


@dataclass
class IntensityProfile:
    """Position-wise stats of descending-sorted pixel intensities."""

    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray


def intensity_profile(d):
    """Sort each item's pixels descending, then average position-wise.

    The 95% band is a normal approximation over items (zero width for a
    single item).
    """
    n = len(d)
    flat = d.items.reshape(n, -1)
    srt = -np.sort(-flat, axis=1)
    mean = srt.mean(axis=0)
    if n >= 2:
        half = 1.96 * srt.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        half = np.zeros_like(mean)
    return IntensityProfile(mean=mean, ci_low=mean - half, ci_high=mean + half)


@dataclass
class SpectralMagnitudeProfile:
    """Per-bin dB-magnitude stats in frequency-rank order."""

    ranks: np.ndarray
    mean_db: np.ndarray
    std_db: np.ndarray


def spectral_magnitude_profile(d, band=None):
    """Mean and std over items of 20*log10(|y_i| + eps), in rank order.

    band, if given, is a BandMask restricting which bins are reported.
    """
    n = len(d)
    shape = d.field_shape
    y = forward_transform_stack(d.items).reshape(n, -1)
    db = 20.0 * np.log10(np.abs(y) + DB_EPS)
    ordering = frequency_order(shape)
    order = ordering.ranks  # flat bin indices in rank order
    labels = np.arange(order.size)
    if band is not None:
        sel = band.keep.reshape(-1)[order]
        order = order[sel]
        labels = labels[sel]
    mean_db = db[:, order].mean(axis=0)
    std_db = db[:, order].std(axis=0, ddof=1) if n >= 2 else np.zeros(order.size)
    return SpectralMagnitudeProfile(ranks=labels, mean_db=mean_db, std_db=std_db)


# ---------------------------------------------------------------------------
# tensor and image I/O
# ---------------------------------------------------------------------------


def save_tensor(path, arr):
    """Write an array in the FTEN binary format (f64/c128, little endian)."""
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        code, payload = 1, arr.astype("<c16").tobytes(order="C")
    else:
        code, payload = 0, arr.astype("<f8").tobytes(order="C")
    if arr.ndim > 255:
        raise TensorFormatError(f"too many dimensions: {arr.ndim} > 255")
    with open(path, "wb") as f:
        f.write(FTEN_MAGIC)
        f.write(struct.pack("<I", FTEN_VERSION))
        f.write(bytes([code, arr.ndim]))
        for s in arr.shape:
            f.write(struct.pack("<Q", s))
        f.write(payload)


def _take(buf, pos, count, what):
    if pos + count > len(buf):
        missing = pos + count - len(buf)
        raise TensorFormatError(f"truncated file: {what} needs {missing} more byte(s)")
    return buf[pos:pos + count], pos + count


def load_tensor(path):
    """Read an FTEN file back into a numpy array; errors are structural."""
    with open(path, "rb") as f:
        buf = f.read()
    magic, pos = _take(buf, 0, 4, "magic")
    if magic != FTEN_MAGIC:
        raise TensorFormatError(f"bad magic {magic!r}, expected {FTEN_MAGIC!r}")
    raw, pos = _take(buf, pos, 4, "version")
    version = struct.unpack("<I", raw)[0]
    if version != FTEN_VERSION:
        raise TensorFormatError(f"unsupported version {version}")
    raw, pos = _take(buf, pos, 2, "dtype/ndim header")
    code, ndim = raw[0], raw[1]
    if code not in (0, 1):
        raise TensorFormatError(f"unknown dtype code {code}")
    dims = []
    for k in range(ndim):
        raw, pos = _take(buf, pos, 8, f"dimension {k}")
        dims.append(struct.unpack("<Q", raw)[0])
    count = int(np.prod(dims, dtype=np.int64)) if dims else 1
    itemsize = 16 if code == 1 else 8
    raw, pos = _take(buf, pos, count * itemsize, "payload")
    dtype = "<c16" if code == 1 else "<f8"
    arr = np.frombuffer(raw, dtype=dtype).reshape(dims)
    return arr.astype(np.complex128 if code == 1 else np.float64)


def save_dataset(path, d):
    """Items as FTEN at path, metadata as sorted-key JSON at path + '.json'."""
    save_tensor(path, d.items)
    with open(str(path) + ".json", "w") as f:
        json.dump(d.meta, f, sort_keys=True)
        f.write("\n")


def load_dataset(path):
    items = load_tensor(path)
    try:
        with open(str(path) + ".json") as f:
            meta = json.load(f)
    except FileNotFoundError:
        meta = {}
    return Dataset(items, meta)


def save_pgm(path, img):
    """Binary PGM (P5, maxval 255); [-1, 1] maps linearly onto [0, 255]."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"PGM export needs a 2-d field, got shape {img.shape}")
    g = np.clip((img + 1.0) / 2.0, 0.0, 1.0)
    px = np.round(g * 255.0).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(px.tobytes(order="C"))
