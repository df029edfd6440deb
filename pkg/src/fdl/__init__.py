"""Frequency-domain diffusion lab.

Forward/reverse diffusion processes expressed in Fourier space and
parameterized by their per-frequency signal-to-noise ratio, together with
training and sampling loops, Gaussianity diagnostics, and a spectral
forgery detector.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
