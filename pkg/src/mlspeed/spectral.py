"""2-D DFT utilities.

Convention: the forward transform is unnormalized,
``X[k] = sum_m x[m] exp(-2j*pi*(k1*m1/M1 + k2*m2/M2))``, and the inverse
carries the ``1/(M1*M2)`` factor.  Any frame size is accepted; numpy's
pocketfft handles non-power-of-two lengths with mixed-radix and Bluestein
passes, so frames are never cropped or padded.
"""
from __future__ import annotations

import numpy as np


def dft2(f) -> np.ndarray:
    """Forward 2-D DFT over the last two axes (a stack of frames is fine)."""
    return np.fft.fft2(f)


def idft2(spectrum) -> np.ndarray:
    """Inverse of :func:`dft2`; returns a complex grid."""
    return np.fft.ifft2(spectrum)


def spatial_frequencies(shape) -> tuple[np.ndarray, np.ndarray]:
    """Normalized frequencies ``u1 = k1/M1`` (column) and ``u2 = k2/M2`` (row).

    Returned with broadcastable shapes ``(M1, 1)`` and ``(1, M2)``.
    """
    m1, m2 = shape
    u1 = (np.arange(m1, dtype=np.float64) / m1)[:, None]
    u2 = (np.arange(m2, dtype=np.float64) / m2)[None, :]
    return u1, u2


def phase_ramp(shape, d) -> np.ndarray:
    """``exp(-2j*pi*u_k . d)`` for every bin; ``d`` may be real."""
    u1, u2 = spatial_frequencies(shape)
    d1, d2 = d
    # reduce the integer part of u*d first so large shifts stay accurate
    phase = np.mod(u1 * d1, 1.0) + np.mod(u2 * d2, 1.0)
    return np.exp(-2j * np.pi * phase)


def phase_shift(spectrum, d) -> np.ndarray:
    """Shift-theorem translation: the result is the spectrum of ``f`` rolled by ``d``."""
    spectrum = np.asarray(spectrum)
    return spectrum * phase_ramp(spectrum.shape[-2:], d)


def cross_correlation_map(a, t) -> np.ndarray:
    """Circular cross-correlation ``c[p] = sum_m a[m] t[(m - p) mod dims]``.

    ``a`` may be a stack ``(N, M1, M2)`` correlated frame by frame against
    the single template ``t``.  Equivalently
    ``sum_k Re{A[k] T*[k] exp(+2j*pi*u_k . p)} = M1*M2*c[p]``.
    """
    a = np.asarray(a, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if a.shape[-2:] != t.shape:
        raise ValueError(f"dimension mismatch: {a.shape[-2:]} vs template {t.shape}")
    return correlate_spectra(dft2(a), dft2(t))


def correlate_spectra(a_spec, t_spec) -> np.ndarray:
    """Same as :func:`cross_correlation_map`, starting from spectra."""
    return np.real(idft2(a_spec * np.conj(t_spec)))


def raised_cosine_taper(shape, fraction: float) -> np.ndarray:
    """Separable border taper; ``fraction`` of each side ramps from 0 to 1.

    ``fraction = 0`` yields all ones.
    """
    if not 0.0 <= fraction <= 0.5:
        raise ValueError(f"taper fraction must lie in [0, 0.5], got {fraction}")

    def axis(m):
        w = np.ones(m)
        width = int(round(fraction * m))
        if width > 0:
            ramp = 0.5 - 0.5 * np.cos(np.pi * (np.arange(width) + 0.5) / width)
            w[:width] = ramp
            w[m - width:] = ramp[::-1]
        return w

    return np.outer(axis(shape[0]), axis(shape[1]))
