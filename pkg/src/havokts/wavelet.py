"""Morlet continuous wavelet transform."""
from __future__ import annotations

import numpy as np

from havokts.errors import ParameterError
from havokts.signal import Sequence


def morlet_scale(frequency, omega0: float = 6.0):
    """Scale whose Morlet wavelet peaks at ``frequency`` (Fourier-period matching)."""
    return (omega0 + np.sqrt(2.0 + omega0**2)) / (4.0 * np.pi * np.asarray(frequency, dtype=np.float64))


def cwt_scalogram(x, frequencies, omega0: float = 6.0, dt: float | None = None) -> np.ndarray:
    """|W(f, t)| for the analytic Morlet wavelet, by convolution in the frequency domain.

    Rows follow ``frequencies``; the signal is not padded, so the transform is
    circular near the ends.
    """
    if isinstance(x, Sequence):
        dt = x.dt if dt is None else dt
        v = x.values
    else:
        v = np.asarray(x, dtype=np.float64)
        if dt is None:
            raise ParameterError("dt is required for a raw array")
    f = np.atleast_1d(np.asarray(frequencies, dtype=np.float64))
    if f.size == 0 or np.any(f <= 0):
        raise ParameterError("frequencies must be positive")
    nyq = 0.5 / dt
    if np.any(f >= nyq):
        raise ParameterError(f"frequencies must lie below the Nyquist frequency {nyq:g}")
    n = v.size
    xf = np.fft.fft(v)
    omega = 2.0 * np.pi * np.fft.fftfreq(n, d=dt)
    scales = morlet_scale(f, omega0)
    out = np.empty((f.size, n))
    pos = omega > 0
    for i, s in enumerate(scales):
        psi = np.zeros(n)
        psi[pos] = np.pi**-0.25 * np.exp(-0.5 * (s * omega[pos] - omega0) ** 2)
        psi *= np.sqrt(2.0 * np.pi * s / dt)
        out[i] = np.abs(np.fft.ifft(xf * psi))
    return out
