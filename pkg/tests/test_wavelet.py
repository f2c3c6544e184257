import numpy as np
import pytest

from havokts.errors import ParameterError
from havokts.wavelet import cwt_scalogram

DT = 0.01
T = np.arange(4000) * DT
FREQS = np.geomspace(0.2, 20, 60)


def test_pure_tone_peaks_at_its_frequency():
    for f0 in (0.7, 3.0, 11.0):
        W = cwt_scalogram(np.sin(2 * np.pi * f0 * T), FREQS, dt=DT)
        row = np.argmax(W[:, 2000])
        assert row == np.argmin(np.abs(FREQS - f0))


def test_zero_signal():
    assert np.all(cwt_scalogram(np.zeros(500), FREQS, dt=DT) == 0.0)


def test_two_tones():
    x = np.sin(2 * np.pi * 1.0 * T) + np.sin(2 * np.pi * 8.0 * T)
    prof = cwt_scalogram(x, FREQS, dt=DT)[:, 2000]
    peaks = [i for i in range(1, len(prof) - 1) if prof[i] > prof[i - 1] and prof[i] > prof[i + 1] and prof[i] > 0.1 * prof.max()]
    # two local maxima, each within one grid step of a tone (the sqrt(s) weighting tilts low)
    step = FREQS[1] / FREQS[0]
    assert len(peaks) == 2
    for p, f in zip(sorted(peaks), (1.0, 8.0)):
        assert 1 / step**1.01 <= FREQS[p] / f <= step**1.01


def test_amplitude_response():
    # a unit sinusoid at frequency f gives |W| = 0.5 sqrt(2 pi s / dt) pi^-1/4 exp(-(s w - w0)^2 / 2)
    f, w0 = 2.0, 6.0
    s_ = (w0 + np.sqrt(2 + w0**2)) / (4 * np.pi * f)
    expected = 0.5 * np.sqrt(2 * np.pi * s_ / DT) * np.pi**-0.25 * np.exp(-(s_ * 2 * np.pi * f - w0) ** 2 / 2)
    W = cwt_scalogram(np.sin(2 * np.pi * f * T), [f], omega0=w0, dt=DT)
    assert W[0, 2000] == pytest.approx(expected, rel=1e-3)


def test_time_reversal_symmetry(rng):
    x = rng.standard_normal(1024)
    W = cwt_scalogram(x, FREQS[:20], dt=DT)
    Wr = cwt_scalogram(x[::-1], FREQS[:20], dt=DT)
    assert np.allclose(Wr, W[:, ::-1], atol=1e-9)


def test_nyquist_and_sign_checks():
    with pytest.raises(ParameterError):
        cwt_scalogram(np.ones(100), [50.0], dt=DT)
    with pytest.raises(ParameterError):
        cwt_scalogram(np.ones(100), [-1.0], dt=DT)
    with pytest.raises(ParameterError):
        cwt_scalogram(np.ones(100), [1.0])
