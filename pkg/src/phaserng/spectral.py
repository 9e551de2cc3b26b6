"""Power spectral density and autocorrelation estimators.

``psd_periodogram`` is an unwindowed one-sided periodogram normalized as a
density, so that ``sum(psd) * df`` equals the block's mean power (its
variance for zero-mean blocks).  ``acf_from_psd`` inverts it through the
Fourier transform, which reproduces the circular autocorrelation of the
source block exactly up to rounding; ``acf_direct`` is the direct-sum
estimator used as its oracle.  ``psd_welch`` is a Hann-windowed, averaged
estimator for display-quality spectra only; it is never a party to the
transform-duality checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as _signal

from .errors import DegenerateInputError, ParameterError


@dataclass
class SpectrumEstimate:
    """One-sided PSD in power per Hz, with the block length it came from."""

    freqs_hz: np.ndarray
    psd: np.ndarray
    fs_hz: float
    n_samples: int

    def __post_init__(self):
        if len(self.freqs_hz) != len(self.psd):
            raise ParameterError("freqs_hz and psd must have equal length")
        if np.any(np.diff(self.freqs_hz) <= 0):
            raise ParameterError("freqs_hz must be ascending")
        if np.any(self.psd < 0):
            raise ParameterError("psd values must be nonnegative")


@dataclass
class AcfEstimate:
    """Normalized autocorrelation: acf[0] == 1."""

    lags_s: np.ndarray
    acf: np.ndarray

    def __post_init__(self):
        if len(self.lags_s) != len(self.acf):
            raise ParameterError("lags_s and acf must have equal length")
        if len(self.acf) and abs(self.acf[0] - 1.0) > 1e-12:
            raise ParameterError("acf must be normalized to 1 at lag 0")
        if np.max(np.abs(self.acf), initial=0.0) > 1 + 1e-9:
            raise ParameterError("normalized acf magnitudes cannot exceed 1")


def _one_sided_weights(n: int) -> np.ndarray:
    """Doubling factors for rfft bins: 1 at DC (and Nyquist for even n)."""
    m = n // 2 + 1
    w = np.full(m, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    return w


def psd_periodogram(signal: np.ndarray, fs_hz: float) -> SpectrumEstimate:
    """Unwindowed one-sided periodogram of the full block.

    ``sum(psd) * (fs/n)`` equals the mean square of the block exactly
    (Parseval), so it equals the variance for zero-mean input.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise ParameterError("signal must be a 1-d array of at least 2 samples")
    if not (fs_hz > 0):
        raise ParameterError(f"fs_hz must be positive, got {fs_hz}")
    n = len(x)
    power = np.abs(np.fft.rfft(x)) ** 2
    psd = power * (_one_sided_weights(n) / (fs_hz * n))
    freqs = np.fft.rfftfreq(n, d=1.0 / fs_hz)
    return SpectrumEstimate(freqs_hz=freqs, psd=psd, fs_hz=fs_hz, n_samples=n)


def psd_welch(signal: np.ndarray, fs_hz: float, nperseg: int = 4096) -> SpectrumEstimate:
    """Hann-windowed, 50%-overlap averaged PSD for display purposes."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise ParameterError("signal must be a 1-d array of at least 2 samples")
    nperseg = min(nperseg, len(x))
    freqs, psd = _signal.welch(
        x, fs=fs_hz, window="hann", nperseg=nperseg, noverlap=nperseg // 2
    )
    return SpectrumEstimate(freqs_hz=freqs, psd=psd, fs_hz=fs_hz, n_samples=len(x))


def acf_from_psd(spec: SpectrumEstimate) -> AcfEstimate:
    """Autocorrelation via the inverse transform of the two-sided spectrum.

    Equals the circular autocorrelation of the source block exactly (up to
    rounding), normalized to 1 at lag 0.
    """
    n = spec.n_samples
    power = spec.psd * (spec.fs_hz * n) / _one_sided_weights(n)
    r = np.fft.irfft(power, n=n) / n
    if r[0] <= 0:
        raise DegenerateInputError("zero-power spectrum has no normalizable acf")
    lags = np.arange(n) / spec.fs_hz
    return AcfEstimate(lags_s=lags, acf=r / r[0])


def acf_direct(signal: np.ndarray, max_lag: int, fs_hz: float = 1.0) -> AcfEstimate:
    """Direct-sum biased circular autocorrelation, normalized at lag 0.

    The O(n * max_lag) oracle for :func:`acf_from_psd`.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = len(x)
    if not (0 <= max_lag < n):
        raise ParameterError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    if x.size == 0 or np.var(x) == 0:
        raise DegenerateInputError("constant signal has no normalizable acf")
    r = np.empty(max_lag + 1)
    for m in range(max_lag + 1):
        r[m] = np.dot(x, np.roll(x, -m)) / n
    lags = np.arange(max_lag + 1) / fs_hz
    return AcfEstimate(lags_s=lags, acf=r / r[0])
