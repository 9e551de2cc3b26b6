"""Phase-diffusing laser field and delayed self-homodyne beat signal.

The laser field is modeled as a unit-amplitude carrier with a Wiener-process
phase: increments between samples are i.i.d. Gaussian with variance
``2*pi*linewidth*dt``, which realizes a Lorentzian line of the given width
and a field autocorrelation ``exp(-|tau|/tau_coh)`` with
``tau_coh = 1/(pi*linewidth)``.  A small Gaussian amplitude jitter around 1
models residual intensity noise.  Interfering the field with a delayed copy
of itself yields the detector beat voltage
``2*E(t)*E(t+tau)*cos(phi(t) - phi(t+tau))``, which the detector band-pass
then shapes.

Randomness is drawn from numpy's PCG64 generator (ziggurat normal sampling).
Draws are organized in blocks of ``SEED_BLOCK`` samples aligned to absolute
sample indices; block ``b`` is seeded with ``SeedSequence((seed, b))`` and
yields first the phase increments, then the amplitude deviations, for its
index range.  This makes any chunked traversal of the stream reproduce the
monolithic trajectory bit for bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal as _signal

from .errors import DiffusionResolutionWarning, ParameterError

# Analog samples per RNG block; part of the reproducibility contract.
SEED_BLOCK = 1 << 20

# Amplitudes are clipped to stay strictly positive.
_AMPLITUDE_FLOOR = 1e-12


@dataclass(frozen=True)
class LaserParams:
    """Laser source parameters.

    Parameters
    ----------
    linewidth_hz : float
        Full width of the Lorentzian optical spectrum, > 0.
    amplitude_noise_rms : float
        RMS of the relative amplitude jitter, >= 0 and < 0.1 (the model
        assumes amplitude noise negligible against phase noise).
    seed : int
        64-bit unsigned seed for the noise streams.
    """

    linewidth_hz: float
    amplitude_noise_rms: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not (self.linewidth_hz > 0) or not math.isfinite(self.linewidth_hz):
            raise ParameterError(
                f"linewidth_hz must be positive and finite, got {self.linewidth_hz}"
            )
        if not (0 <= self.amplitude_noise_rms < 0.1):
            raise ParameterError(
                "amplitude_noise_rms must satisfy 0 <= rms < 0.1, "
                f"got {self.amplitude_noise_rms}"
            )
        if not (0 <= int(self.seed) < 2**64):
            raise ParameterError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    @property
    def coherence_time_s(self) -> float:
        return 1.0 / (math.pi * self.linewidth_hz)


@dataclass(frozen=True)
class InterferometerParams:
    """Delay line of the self-homodyne interferometer."""

    delay_s: float

    def __post_init__(self):
        if not (self.delay_s > 0) or not math.isfinite(self.delay_s):
            raise ParameterError(f"delay_s must be positive, got {self.delay_s}")


@dataclass(frozen=True)
class FilterParams:
    """Detector band-pass corner frequencies."""

    low_cutoff_hz: float
    high_cutoff_hz: float

    def __post_init__(self):
        if self.low_cutoff_hz < 0:
            raise ParameterError(
                f"low_cutoff_hz must be nonnegative, got {self.low_cutoff_hz}"
            )
        if not (self.high_cutoff_hz > 0):
            raise ParameterError(
                f"high_cutoff_hz must be positive, got {self.high_cutoff_hz}"
            )
        if not (self.low_cutoff_hz < self.high_cutoff_hz):
            raise ParameterError(
                "low_cutoff_hz must be below high_cutoff_hz, got "
                f"{self.low_cutoff_hz} >= {self.high_cutoff_hz}"
            )


@dataclass
class FieldTrajectory:
    """Sampled field: phase in radians and relative amplitude (mean 1)."""

    dt_s: float
    phase_rad: np.ndarray
    amplitude: np.ndarray

    def __post_init__(self):
        if self.phase_rad.shape != self.amplitude.shape or self.phase_rad.ndim != 1:
            raise ParameterError("phase and amplitude must be 1-d arrays of equal length")
        if len(self.phase_rad) < 1:
            raise ParameterError("trajectory must contain at least one sample")

    def __len__(self) -> int:
        return len(self.phase_rad)


def coherence_time(params: LaserParams) -> float:
    """Coherence time ``1/(pi * linewidth)`` in seconds."""
    return params.coherence_time_s


def _check_step(params: LaserParams, dt_s: float) -> None:
    if not (dt_s > 0) or not math.isfinite(dt_s):
        raise ParameterError(f"dt_s must be positive and finite, got {dt_s}")
    tau_coh = params.coherence_time_s
    if dt_s > tau_coh:
        raise ParameterError(
            f"dt_s={dt_s:g} s exceeds the coherence time {tau_coh:g} s; "
            "the phase diffusion is unresolved at this step"
        )
    if dt_s > tau_coh / 10:
        warnings.warn(
            f"dt_s={dt_s:g} s resolves the coherence time {tau_coh:g} s "
            "by less than a factor of 10; beat waveforms will be coarse",
            DiffusionResolutionWarning,
            stacklevel=3,
        )


def _block_draws(seed: int, block: int) -> tuple[np.ndarray, np.ndarray]:
    """Standard-normal draws for one RNG block: (increments, amplitude devs)."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, block)))
    z_inc = rng.standard_normal(SEED_BLOCK)
    z_amp = rng.standard_normal(SEED_BLOCK)
    return z_inc, z_amp


def _standard_span(
    seed: int, lo: int, hi: int, cache: dict | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Standard-normal draws for absolute sample indices [lo, hi).

    ``cache`` maps a block index to its draws; sequential consumers pass a
    small cache so the block straddling two spans is not regenerated.
    """
    if hi <= lo:
        empty = np.empty(0)
        return empty, empty
    parts_inc, parts_amp = [], []
    last_block = (hi - 1) // SEED_BLOCK
    for block in range(lo // SEED_BLOCK, last_block + 1):
        if cache is not None and block in cache:
            z_inc, z_amp = cache[block]
        else:
            z_inc, z_amp = _block_draws(seed, block)
        start = block * SEED_BLOCK
        a = max(lo - start, 0)
        b = min(hi - start, SEED_BLOCK)
        parts_inc.append(z_inc[a:b])
        parts_amp.append(z_amp[a:b])
    if cache is not None:
        cache.clear()
        cache[last_block] = (z_inc, z_amp)
    if len(parts_inc) == 1:
        return parts_inc[0], parts_amp[0]
    return np.concatenate(parts_inc), np.concatenate(parts_amp)


class FieldStream:
    """Sequential chunked access to the field trajectory.

    Successive ``take`` calls return consecutive segments; concatenating
    them reproduces :func:`simulate_field` of the same total length exactly.
    """

    def __init__(self, params: LaserParams, dt_s: float):
        _check_step(params, dt_s)
        self.params = params
        self.dt_s = dt_s
        self._sigma_inc = math.sqrt(2.0 * math.pi * params.linewidth_hz * dt_s)
        self._next = 0
        self._phase_carry = 0.0
        self._cache: dict = {}

    def take(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Return the next ``count`` samples as ``(phase_rad, amplitude)``."""
        if count < 1:
            raise ParameterError(f"count must be >= 1, got {count}")
        s = self._next
        lo = max(s - 1, 0)
        z_inc, z_amp = _standard_span(self.params.seed, lo, s + count, self._cache)
        amplitude = 1.0 + self.params.amplitude_noise_rms * z_amp[s - lo :]
        np.maximum(amplitude, _AMPLITUDE_FLOOR, out=amplitude)

        if s == 0:
            # First sample has phase 0 by definition; count-1 increments follow.
            phase = np.empty(count)
            phase[0] = 0.0
            np.cumsum(self._sigma_inc * z_inc[: count - 1], out=phase[1:])
        else:
            # Sample s consumes increment s-1.  Prepending the carried phase
            # to the increments keeps the prefix sums sequentially associated
            # exactly as in a monolithic cumsum, so chunking is bit-exact.
            seq = np.empty(count + 1)
            seq[0] = self._phase_carry
            seq[1:] = self._sigma_inc * z_inc[:count]
            phase = np.cumsum(seq)[1:]

        self._next = s + count
        self._phase_carry = float(phase[-1])
        return phase, amplitude


def simulate_field(params: LaserParams, dt_s: float, n: int) -> FieldTrajectory:
    """Simulate ``n`` samples of the phase-diffusing field.

    Parameters
    ----------
    params : LaserParams
    dt_s : float
        Sample spacing in seconds.  Must not exceed the coherence time; a
        warning is emitted above one tenth of it.
    n : int
        Number of samples, >= 2.

    Returns
    -------
    FieldTrajectory
        ``phase_rad[0] == 0``; increments are i.i.d. Gaussian with variance
        ``2*pi*linewidth*dt``; amplitude is ``1 + N(0, rms)`` clipped
        positive.  Deterministic given ``(params.seed, dt_s, n)``.
    """
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    stream = FieldStream(params, dt_s)
    phase, amplitude = stream.take(n)
    return FieldTrajectory(dt_s=dt_s, phase_rad=phase, amplitude=amplitude)


def beat_voltage(traj: FieldTrajectory, ifm: InterferometerParams) -> np.ndarray:
    """Delayed self-homodyne beat voltage.

    The delay is realized as ``d = round(delay_s / dt_s)`` trajectory steps
    (``d >= 1``); the output has ``len(traj) - d`` samples with
    ``out[i] = 2*A[i]*A[i+d]*cos(phase[i] - phase[i+d])``.
    """
    d = delay_steps(traj.dt_s, ifm)
    n = len(traj)
    if n <= d:
        raise ParameterError(
            f"trajectory of {n} samples is too short for a delay of {d} steps"
        )
    out = traj.phase_rad[: n - d] - traj.phase_rad[d:]
    np.cos(out, out=out)
    out *= traj.amplitude[: n - d]
    out *= traj.amplitude[d:]
    out *= 2.0
    return out


def delay_steps(dt_s: float, ifm: InterferometerParams) -> int:
    """Delay quantized to whole trajectory steps; must round to >= 1."""
    d = round(ifm.delay_s / dt_s)
    if d < 1:
        raise ParameterError(
            f"delay {ifm.delay_s:g} s rounds to zero steps of dt={dt_s:g} s"
        )
    return d


def bandpass_sos(fs_hz: float, fp: FilterParams) -> np.ndarray | None:
    """Second-order-section cascade realizing the detector band-pass.

    A second-order Butterworth high-pass at the low cutoff (omitted when the
    cutoff is 0) plus, when the high cutoff lies below Nyquist, a
    second-order Butterworth low-pass.  Both are bilinear-transform designs.
    Returns ``None`` when no section applies.
    """
    if not (fs_hz > 0):
        raise ParameterError(f"fs_hz must be positive, got {fs_hz}")
    sections = []
    if fp.low_cutoff_hz > 0:
        if fp.low_cutoff_hz >= fs_hz / 2:
            raise ParameterError(
                f"high-pass cutoff {fp.low_cutoff_hz:g} Hz is at or above "
                f"Nyquist ({fs_hz / 2:g} Hz)"
            )
        sections.append(
            _signal.butter(2, fp.low_cutoff_hz, btype="highpass", fs=fs_hz, output="sos")
        )
    if fp.high_cutoff_hz < fs_hz / 2:
        sections.append(
            _signal.butter(2, fp.high_cutoff_hz, btype="lowpass", fs=fs_hz, output="sos")
        )
    if not sections:
        return None
    return np.vstack(sections)


def bandpass_filter(signal: np.ndarray, fs_hz: float, fp: FilterParams) -> np.ndarray:
    """Apply the detector band-pass with zero initial filter state.

    Output length equals input length.  The start-up transient of the
    high-pass settles over roughly ``fs / (2*pi*low_cutoff)`` samples; the
    pipeline discards a fixed warm-up for this reason.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or len(x) < 8:
        raise ParameterError("signal must be a 1-d array of at least 8 samples")
    sos = bandpass_sos(fs_hz, fp)
    if sos is None:
        return x.copy()
    return _signal.sosfilt(sos, x)


def field_autocorrelation(traj: FieldTrajectory, max_lag: int) -> np.ndarray:
    """Ergodic estimate of ``|<exp(i*(phase(t+k*dt) - phase(t)))>|``.

    Returns magnitudes for lags ``0..max_lag``.  For the Wiener phase model
    the expectation decays as ``exp(-lag*dt/tau_coh)``.
    """
    n = len(traj)
    if not (0 < max_lag < n):
        raise ParameterError(f"max_lag must be in [1, {n - 1}], got {max_lag}")
    z = np.exp(1j * traj.phase_rad)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = abs(np.mean(z[k:] * np.conj(z[: n - k])))
    return out
