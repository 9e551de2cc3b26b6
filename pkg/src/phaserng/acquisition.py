"""ADC front end: decimation, 8-bit quantization, and raw code files.

The code file format is a headerless byte stream, one unsigned byte per
code.  The sample rate travels in a sidecar text file ``<path>.meta`` with
a single ``sample_rate_hz = <value>`` line.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterError

ADC_BITS = 8
ADC_LEVELS = 1 << ADC_BITS


@dataclass(frozen=True)
class AcquisitionParams:
    """ADC settings: rate and symmetric full-scale range (+-full_scale_v)."""

    sample_rate_hz: float
    full_scale_v: float
    adc_bits: int = ADC_BITS

    def __post_init__(self):
        if not (self.sample_rate_hz > 0):
            raise ParameterError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not (self.full_scale_v > 0):
            raise ParameterError(f"full_scale_v must be positive, got {self.full_scale_v}")
        if self.adc_bits != ADC_BITS:
            raise ParameterError(f"adc_bits is fixed at {ADC_BITS}, got {self.adc_bits}")


@dataclass
class SampleBlock:
    """Quantized ADC codes (uint8) with their sample rate."""

    codes: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        codes = np.asarray(self.codes)
        if codes.ndim != 1:
            raise ParameterError("codes must be a 1-d array")
        if codes.dtype != np.uint8:
            if codes.size and (codes.min() < 0 or codes.max() > 255):
                raise ParameterError("codes must lie in [0, 255]")
            codes = codes.astype(np.uint8)
        self.codes = codes
        if not (self.sample_rate_hz > 0):
            raise ParameterError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    def __len__(self) -> int:
        return len(self.codes)


def decimate(signal: np.ndarray, fs_in_hz: float, fs_out_hz: float) -> np.ndarray:
    """Keep every M-th sample, M = fs_in/fs_out (must be integer).

    Plain point sampling, no anti-alias filter: the band-pass upstream
    already shapes the spectrum, and the ADC in the modeled setup samples
    the detector output directly.
    """
    if not (fs_out_hz > 0) or not (fs_in_hz > 0):
        raise ParameterError("sample rates must be positive")
    if fs_in_hz < fs_out_hz:
        raise ParameterError(
            f"cannot decimate upward: fs_in={fs_in_hz:g} < fs_out={fs_out_hz:g}"
        )
    ratio = fs_in_hz / fs_out_hz
    m = round(ratio)
    if abs(ratio - m) >= 1e-9:
        raise ParameterError(
            f"fs_in/fs_out = {ratio!r} is not an integer decimation factor"
        )
    x = np.asarray(signal)
    return x[:: m][: len(x) // m]


def quantize(signal: np.ndarray, params: AcquisitionParams) -> SampleBlock:
    """Mid-rise 256-bin quantization over [-FS, +FS].

    ``code = clamp(floor((v + FS) / (2 FS) * 256), 0, 255)``: -FS maps to
    code 0, 0 V to code 128, and anything at or beyond +FS clips to 255.
    """
    v = np.asarray(signal, dtype=np.float64)
    nan = np.isnan(v)
    if nan.any():
        raise DataError(f"NaN sample at index {int(np.argmax(nan))}")
    fs = params.full_scale_v
    scaled = np.floor((v + fs) * (ADC_LEVELS / (2 * fs)))
    codes = np.clip(scaled, 0, ADC_LEVELS - 1).astype(np.uint8)
    return SampleBlock(codes=codes, sample_rate_hz=params.sample_rate_hz)


def dequantize_midpoint(block: SampleBlock, params: AcquisitionParams) -> np.ndarray:
    """Bin midpoints of the codes, the inverse of :func:`quantize` up to one LSB."""
    fs = params.full_scale_v
    step = 2 * fs / ADC_LEVELS
    return -fs + (block.codes.astype(np.float64) + 0.5) * step


def calibrate_full_scale(signal: np.ndarray) -> float:
    """Full scale as 3x the sample standard deviation of a calibration block.

    Uses most of the code range while clipping well under a percent for
    near-Gaussian inputs.
    """
    v = np.asarray(signal, dtype=np.float64)
    if v.size < 2:
        raise ParameterError("calibration block must contain at least 2 samples")
    sd = float(v.std())
    if sd == 0.0:
        raise ParameterError("calibration block has zero variance")
    return 3.0 * sd


def write_codes(block: SampleBlock, path: str | os.PathLike) -> None:
    """Write codes as raw bytes plus a ``<path>.meta`` sidecar with the rate."""
    block.codes.tofile(path)
    with open(f"{os.fspath(path)}.meta", "w", encoding="ascii") as fh:
        fh.write(f"sample_rate_hz = {block.sample_rate_hz!r}\n")


def read_codes(path: str | os.PathLike, sample_rate_hz: float | None = None) -> SampleBlock:
    """Read a raw code file; the rate comes from the sidecar unless given."""
    codes = np.fromfile(path, dtype=np.uint8)
    meta = f"{os.fspath(path)}.meta"
    if sample_rate_hz is None and os.path.exists(meta):
        with open(meta, encoding="ascii") as fh:
            for line in fh:
                key, _, value = line.partition("=")
                if key.strip() == "sample_rate_hz":
                    sample_rate_hz = float(value)
    if sample_rate_hz is None:
        raise ParameterError(
            f"no sample rate: pass sample_rate_hz or provide the sidecar {meta}"
        )
    return SampleBlock(codes=codes, sample_rate_hz=sample_rate_hz)
