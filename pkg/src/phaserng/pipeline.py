"""End-to-end orchestration: simulate, acquire, extract, analyze, report.

The analog chain (field, beat, band-pass) streams through fixed-size analog
blocks with explicit carried state (phase, delay-line tail, filter state,
decimation offset), so arbitrarily long runs use bounded memory and any
chunking reproduces the monolithic result bit for bit.  Codes are paired
within even-sized chunks, so no subtraction pair ever straddles a chunk
boundary.
"""

from __future__ import annotations

import json
import math
import os
import time
import warnings
from dataclasses import asdict, dataclass, replace
from typing import Iterator

import numpy as np
from scipy import signal as _signal

from .acquisition import (
    AcquisitionParams,
    SampleBlock,
    calibrate_full_scale,
    decimate,
    quantize,
)
from .bits import BitSequence, final_bits, pack_bits, unpack_bits, write_bits
from .errors import (
    DelayMarginWarning,
    ParameterError,
    PhaseRngError,
    SamplingMarginWarning,
)
from .laser import (
    FieldStream,
    FilterParams,
    InterferometerParams,
    LaserParams,
    bandpass_sos,
    delay_steps,
    simulate_field,
)
from .randtests import TestEntry, TestReport, bias, ent_suite, serial_correlation, sts_subset
from .spectral import acf_from_psd, psd_periodogram, psd_welch

CODES_PER_CHUNK = 1 << 20  # even, so pairing never straddles a chunk
ANALOG_BLOCK = 1 << 22  # analog samples processed per inner block
WARMUP_SAMPLES = 1000  # filtered samples discarded while the band-pass settles
CALIBRATION_CODES = 100_000
CORRELATION_LAGS = range(1, 9)
CURVE_SAMPLES = 1 << 21


@dataclass(frozen=True)
class RunConfig:
    """Flat pipeline configuration; defaults reproduce the modeled setup."""

    linewidth_hz: float = 200e6
    amplitude_noise_rms: float = 0.01
    seed: int = 0
    delay_s: float = 10e-9
    low_cutoff_hz: float = 50e3
    high_cutoff_hz: float = 1e9
    sample_rate_hz: float = 40e6
    full_scale_v: float | None = None
    analog_rate_hz: float = 800e6
    n_codes: int = 2_000_000
    k_lsb: int | None = None

    @property
    def laser_params(self) -> LaserParams:
        return LaserParams(
            linewidth_hz=self.linewidth_hz,
            amplitude_noise_rms=self.amplitude_noise_rms,
            seed=self.seed,
        )

    @property
    def interferometer_params(self) -> InterferometerParams:
        return InterferometerParams(delay_s=self.delay_s)

    @property
    def filter_params(self) -> FilterParams:
        return FilterParams(
            low_cutoff_hz=self.low_cutoff_hz, high_cutoff_hz=self.high_cutoff_hz
        )

    def validate(self) -> None:
        """Check cross-field invariants; warn on weak statistical margins."""
        laser = self.laser_params  # triggers its own field validation
        self.interferometer_params
        self.filter_params
        if self.n_codes < 2:
            raise ParameterError(f"n_codes must be >= 2, got {self.n_codes}")
        if self.n_codes % 2:
            raise ParameterError(
                f"n_codes must be even so every code can be paired, got {self.n_codes}"
            )
        if self.full_scale_v is not None and not (self.full_scale_v > 0):
            raise ParameterError(f"full_scale_v must be positive, got {self.full_scale_v}")
        if self.k_lsb is not None and not 1 <= self.k_lsb <= 8:
            raise ParameterError(f"k_lsb must be in 1..8, got {self.k_lsb}")
        if not (self.analog_rate_hz > 0) or not (self.sample_rate_hz > 0):
            raise ParameterError("analog_rate_hz and sample_rate_hz must be positive")
        ratio = self.analog_rate_hz / self.sample_rate_hz
        if abs(ratio - round(ratio)) >= 1e-9 or ratio < 1:
            raise ParameterError(
                "analog_rate_hz must be an integer multiple of sample_rate_hz, "
                f"got ratio {ratio!r}"
            )
        dt = 1.0 / self.analog_rate_hz
        if round(self.delay_s / dt) < 1:
            raise ParameterError(
                f"delay_s={self.delay_s:g} s is below one analog step ({dt:g} s)"
            )
        tau_coh = laser.coherence_time_s
        if dt > tau_coh:
            raise ParameterError(
                f"analog step {dt:g} s exceeds the coherence time {tau_coh:g} s"
            )
        interval = 1.0 / self.sample_rate_hz
        if interval < 5 * (self.delay_s + tau_coh):
            warnings.warn(
                f"sampling interval {interval:g} s is below 5x(delay + coherence "
                f"time) = {5 * (self.delay_s + tau_coh):g} s; successive samples "
                "keep little statistical margin (check the acf criterion)",
                SamplingMarginWarning,
                stacklevel=2,
            )
        if self.delay_s < 5 * tau_coh:
            warnings.warn(
                f"delay {self.delay_s:g} s is below 5x the coherence time "
                f"{tau_coh:g} s; the interferometer arms stay partially coherent",
                DelayMarginWarning,
                stacklevel=2,
            )

    def to_dict(self) -> dict:
        return asdict(self)


CONFIG_INT_KEYS = {"seed", "n_codes", "k_lsb"}
CONFIG_KEYS = tuple(RunConfig.__dataclass_fields__)


def load_config(path: str | os.PathLike) -> RunConfig:
    """Parse a flat ``key = value`` config file and validate it.

    Unknown keys are rejected with the list of valid keys; missing keys
    take the defaults.  ``#`` starts a comment.
    """
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not eq or not key or not value:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            if key not in CONFIG_KEYS:
                raise ParameterError(
                    f"{path}:{lineno}: unknown key {key!r}; valid keys: "
                    + ", ".join(CONFIG_KEYS)
                )
            try:
                values[key] = int(float(value)) if key in CONFIG_INT_KEYS else float(value)
            except ValueError as err:
                raise ParameterError(f"{path}:{lineno}: bad value for {key}: {value!r}") from err
    config = RunConfig(**values)
    config.validate()
    return config


def _stream_voltages(config: RunConfig, n_voltages: int) -> Iterator[np.ndarray]:
    """Yield the first ``n_voltages`` decimated beat voltages in blocks."""
    dt = 1.0 / config.analog_rate_hz
    d = delay_steps(dt, config.interferometer_params)
    m = round(config.analog_rate_hz / config.sample_rate_hz)
    sos = bandpass_sos(config.analog_rate_hz, config.filter_params)
    zi = np.zeros((sos.shape[0], 2)) if sos is not None else None
    stream = FieldStream(config.laser_params, dt)

    total_filtered = WARMUP_SAMPLES + (n_voltages - 1) * m + 1
    total_traj = total_filtered + d
    produced = 0
    tail_phase = tail_amp = None
    filtered_count = 0
    next_keep = WARMUP_SAMPLES

    while produced < total_traj:
        n_new = min(ANALOG_BLOCK, total_traj - produced)
        phase, amp = stream.take(n_new)
        produced += n_new
        if tail_phase is not None:
            phase = np.concatenate([tail_phase, phase])
            amp = np.concatenate([tail_amp, amp])
        if len(phase) <= d:
            tail_phase, tail_amp = phase, amp
            continue
        tail_phase, tail_amp = phase[-d:].copy(), amp[-d:].copy()

        v = phase[:-d] - phase[d:]
        np.cos(v, out=v)
        v *= amp[:-d]
        v *= amp[d:]
        v *= 2.0
        if sos is not None:
            v, zi = _signal.sosfilt(sos, v, zi=zi)

        start = filtered_count
        filtered_count += len(v)
        offset = next_keep - start
        if offset < len(v):
            picks = v[offset::m]
            next_keep += m * len(picks)
            yield picks


def _calibrated_acquisition(config: RunConfig) -> AcquisitionParams:
    """Acquisition params, deriving full scale from a calibration block."""
    if config.full_scale_v is not None:
        return AcquisitionParams(
            sample_rate_hz=config.sample_rate_hz, full_scale_v=config.full_scale_v
        )
    k = min(CALIBRATION_CODES, config.n_codes)
    parts, got = [], 0
    for block in _stream_voltages(config, k):
        parts.append(block)
        got += len(block)
        if got >= k:
            break
    sample = np.concatenate(parts)[:k]
    return AcquisitionParams(
        sample_rate_hz=config.sample_rate_hz, full_scale_v=calibrate_full_scale(sample)
    )


def analyze_bits(seq: BitSequence, block_len: int = 128) -> TestReport:
    """The full battery: bias, lag 1..8 correlation, ENT metrics, STS subset."""
    report = TestReport(sequence_bit_len=seq.bit_len)

    p1, b_stat, thr = bias(seq)
    report.entries.append(TestEntry(
        "bias", b_stat, None, thr, "pass" if b_stat < thr else "fail"
    ))

    for lag in CORRELATION_LAGS:
        name = f"serial_correlation_lag{lag}"
        try:
            a_k, thr = serial_correlation(seq, lag)
            report.entries.append(TestEntry(
                name, a_k, None, thr, "pass" if abs(a_k) < thr else "fail"
            ))
        except PhaseRngError:
            report.entries.append(TestEntry(name, float("nan"), None, None, "skip"))

    try:
        for entry in ent_suite(seq).entries:
            report.entries.append(replace(entry, name=f"ent_{entry.name}"))
    except PhaseRngError:
        for name in ("entropy_per_bit", "chi_square", "arithmetic_mean",
                     "monte_carlo_pi", "serial_correlation"):
            report.entries.append(TestEntry(f"ent_{name}", float("nan"), None, None, "skip"))

    for entry in sts_subset(seq, block_len=block_len).entries:
        report.entries.append(replace(entry, name=f"sts_{entry.name}"))
    return report


@dataclass
class RunReport:
    """Config echo, test battery outcome, and throughput bookkeeping."""

    config: dict
    tests: TestReport
    elapsed_s: float
    codes_per_second: float | None = None
    bits_per_second: float | None = None

    @property
    def bit_len(self) -> int:
        return self.tests.sequence_bit_len

    @property
    def passed(self) -> bool:
        return self.tests.passed

    def to_text(self) -> str:
        lines = ["# run configuration"]
        lines += [f"{k} = {v}" for k, v in self.config.items()]
        lines.append("")
        lines.append("# randomness tests")
        lines.append(self.tests.to_text())
        lines.append("")
        lines.append("# timing")
        lines.append(f"elapsed_s = {self.elapsed_s:.3f}")
        if self.codes_per_second is not None:
            lines.append(f"codes_per_second = {self.codes_per_second:.0f}")
        if self.bits_per_second is not None:
            lines.append(f"bits_per_second = {self.bits_per_second:.0f}")
        lines.append(f"overall = {'pass' if self.passed else 'fail'}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "tests": self.tests.to_dict(),
            "elapsed_s": self.elapsed_s,
            "codes_per_second": self.codes_per_second,
            "bits_per_second": self.bits_per_second,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def run_pipeline(
    config: RunConfig, chunk_codes: int = CODES_PER_CHUNK
) -> tuple[BitSequence, RunReport]:
    """Simulate, digitize, extract, and test ``config.n_codes`` codes.

    Streams in even-sized code chunks with bounded memory; the analog trace
    is never materialized whole.  Deterministic given the config.
    """
    config.validate()
    if chunk_codes < 2 or chunk_codes % 2:
        raise ParameterError(f"chunk_codes must be even and >= 2, got {chunk_codes}")

    t0 = time.perf_counter()
    try:
        acq = _calibrated_acquisition(config)
    except PhaseRngError as err:
        raise type(err)(f"calibration stage: {err}") from err

    bit_parts: list[np.ndarray] = []
    pending: list[np.ndarray] = []
    pending_len = 0

    def flush(volt_chunk: np.ndarray) -> None:
        block = quantize(volt_chunk, acq)
        bit_parts.append(unpack_bits(final_bits(block)))

    try:
        for volts in _stream_voltages(config, config.n_codes):
            pending.append(volts)
            pending_len += len(volts)
            while pending_len >= chunk_codes:
                merged = np.concatenate(pending)
                flush(merged[:chunk_codes])
                rest = merged[chunk_codes:]
                pending = [rest] if len(rest) else []
                pending_len = len(rest)
        if pending_len:
            flush(np.concatenate(pending))
    except PhaseRngError as err:
        raise type(err)(f"generation stage: {err}") from err

    seq = pack_bits(np.concatenate(bit_parts) if bit_parts else np.empty(0, dtype=np.uint8))
    elapsed_gen = time.perf_counter() - t0

    tests = analyze_bits(seq)
    report = RunReport(
        config=config.to_dict(),
        tests=tests,
        elapsed_s=time.perf_counter() - t0,
        codes_per_second=config.n_codes / elapsed_gen,
        bits_per_second=seq.bit_len / elapsed_gen,
    )
    return seq, report


def generate_codes(config: RunConfig) -> SampleBlock:
    """The quantized code stream itself, for code-level experiments."""
    config.validate()
    acq = _calibrated_acquisition(config)
    volts = np.concatenate(list(_stream_voltages(config, config.n_codes)))
    return quantize(volts, acq)


def analyze_file(
    bits_path: str | os.PathLike,
    bit_len: int,
    report_path: str | os.PathLike | None = None,
    block_len: int = 128,
) -> RunReport:
    """Run the analysis battery on an existing packed-bit file."""
    from .bits import read_bits

    t0 = time.perf_counter()
    seq = read_bits(bits_path, bit_len)
    tests = analyze_bits(seq, block_len=block_len)
    report = RunReport(
        config={"bits_path": os.fspath(bits_path), "bit_len": bit_len},
        tests=tests,
        elapsed_s=time.perf_counter() - t0,
    )
    if report_path is not None:
        write_report(report, report_path)
    return report


def write_report(report: RunReport, path: str | os.PathLike) -> None:
    """Write the line-oriented text report plus a JSON sidecar."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(report.to_text() + "\n")
    with open(f"{os.fspath(path)}.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")


def emit_curves(
    config: RunConfig,
    psd_path: str | os.PathLike,
    acf_path: str | os.PathLike,
    n_samples: int = CURVE_SAMPLES,
) -> None:
    """Write beat-signal PSD and ACF as two-column text files.

    The PSD uses the averaged display estimator; the ACF uses the exact
    transform pair of the unwindowed periodogram.
    """
    config.validate()
    dt = 1.0 / config.analog_rate_hz
    d = delay_steps(dt, config.interferometer_params)
    traj = simulate_field(config.laser_params, dt, n_samples + d)
    from .laser import bandpass_filter, beat_voltage

    v = bandpass_filter(
        beat_voltage(traj, config.interferometer_params),
        config.analog_rate_hz,
        config.filter_params,
    )[WARMUP_SAMPLES:]

    spec = psd_welch(v, config.analog_rate_hz)
    np.savetxt(
        psd_path,
        np.column_stack([spec.freqs_hz, spec.psd]),
        header="frequency_hz psd",
    )

    acf = acf_from_psd(psd_periodogram(v, config.analog_rate_hz))
    max_idx = min(len(v) // 2, int(round(200e-9 * config.analog_rate_hz)) + 1)
    np.savetxt(
        acf_path,
        np.column_stack([acf.lags_s[:max_idx], acf.acf[:max_idx]]),
        header="lag_s acf",
    )
