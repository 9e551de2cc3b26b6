"""Command-line interface.

Exit codes: 0 when every reported randomness criterion passes, 1 when any
fails, 2 for usage or configuration errors.
"""

from __future__ import annotations

import dataclasses
import sys

import click

from .bits import final_bits, k_lsb_extract, write_bits
from .errors import PhaseRngError
from .pipeline import (
    RunConfig,
    analyze_file,
    emit_curves,
    generate_codes,
    load_config,
    run_pipeline,
    write_report,
)
from .randtests import TestEntry, TestReport, multi_lsb_experiment, sts_subset

EXIT_TESTS_FAILED = 1
EXIT_USAGE = 2


def _load(config_path: str | None, **overrides) -> RunConfig:
    config = load_config(config_path) if config_path else RunConfig()
    updates = {k: v for k, v in overrides.items() if v is not None}
    if updates:
        config = dataclasses.replace(config, **updates)
    config.validate()
    return config


def _fail_usage(err: Exception) -> None:
    click.echo(f"error: {err}", err=True)
    sys.exit(EXIT_USAGE)


@click.group()
def main() -> None:
    """Laser phase-noise random bit pipeline."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="Config file.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Noise seed.")
@click.option("--n-codes", type=int, default=None, help="ADC codes to generate (even).")
@click.option("--out-bits", type=click.Path(), default=None, help="Packed bit output file.")
@click.option("--out-report", type=click.Path(), default=None, help="Report file (text + .json).")
@click.option("--chunk-codes", type=int, default=None, help="Codes per streaming chunk.")
def run(config_path, seed, n_codes, out_bits, out_report, chunk_codes) -> None:
    """Run the full pipeline: simulate, digitize, extract, test."""
    try:
        config = _load(config_path, seed=seed, n_codes=n_codes)
        kwargs = {} if chunk_codes is None else {"chunk_codes": chunk_codes}
        seq, report = run_pipeline(config, **kwargs)
    except PhaseRngError as err:
        _fail_usage(err)
    if out_bits:
        write_bits(seq, out_bits)
        click.echo(f"wrote {seq.bit_len} bits to {out_bits}")
    if out_report:
        write_report(report, out_report)
    else:
        click.echo(report.to_text())
    sys.exit(0 if report.passed else EXIT_TESTS_FAILED)


@main.command()
@click.argument("bits_path", type=click.Path(exists=True))
@click.option("--bit-len", type=int, required=True, help="Exact number of bits in the file.")
@click.option("--out-report", type=click.Path(), default=None, help="Report file (text + .json).")
@click.option("--block-len", type=int, default=128, show_default=True,
              help="Block length for the block frequency test.")
def analyze(bits_path, bit_len, out_report, block_len) -> None:
    """Run the randomness battery on an existing packed-bit file."""
    try:
        report = analyze_file(bits_path, bit_len, report_path=out_report, block_len=block_len)
    except PhaseRngError as err:
        _fail_usage(err)
    if not out_report:
        click.echo(report.to_text())
    sys.exit(0 if report.passed else EXIT_TESTS_FAILED)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="Config file.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Noise seed.")
@click.option("--out-psd", type=click.Path(), default="beat_psd.txt", show_default=True)
@click.option("--out-acf", type=click.Path(), default="beat_acf.txt", show_default=True)
def curves(config_path, seed, out_psd, out_acf) -> None:
    """Write beat-signal PSD and ACF data files for external plotting."""
    try:
        config = _load(config_path, seed=seed)
        emit_curves(config, out_psd, out_acf)
    except PhaseRngError as err:
        _fail_usage(err)
    click.echo(f"wrote {out_psd} and {out_acf}")


@main.command("experiment-klsb")
@click.option("--config", "config_path", type=click.Path(exists=True), help="Config file.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Noise seed.")
@click.option("--n-codes", type=int, default=None, help="ADC codes to generate (even).")
@click.option("--k", type=click.IntRange(2, 8), default=None,
              help="Low bits extracted per code (default from config, else 5).")
@click.option("--out-report", type=click.Path(), default=None, help="Report file (text + .json).")
def experiment_klsb(config_path, seed, n_codes, k, out_report) -> None:
    """Compare within-code correlation of k LSBs with the paired-LSB path.

    Several low bits per code raise the bit rate, but a nonuniform code
    distribution correlates bits of the same code even while the stream
    still passes the frequency test.
    """
    try:
        config = _load(config_path, seed=seed, n_codes=n_codes)
        k = k if k is not None else (config.k_lsb or 5)
        if k < 2:
            raise PhaseRngError(f"the correlation experiment needs k >= 2, got k={k}")
        block = generate_codes(config)
        result = multi_lsb_experiment(block, k)
        freq_k = sts_subset(k_lsb_extract(block, k)).entry("frequency")
        freq_final = sts_subset(final_bits(block)).entry("frequency")
    except PhaseRngError as err:
        _fail_usage(err)

    report = TestReport(sequence_bit_len=k * len(block.codes))
    report.entries.append(TestEntry(
        "klsb_within_group_corr",
        result.within_group_corr,
        None,
        result.within_threshold,
        "pass" if result.within_group_corr < result.within_threshold else "fail",
    ))
    report.entries.append(TestEntry(
        "final_bits_lag1_corr",
        result.baseline_corr,
        None,
        result.baseline_threshold,
        "pass" if result.baseline_corr < result.baseline_threshold else "fail",
    ))
    report.entries.append(dataclasses.replace(freq_k, name="klsb_frequency"))
    report.entries.append(dataclasses.replace(freq_final, name="final_bits_frequency"))

    lines = [
        f"# k-LSB correlation experiment, k={k}, {len(block.codes)} codes",
        report.to_text(),
        f"within/baseline ratio = "
        f"{result.within_group_corr / max(result.baseline_corr, 1e-300):.2f}",
    ]
    text = "\n".join(lines)
    if out_report:
        with open(out_report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        with open(f"{out_report}.json", "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    else:
        click.echo(text)


if __name__ == "__main__":
    main()
