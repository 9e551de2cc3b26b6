import math

import numpy as np
import pytest

from phaserng.acquisition import AcquisitionParams, SampleBlock, quantize
from phaserng.bits import BitSequence, final_bits, k_lsb_extract, pack_bits
from phaserng.errors import DataError, DegenerateInputError, ParameterError
from phaserng.randtests import (
    TestEntry,
    TestReport,
    _block_frequency,
    _cusum_one_direction,
    _frequency,
    _longest_one_run,
    _runs,
    bias,
    binary_entropy,
    ent_suite,
    multi_lsb_experiment,
    serial_correlation,
    sts_subset,
)

# first 100 binary digits of e, the worked example of the cited test suite
E100 = (
    "11001001000011111101101010100010001000010110100011"
    "00001000110100110001001100011001100010100010111000"
)


def seq(bit_string):
    return pack_bits(np.array([int(c) for c in bit_string], dtype=np.uint8))


def bits_of(arr):
    return pack_bits(np.asarray(arr, dtype=np.uint8))


def random_bits(n, seed):
    return pack_bits(np.random.default_rng(seed).integers(0, 2, n, dtype=np.uint8))


class TestBias:
    def test_all_zeros_fails(self):
        p1, b, thr = bias(bits_of([0] * 100))
        assert (p1, b, thr) == (0.0, 0.5, 0.15)
        assert b > thr

    def test_alternating_has_zero_bias(self):
        p1, b, thr = bias(bits_of([0, 1] * 500))
        assert b == 0.0
        assert thr == 1.5 / math.sqrt(1000)

    def test_ideal_run_meets_criterion(self):
        s = random_bits(10_000_000, seed=5)
        p1, b, thr = bias(s)
        assert b < thr
        assert p1 == pytest.approx(0.5, abs=5e-4)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            bias(bits_of([]))

    def test_exceedance_rate_is_three_sigma(self):
        # ideal source: B >= 1.5/sqrt(N) in at most 0.3% of runs (+3 sigma)
        n, runs = 10_000, 1000
        rng = np.random.default_rng(77)
        hits = 0
        for _ in range(runs):
            p1 = rng.integers(0, 2, n).mean()
            hits += abs(p1 - 0.5) >= 1.5 / math.sqrt(n)
        assert hits / runs <= 0.003 + 3 * math.sqrt(0.003 * 0.997 / runs)


class TestSerialCorrelation:
    def test_alternating_is_minus_one(self):
        a1, thr = serial_correlation(bits_of([0, 1] * 500), 1)
        assert a1 == pytest.approx(-1.0, abs=1e-12)
        assert thr == 3.0 / math.sqrt(1000)

    def test_constant_rejected(self):
        with pytest.raises(DegenerateInputError):
            serial_correlation(bits_of([1] * 100), 1)

    def test_ideal_run_meets_criterion(self):
        s = random_bits(1_000_000, seed=6)
        a1, thr = serial_correlation(s, 1)
        assert abs(a1) < thr

    def test_lag_validation(self):
        with pytest.raises(ParameterError):
            serial_correlation(bits_of([0, 1, 0, 1]), 0)
        with pytest.raises(DataError):
            serial_correlation(bits_of([0, 1, 0]), 2)

    def test_period_two_at_lag_two(self):
        a2, _ = serial_correlation(bits_of([0, 1] * 500), 2)
        assert a2 == pytest.approx(1.0, abs=1e-12)


class TestEntSuite:
    def test_all_zeros(self):
        report = ent_suite(bits_of([0] * 100))
        assert report.entry("entropy_per_bit").statistic == 0.0
        assert report.entry("arithmetic_mean").statistic == 0.0
        assert report.entry("entropy_per_bit").verdict == "fail"
        assert report.entry("serial_correlation").verdict == "skip"

    def test_exact_half_ones(self):
        rng = np.random.default_rng(8)
        arr = np.array([0, 1] * 500, dtype=np.uint8)
        rng.shuffle(arr)
        report = ent_suite(bits_of(arr))
        assert report.entry("entropy_per_bit").statistic == 1.0
        assert report.entry("arithmetic_mean").statistic == 0.5

    def test_entropy_permutation_invariant(self):
        rng = np.random.default_rng(9)
        arr = (rng.random(2000) < 0.3).astype(np.uint8)
        h1 = ent_suite(bits_of(arr)).entry("entropy_per_bit").statistic
        rng.shuffle(arr)
        h2 = ent_suite(bits_of(arr)).entry("entropy_per_bit").statistic
        assert h1 == h2 == pytest.approx(binary_entropy(arr.mean()), abs=1e-12)

    def test_monte_carlo_pi_single_point(self):
        # one 6-byte point at (0.25, 0.25): inside, so pi_hat = 4.0
        data = np.array([0x40, 0, 0, 0x40, 0, 0], dtype=np.uint8)
        report = ent_suite(BitSequence(data=data, bit_len=48))
        assert report.entry("monte_carlo_pi").statistic == 4.0

    def test_ideal_sequence_passes_everything(self):
        report = ent_suite(random_bits(1_000_000, seed=10))
        assert report.passed
        assert {e.verdict for e in report.entries} == {"pass"}

    def test_too_short_rejected(self):
        with pytest.raises(DataError):
            ent_suite(bits_of([0, 1] * 20))

    def test_chi_square_matches_reported_convention(self):
        # chi-square of 0.53 on two bins is exceeded 46.6% of the time
        from scipy.special import gammaincc

        assert gammaincc(0.5, 0.53 / 2) == pytest.approx(0.4666, abs=2e-3)


class TestStsKnownVectors:
    """Worked examples from the cited statistical test suite."""

    def test_frequency_short_example(self):
        b = np.array([int(c) for c in "1011010101"], dtype=np.uint8)
        assert _frequency(b)[1] == pytest.approx(0.527089, abs=1e-6)

    def test_frequency_e100(self):
        b = np.array([int(c) for c in E100], dtype=np.uint8)
        assert _frequency(b)[1] == pytest.approx(0.109599, abs=1e-6)

    def test_block_frequency_short_example(self):
        b = np.array([int(c) for c in "0110011010"], dtype=np.uint8)
        chi2, p = _block_frequency(b, 3)
        assert chi2 == pytest.approx(1.0, abs=1e-12)
        assert p == pytest.approx(0.801252, abs=1e-6)

    def test_runs_short_example(self):
        b = np.array([int(c) for c in "1001101011"], dtype=np.uint8)
        v, p = _runs(b)
        assert v == 7
        assert p == pytest.approx(0.147232, abs=1e-6)

    def test_runs_e100(self):
        b = np.array([int(c) for c in E100], dtype=np.uint8)
        assert _runs(b)[1] == pytest.approx(0.500798, abs=1e-6)

    def test_cusum_short_example(self):
        b = np.array([int(c) for c in "1011010111"], dtype=np.uint8)
        z, p = _cusum_one_direction(b)
        assert z == 4
        assert p == pytest.approx(0.4116588, abs=1e-6)

    def test_cusum_e100_both_directions(self):
        b = np.array([int(c) for c in E100], dtype=np.uint8)
        assert _cusum_one_direction(b)[1] == pytest.approx(0.219194, abs=1e-6)
        assert _cusum_one_direction(b[::-1])[1] == pytest.approx(0.114866, abs=1e-6)


class TestStsSubset:
    def test_all_zeros_frequency_rejected(self):
        report = sts_subset(bits_of([0] * 100))
        freq = report.entry("frequency")
        assert freq.p_value < 1e-10
        assert freq.verdict == "fail"

    def test_balanced_frequency_is_one_regardless_of_order(self):
        for arr in ([0, 1] * 50, [0] * 50 + [1] * 50):
            report = sts_subset(bits_of(arr))
            assert report.entry("frequency").p_value == 1.0

    def test_runs_gated_on_frequency_pretest(self):
        arr = [0] * 90 + [1] * 10
        report = sts_subset(bits_of(arr))
        assert report.entry("runs").p_value == 0.0

    def test_short_sequence_skips(self):
        report = sts_subset(bits_of([0, 1] * 30))
        assert all(e.verdict == "skip" for e in report.entries)

    def test_mid_length_skips_only_block_frequency(self):
        report = sts_subset(random_bits(200, seed=1))
        verdicts = {e.name: e.verdict for e in report.entries}
        assert verdicts["block_frequency"] == "skip"
        assert verdicts["frequency"] != "skip"
        assert verdicts["longest_run"] != "skip"

    def test_ideal_megabit_passes_all_five(self):
        report = sts_subset(random_bits(1_000_000, seed=12))
        assert len(report.entries) == 5
        assert {e.verdict for e in report.entries} == {"pass"}

    def test_p_values_in_range(self):
        report = sts_subset(random_bits(10_000, seed=13))
        for e in report.entries:
            if e.p_value is not None:
                assert 0.0 <= e.p_value <= 1.0

    def test_longest_one_run_helper(self):
        assert _longest_one_run(np.array([0, 0, 0], dtype=np.uint8)) == 0
        assert _longest_one_run(np.array([1, 1, 0, 1], dtype=np.uint8)) == 2
        assert _longest_one_run(np.ones(8, dtype=np.uint8)) == 8

    def test_p_value_uniformity_under_null(self):
        # frequency p-values of an ideal source should not pile up near 0
        ps = [
            sts_subset(random_bits(2000, seed=100 + i)).entry("frequency").p_value
            for i in range(200)
        ]
        assert 0.35 < np.mean(ps) < 0.65
        assert min(ps) < 0.2 and max(ps) > 0.8


class TestMultiLsb:
    def test_two_bit_toy_distribution_exact(self):
        # P(00)=0.4, P(01)=0.1, P(10)=0.1, P(11)=0.4: cov = 0.15, var = 0.25,
        # so the single bit pair has correlation 0.15/0.25 = 0.6 exactly
        codes = np.concatenate([
            np.zeros(4000), np.full(1000, 1), np.full(1000, 2), np.full(4000, 3)
        ]).astype(np.uint8)
        np.random.default_rng(0).shuffle(codes)
        res = multi_lsb_experiment(SampleBlock(codes, 1e6), 2)
        assert res.within_group_corr == pytest.approx(0.6, abs=1e-12)

    def test_k_out_of_range(self):
        block = SampleBlock(np.zeros(20000, dtype=np.uint8), 1e6)
        with pytest.raises(ParameterError):
            multi_lsb_experiment(block, 1)
        with pytest.raises(ParameterError):
            multi_lsb_experiment(block, 9)

    def test_short_block_rejected(self):
        block = SampleBlock(np.arange(100, dtype=np.uint8), 1e6)
        with pytest.raises(DataError):
            multi_lsb_experiment(block, 5)

    def test_uniform_codes_uncorrelated(self):
        rng = np.random.default_rng(14)
        block = SampleBlock(rng.integers(0, 256, 200_000, dtype=np.uint8), 1e6)
        res = multi_lsb_experiment(block, 5)
        assert res.within_group_corr < res.within_threshold

    def test_skewed_gaussian_source_correlated(self):
        rng = np.random.default_rng(15)
        v = rng.normal(0.0, 1.0 / 16.0, 200_000)
        block = quantize(v, AcquisitionParams(sample_rate_hz=1e6, full_scale_v=1.0))
        res = multi_lsb_experiment(block, 5)
        assert res.within_group_corr > res.within_threshold
        assert res.within_group_corr > res.baseline_corr


class TestReportType:
    def test_verdict_validation(self):
        with pytest.raises(ParameterError):
            TestEntry("x", 1.0, None, None, "maybe")

    def test_p_value_validation(self):
        with pytest.raises(ParameterError):
            TestEntry("x", 1.0, 1.5, None, "pass")

    def test_text_and_json_roundtrip(self):
        import json

        report = sts_subset(random_bits(1000, seed=16))
        text = report.to_text()
        assert len(text.splitlines()) == 6
        data = json.loads(report.to_json())
        assert data["sequence_bit_len"] == 1000
        assert len(data["entries"]) == 5
