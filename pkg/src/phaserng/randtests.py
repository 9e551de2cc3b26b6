"""Randomness metrics and test batteries for bit sequences.

Acceptance limits follow the 3-sigma convention: a sequence of N bits is
expected to show statistical bias below ``1.5/sqrt(N)`` and serial
correlation magnitude below ``3/sqrt(N)`` with 99.7% probability.  The
battery additionally provides ENT-style summary metrics and the five-test
subset of NIST SP 800-22 listed below, with the standard's statistics and
p-value formulas:

==================  ======================================================
frequency           erfc of the normalized one-count excess
block_frequency     chi^2 over ``block_len``-bit blocks (default 128)
cumulative_sums     range of the +-1 random walk, both directions,
                    worst p reported
runs                total sign alternations, gated on the frequency
                    pre-test ``|p1 - 1/2| < 2/sqrt(N)``
longest_run         chi^2 of longest one-run categories; block size 8 /
                    128 / 10^4 for N >= 128 / 6272 / 750000
==================  ======================================================
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc
from scipy.stats import norm as _norm

from .acquisition import SampleBlock
from .bits import BitSequence, final_bits, unpack_bits
from .errors import DataError, DegenerateInputError, ParameterError

VERDICTS = ("pass", "fail", "skip")


@dataclass
class TestEntry:
    """One test outcome: statistic plus a p-value or a threshold."""

    __test__ = False  # keep pytest from collecting this as a test class

    name: str
    statistic: float
    p_value: float | None
    threshold: float | None
    verdict: str

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ParameterError(f"verdict must be one of {VERDICTS}, got {self.verdict}")
        if self.p_value is not None and not (0.0 <= self.p_value <= 1.0):
            raise ParameterError(f"p-value out of [0, 1]: {self.p_value}")


@dataclass
class TestReport:
    """Named test entries for one bit sequence."""

    __test__ = False  # keep pytest from collecting this as a test class

    entries: list[TestEntry] = field(default_factory=list)
    sequence_bit_len: int = 0

    @property
    def passed(self) -> bool:
        return all(e.verdict != "fail" for e in self.entries)

    def entry(self, name: str) -> TestEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"# {self.sequence_bit_len} bits"]
        for e in self.entries:
            mid = f"p={e.p_value:.6f}" if e.p_value is not None else (
                f"thr={e.threshold:.6g}" if e.threshold is not None else "-"
            )
            lines.append(f"{e.name:<22} statistic={e.statistic:< 15.8g} {mid:<16} {e.verdict}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "sequence_bit_len": self.sequence_bit_len,
            "entries": [
                {
                    "name": e.name,
                    "statistic": None if math.isnan(e.statistic) else e.statistic,
                    "p_value": e.p_value,
                    "threshold": e.threshold,
                    "verdict": e.verdict,
                }
                for e in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def bias(bits: BitSequence) -> tuple[float, float, float]:
    """Ones fraction, its deviation from 1/2, and the 3-sigma limit.

    Returns ``(p1, B, threshold)`` with ``B = |p1 - 1/2|`` and
    ``threshold = 1.5/sqrt(N)``.
    """
    n = bits.bit_len
    if n < 1:
        raise DataError("bias is undefined for an empty sequence")
    p1 = int(unpack_bits(bits).sum()) / n
    return p1, abs(p1 - 0.5), 1.5 / math.sqrt(n)


def serial_correlation(bits: BitSequence, lag: int) -> tuple[float, float]:
    """Sample Pearson correlation between the sequence and its lagged self.

    Returns ``(a_k, threshold)`` with ``threshold = 3/sqrt(N)``.
    """
    if lag < 1:
        raise ParameterError(f"lag must be >= 1, got {lag}")
    n = bits.bit_len
    if n <= lag + 1:
        raise DataError(f"need more than lag+1 = {lag + 1} bits, got {n}")
    b = unpack_bits(bits)
    x, y = b[:-lag], b[lag:]
    m = len(x)
    sx, sy = int(x.sum()), int(y.sum())
    sxy = int((x & y).sum())
    vx = sx - sx * sx / m
    vy = sy - sy * sy / m
    if vx <= 0 or vy <= 0:
        raise DegenerateInputError("constant (sub)sequence has undefined correlation")
    a_k = (sxy - sx * sy / m) / math.sqrt(vx * vy)
    return a_k, 3.0 / math.sqrt(n)


def binary_entropy(p: float) -> float:
    """Shannon entropy of a p-weighted coin, in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def ent_suite(bits: BitSequence) -> TestReport:
    """ENT-style metrics: entropy, chi-square, mean, Monte Carlo pi, scc.

    Verdicts: entropy must reach the value implied by the bias limit;
    the chi-square exceedance probability must lie in [0.01, 0.99]; mean
    and serial correlation must respect their 3-sigma limits; the Monte
    Carlo estimate of pi must be within 3 standard errors.
    """
    n = bits.bit_len
    if n < 48:
        raise DataError(f"ent_suite needs at least 48 bits, got {n}")
    b = unpack_bits(bits)
    ones = int(b.sum())
    p1 = ones / n
    report = TestReport(sequence_bit_len=n)

    h = binary_entropy(p1)
    h_floor = binary_entropy(0.5 + 1.5 / math.sqrt(n))
    report.entries.append(TestEntry(
        "entropy_per_bit", h, None, h_floor, "pass" if h >= h_floor else "fail"
    ))

    half = n / 2
    chi2 = (ones - half) ** 2 / half + ((n - ones) - half) ** 2 / half
    chi_p = float(gammaincc(0.5, chi2 / 2))
    report.entries.append(TestEntry(
        "chi_square", chi2, chi_p, None, "pass" if 0.01 <= chi_p <= 0.99 else "fail"
    ))

    mean_thr = 1.5 / math.sqrt(n)
    report.entries.append(TestEntry(
        "arithmetic_mean", p1, None, mean_thr,
        "pass" if abs(p1 - 0.5) < mean_thr else "fail",
    ))

    report.entries.append(_monte_carlo_pi_entry(bits))

    try:
        a1, scc_thr = serial_correlation(bits, 1)
        verdict = "pass" if abs(a1) < scc_thr else "fail"
    except DegenerateInputError:
        a1, scc_thr, verdict = float("nan"), 3.0 / math.sqrt(n), "skip"
    report.entries.append(TestEntry("serial_correlation", a1, None, scc_thr, verdict))
    return report


def _monte_carlo_pi_entry(bits: BitSequence) -> TestEntry:
    """Classic 6-byte-point Monte Carlo estimate of pi.

    Consecutive whole bytes form 24-bit x and y coordinates scaled to
    [0, 1); a point counts as inside when x^2 + y^2 < 1.
    """
    whole = bits.data[: bits.bit_len // 8]
    points = len(whole) // 6
    groups = whole[: 6 * points].reshape(-1, 6).astype(np.float64)
    x = (groups[:, 0] * 65536 + groups[:, 1] * 256 + groups[:, 2]) / 2**24
    y = (groups[:, 3] * 65536 + groups[:, 4] * 256 + groups[:, 5]) / 2**24
    inside = int(np.count_nonzero(x * x + y * y < 1.0))
    pi_hat = 4.0 * inside / points
    thr = 3.0 * math.sqrt(math.pi * (4 - math.pi) / points)
    verdict = "pass" if abs(pi_hat - math.pi) < thr else "fail"
    return TestEntry("monte_carlo_pi", pi_hat, None, thr, verdict)


def _skip(name: str) -> TestEntry:
    return TestEntry(name, float("nan"), None, None, "skip")


def _frequency(b: np.ndarray) -> tuple[float, float]:
    n = len(b)
    s_obs = abs(2 * int(b.sum()) - n) / math.sqrt(n)
    return s_obs, math.erfc(s_obs / math.sqrt(2))


def _block_frequency(b: np.ndarray, m: int) -> tuple[float, float]:
    n_blocks = len(b) // m
    pis = b[: n_blocks * m].reshape(n_blocks, m).mean(axis=1)
    chi2 = 4.0 * m * float(np.sum((pis - 0.5) ** 2))
    return chi2, float(gammaincc(n_blocks / 2, chi2 / 2))


def _cusum_one_direction(b: np.ndarray) -> tuple[int, float]:
    n = len(b)
    s = np.cumsum(b.astype(np.int64) * 2 - 1)
    z = int(np.max(np.abs(s)))
    sn = math.sqrt(n)
    # Terms with |(4k+-1) z / sqrt(n)| beyond ~10 are 0 or 1 to double
    # precision and cancel pairwise, so the k ranges can be clipped.
    k_cap = int(10 * sn / (4 * z)) + 2

    def phi_sum(lo_num: float, a: int, b_: int) -> float:
        lo = max(math.ceil(lo_num / 4), -k_cap)
        hi = min(math.floor((n / z - 1) / 4), k_cap)
        if hi < lo:
            return 0.0
        ks = np.arange(lo, hi + 1)
        return float(np.sum(
            _norm.cdf((4 * ks + a) * z / sn) - _norm.cdf((4 * ks + b_) * z / sn)
        ))

    p = 1.0 - phi_sum(-n / z + 1, 1, -1) + phi_sum(-n / z - 3, 3, 1)
    return z, min(max(p, 0.0), 1.0)


def _cumulative_sums(b: np.ndarray) -> tuple[float, float]:
    z_f, p_f = _cusum_one_direction(b)
    z_b, p_b = _cusum_one_direction(b[::-1])
    return (float(z_f), p_f) if p_f <= p_b else (float(z_b), p_b)


def _runs(b: np.ndarray) -> tuple[float, float]:
    n = len(b)
    pi = int(b.sum()) / n
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        return float("nan"), 0.0
    v = 1 + int(np.count_nonzero(np.diff(b)))
    p = math.erfc(abs(v - 2 * n * pi * (1 - pi)) / (2 * math.sqrt(2 * n) * pi * (1 - pi)))
    return float(v), p


_LONGEST_RUN_TIERS = (
    # (min_n, block_size, n_blocks, category edges (low, high), probabilities)
    (750000, 10000, 75, 10, 16,
     (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6272, 128, 49, 4, 9,
     (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (128, 8, 16, 1, 4,
     (0.2148, 0.3672, 0.2305, 0.1875)),
)


def _longest_one_run(x: np.ndarray) -> int:
    if not x.any():
        return 0
    edges = np.diff(np.concatenate(([0], x, [0])).astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return int((ends - starts).max())


def _longest_run(b: np.ndarray) -> tuple[float, float]:
    n = len(b)
    for min_n, m, n_blocks, lo, hi, probs in _LONGEST_RUN_TIERS:
        if n >= min_n:
            break
    blocks = b[: n_blocks * m].reshape(n_blocks, m)
    runs = np.array([_longest_one_run(block) for block in blocks])
    cats = np.clip(runs, lo, hi) - lo
    counts = np.bincount(cats, minlength=hi - lo + 1)
    expected = n_blocks * np.asarray(probs)
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    k = hi - lo  # degrees of freedom
    return chi2, float(gammaincc(k / 2, chi2 / 2))


def sts_subset(bits: BitSequence, block_len: int = 128, alpha: float = 0.01) -> TestReport:
    """Five-test subset of the NIST statistical test suite.

    Tests whose minimum length requirement is not met are reported as
    ``skip`` entries rather than failures.  A test passes when its p-value
    is at least ``alpha``.
    """
    if block_len < 1:
        raise ParameterError(f"block_len must be >= 1, got {block_len}")
    if not (0 < alpha < 1):
        raise ParameterError(f"alpha must be in (0, 1), got {alpha}")
    n = bits.bit_len
    b = unpack_bits(bits)
    report = TestReport(sequence_bit_len=n)

    def add(name: str, min_n: int, fn, *args):
        if n < min_n:
            report.entries.append(_skip(name))
            return
        stat, p = fn(b, *args)
        verdict = "pass" if p >= alpha else "fail"
        report.entries.append(TestEntry(name, stat, p, alpha, verdict))

    add("frequency", 100, _frequency)
    add("block_frequency", 128 * block_len, _block_frequency, block_len)
    add("cumulative_sums", 100, _cumulative_sums)
    add("runs", 100, _runs)
    add("longest_run", 128, _longest_run)
    return report


@dataclass(frozen=True)
class MultiLsbResult:
    """Within-code bit correlations against the paired-LSB baseline."""

    within_group_corr: float
    within_threshold: float
    baseline_corr: float
    baseline_threshold: float


def multi_lsb_experiment(block: SampleBlock, k: int) -> MultiLsbResult:
    """Mean absolute correlation between the k low bits across codes.

    Extracting several bits per code raises the output rate, but when the
    code distribution is nonuniform the bits of one code are mutually
    correlated.  The returned baseline is the lag-1 correlation magnitude
    of the paired-subtraction bits from the same block, which stays at the
    sampling-noise floor.  Both come with their 3-sigma thresholds.
    """
    if not 2 <= int(k) <= 8:
        raise ParameterError(f"k must be in 2..8 for a correlation estimate, got {k}")
    k = int(k)
    n = len(block.codes)
    if n < 10_000:
        raise DataError(f"need at least 10^4 codes for stable estimates, got {n}")
    mat = ((block.codes[None, :] >> np.arange(k, dtype=np.uint8)[:, None]) & 1)
    mat = mat.astype(np.float64)
    if np.any(mat.std(axis=1) == 0):
        raise DegenerateInputError("a bit position is constant across all codes")
    corr = np.corrcoef(mat)
    iu = np.triu_indices(k, 1)
    within = float(np.mean(np.abs(corr[iu])))

    a1, base_thr = serial_correlation(final_bits(block), 1)
    return MultiLsbResult(
        within_group_corr=within,
        within_threshold=3.0 / math.sqrt(n),
        baseline_corr=abs(a1),
        baseline_threshold=base_thr,
    )
