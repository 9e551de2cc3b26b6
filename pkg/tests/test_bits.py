import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaserng.acquisition import SampleBlock
from phaserng.bits import (
    BitSequence,
    final_bits,
    k_lsb_extract,
    lsb_extract,
    pack_bits,
    pairwise_subtract,
    read_bits,
    unpack_bits,
    write_bits,
)
from phaserng.errors import DataError, ParameterError


def block(codes):
    return SampleBlock(np.asarray(codes, dtype=np.uint8), 40e6)


class TestPacking:
    def test_three_bits(self):
        seq = pack_bits([1, 0, 1])
        assert seq.bit_len == 3
        assert list(seq.data) == [0b10100000]
        assert list(unpack_bits(seq)) == [1, 0, 1]

    def test_empty(self):
        seq = pack_bits([])
        assert seq.bit_len == 0
        assert len(seq.data) == 0
        assert len(unpack_bits(seq)) == 0

    def test_eight_bits_one_byte(self):
        seq = pack_bits([1] * 8)
        assert len(seq.data) == 1
        assert seq.data[0] == 0xFF

    @given(st.lists(st.integers(0, 1), max_size=500))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip(self, bits):
        seq = pack_bits(bits)
        assert list(unpack_bits(seq)) == bits
        pad = 8 * len(seq.data) - seq.bit_len
        if pad:
            assert seq.data[-1] & ((1 << pad) - 1) == 0

    def test_non_binary_rejected(self):
        with pytest.raises(ParameterError):
            pack_bits([0, 2])

    def test_pad_bits_must_be_zero(self):
        with pytest.raises(DataError):
            BitSequence(data=np.array([0xFF], dtype=np.uint8), bit_len=3)


class TestLsbExtract:
    def test_parity(self):
        assert list(unpack_bits(lsb_extract(block([2, 3, 5])))) == [0, 1, 1]

    def test_extremes(self):
        assert list(unpack_bits(lsb_extract(block([0])))) == [0]
        assert list(unpack_bits(lsb_extract(block([255])))) == [1]

    def test_biased_quantizer_measured_bias(self):
        # codes with P(odd) = 0.55 give p(1) = 0.55 within 3/sqrt(N)
        rng = np.random.default_rng(10)
        n = 1_000_000
        codes = 2 * rng.integers(0, 128, n) + (rng.random(n) < 0.55)
        bits = unpack_bits(lsb_extract(block(codes)))
        assert abs(bits.mean() - 0.55) < 3 / np.sqrt(n)


class TestPairwiseSubtract:
    def test_mod_256(self):
        out = pairwise_subtract(block([100, 103, 7, 5]))
        assert list(out.codes) == [3, 254]

    def test_identical_pair(self):
        assert list(pairwise_subtract(block([9, 9])).codes) == [0]

    def test_odd_discards_last(self):
        assert list(pairwise_subtract(block([1, 2, 3])).codes) == [1]

    def test_uint8_wraps(self):
        assert list(pairwise_subtract(block([255, 0])).codes) == [1]
        assert list(pairwise_subtract(block([0, 255])).codes) == [255]


class TestFinalBits:
    def test_composition(self):
        assert list(unpack_bits(final_bits(block([100, 103, 7, 5])))) == [1, 0]

    def test_length_contract(self):
        for n in (0, 1, 2, 3, 101, 2000):
            codes = np.arange(n) % 256
            assert final_bits(block(codes)).bit_len == n // 2

    @pytest.mark.parametrize("eps", [0.01, 0.05, 0.1])
    def test_piling_up_debias(self, eps):
        # XOR of two independent eps-biased bits is 2*eps^2 biased
        rng = np.random.default_rng(20)
        n = 10_000_000
        codes = 2 * rng.integers(0, 128, n, dtype=np.uint8).astype(np.uint8)
        codes += (rng.random(n) < 0.5 + eps).astype(np.uint8)
        bits = unpack_bits(final_bits(block(codes)))
        se = np.sqrt(0.25 / len(bits))
        assert abs(abs(bits.mean() - 0.5) - 2 * eps**2) < 3 * se

    def test_no_new_correlation(self):
        rng = np.random.default_rng(21)
        n = 2_000_000
        codes = rng.integers(0, 256, n, dtype=np.uint8)
        b = unpack_bits(final_bits(block(codes))).astype(np.float64)
        r = np.corrcoef(b[:-1], b[1:])[0, 1]
        assert abs(r) < 3 / np.sqrt(n // 2)

    def test_parity_algebra_exhaustive(self):
        # LSB((a - b) mod 256) == LSB(a) XOR LSB(b) over all 65536 pairs
        a = np.arange(256, dtype=np.uint8)
        diff = a[:, None] - a[None, :]
        assert np.array_equal(diff & 1, (a[:, None] & 1) ^ (a[None, :] & 1))


class TestKLsbExtract:
    def test_k1_equals_lsb(self):
        codes = np.arange(256, dtype=np.uint8)
        assert k_lsb_extract(block(codes), 1) == lsb_extract(block(codes))

    def test_bit_selection_order(self):
        assert list(unpack_bits(k_lsb_extract(block([0b10110110]), 3))) == [1, 1, 0]

    def test_uniform_codes_unbiased(self):
        rng = np.random.default_rng(30)
        n = 500_000
        codes = rng.integers(0, 256, n, dtype=np.uint8)
        bits = unpack_bits(k_lsb_extract(block(codes), 8))
        assert abs(bits.mean() - 0.5) < 3 * np.sqrt(0.25 / (8 * n))

    def test_bit_len(self):
        assert k_lsb_extract(block([1, 2, 3]), 5).bit_len == 15

    @pytest.mark.parametrize("k", [0, 9, -1])
    def test_k_out_of_range(self, k):
        with pytest.raises(ParameterError):
            k_lsb_extract(block([1]), k)


class TestBitFiles:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "bits.bin"
        seq = pack_bits([1, 0, 1, 1, 0, 0, 1, 0, 1])
        write_bits(seq, path)
        assert read_bits(path, seq.bit_len) == seq

    def test_truncated_rejected(self, tmp_path):
        path = tmp_path / "bits.bin"
        path.write_bytes(b"\xaa")
        with pytest.raises(DataError):
            read_bits(path, 9)

    def test_surplus_rejected(self, tmp_path):
        path = tmp_path / "bits.bin"
        path.write_bytes(b"\xaa\xbb\xcc")
        with pytest.raises(DataError):
            read_bits(path, 8)
