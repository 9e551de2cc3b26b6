"""Bit extraction and packing.

Final random bits are the least significant bits of modulo-256 differences
of consecutive code pairs (V2-V1, V4-V3, ...).  Because
``LSB((a - b) mod 256) == LSB(a) XOR LSB(b)``, pairing reduces an LSB bias
of ``eps`` to ``2*eps**2`` while using each code exactly once.

Packed bit streams are headerless byte strings, first bit in the most
significant bit of byte 0; pad bits in the last byte are zero.  The bit
count is carried out of band (in the run report).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .acquisition import SampleBlock
from .errors import DataError, ParameterError


@dataclass
class BitSequence:
    """Packed bit stream (MSB-first) with its exact bit length."""

    data: np.ndarray
    bit_len: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.uint8)
        if data.ndim != 1:
            raise ParameterError("packed data must be a 1-d byte array")
        if self.bit_len < 0 or self.bit_len > 8 * len(data):
            raise ParameterError(
                f"bit_len {self.bit_len} does not fit in {len(data)} bytes"
            )
        if len(data) > (self.bit_len + 7) // 8:
            raise ParameterError("packed data has surplus bytes")
        pad = 8 * len(data) - self.bit_len
        if pad and len(data) and (data[-1] & ((1 << pad) - 1)):
            raise DataError("pad bits in the last byte must be zero")
        self.data = data

    def __len__(self) -> int:
        return self.bit_len

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitSequence):
            return NotImplemented
        return self.bit_len == other.bit_len and np.array_equal(self.data, other.data)


def pack_bits(bits: np.ndarray) -> BitSequence:
    """Pack an array of 0/1 values, first bit into the MSB of byte 0."""
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.size and arr.max() > 1:
        raise ParameterError("bits must be 0 or 1")
    return BitSequence(data=np.packbits(arr), bit_len=len(arr))


def unpack_bits(seq: BitSequence) -> np.ndarray:
    """Inverse of :func:`pack_bits`: a uint8 array of 0/1 values."""
    return np.unpackbits(seq.data)[: seq.bit_len]


def lsb_extract(block: SampleBlock) -> BitSequence:
    """One bit per code: its parity (even or odd bin)."""
    return pack_bits(block.codes & 1)


def pairwise_subtract(block: SampleBlock) -> SampleBlock:
    """Modulo-256 differences V2-V1, V4-V3, ...; floor(N/2) outputs.

    Each code participates in exactly one pair; a trailing unpaired code is
    discarded.  Wrapping (rather than saturating) subtraction preserves the
    parity-XOR identity that makes the debiasing analyzable.
    """
    n2 = len(block.codes) // 2
    paired = block.codes[: 2 * n2]
    diffs = paired[1::2] - paired[0::2]  # uint8 arithmetic wraps mod 256
    return SampleBlock(codes=diffs, sample_rate_hz=block.sample_rate_hz)


def final_bits(block: SampleBlock) -> BitSequence:
    """LSBs of the pairwise differences: the final random bits."""
    return lsb_extract(pairwise_subtract(block))


def k_lsb_extract(block: SampleBlock, k: int) -> BitSequence:
    """The k low-order bits of every code, most significant first."""
    if not 1 <= int(k) <= 8:
        raise ParameterError(f"k must be in 1..8, got {k}")
    k = int(k)
    per_code = np.unpackbits(block.codes.reshape(-1, 1), axis=1)[:, 8 - k :]
    return pack_bits(per_code.reshape(-1))


def write_bits(seq: BitSequence, path: str | os.PathLike) -> None:
    """Write the packed bytes; the bit length is reported out of band."""
    seq.data.tofile(path)


def read_bits(path: str | os.PathLike, bit_len: int) -> BitSequence:
    """Read a packed bit file of exactly ``bit_len`` bits."""
    data = np.fromfile(path, dtype=np.uint8)
    need = (bit_len + 7) // 8
    if len(data) < need:
        raise DataError(
            f"file {os.fspath(path)} holds {8 * len(data)} bits, fewer than bit_len={bit_len}"
        )
    if len(data) > need:
        raise DataError(
            f"file {os.fspath(path)} holds {len(data)} bytes but bit_len={bit_len} needs {need}"
        )
    return BitSequence(data=data, bit_len=bit_len)
