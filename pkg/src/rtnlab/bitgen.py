"""Bitstream generation: comparator sampling, LFSR whitening, bit files.

Whitening uses additive-scrambler semantics: a Fibonacci LFSR runs
autonomously from its seed state and its keystream is XORed onto the
input. Feeding an all-zero input therefore reproduces the raw LFSR
sequence (a pseudo-RNG on its own), and whitening twice with the same
config is the identity.

File format RTNB (little-endian): magic "RTNB", version u16, reserved
u16, bit length u64, then the payload packed LSB-first with the final
byte zero-padded. The 16-byte header makes an empty stream a 16-byte
file. An ASCII variant ('0'/'1' characters, newline-terminated) exists
for debugging and external consumers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataFormatError

_BITS_MAGIC = b"RTNB"
_BITS_VERSION = 1
_BITS_HEADER = struct.Struct("<4sHHQ")


@dataclass
class BitStream:
    """Ordered binary sequence stored as a uint8 array of 0/1."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.size and not np.isin(b, (0, 1)).all():
            raise ValueError("bits must all be 0 or 1")
        self.bits = b.astype(np.uint8)

    @property
    def length(self):
        return int(self.bits.size)

    def __len__(self):
        return self.length

    def __eq__(self, other):
        if not isinstance(other, BitStream):
            return NotImplemented
        return self.length == other.length and bool(np.array_equal(self.bits, other.bits))

    @classmethod
    def from_string(cls, text):
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    def to_string(self):
        return "".join("01"[b] for b in self.bits)


@dataclass(frozen=True)
class LfsrConfig:
    """Fibonacci LFSR: feedback polynomial given by tap positions.

    Default is the primitive degree-16 polynomial
    x^16 + x^14 + x^13 + x^11 + 1 (period 65535).
    """

    width: int = 16
    taps: tuple[int, ...] = (16, 14, 13, 11)
    seed_state: int = 0xACE1

    def __post_init__(self):
        if self.width < 2:
            raise ConfigError("LFSR width must be >= 2")
        if self.seed_state == 0:
            raise ConfigError("LFSR seed_state must be nonzero (all-zero cycle)")
        if not (0 < self.seed_state < (1 << self.width)):
            raise ConfigError("seed_state must fit in the register width")
        taps = tuple(sorted(set(self.taps), reverse=True))
        if not taps or taps[0] != self.width:
            raise ConfigError("taps must include the register width (polynomial degree)")
        if any(t < 1 for t in taps):
            raise ConfigError("tap positions must be >= 1")
        object.__setattr__(self, "taps", taps)


@dataclass(frozen=True)
class SamplerConfig:
    sample_period: float  # seconds
    start_offset: float = 0.0

    def __post_init__(self):
        if not self.sample_period > 0:
            raise ConfigError("sample_period must be positive")
        if self.start_offset < 0:
            raise ConfigError("start_offset must be >= 0")


def sample_bits(record, sampler: SamplerConfig):
    """Clock the comparator decision stream at a fixed period.

    bits[k] is the decision nearest to start_offset + k*sample_period;
    the stream ends at the record duration.
    """
    dt = record.dt
    decision = np.asarray(record.decision, dtype=np.uint8)
    if sampler.sample_period < dt:
        raise ConfigError(
            f"sample_period {sampler.sample_period:.3g}s below record dt {dt:.3g}s"
        )
    duration = decision.size * dt
    ratio = (duration - sampler.start_offset) / sampler.sample_period
    # guard against 7.999999999 when the ratio is mathematically integral
    count = int(np.floor(ratio * (1 + 1e-12) + 1e-12))
    if count <= 0:
        return BitStream(np.empty(0, dtype=np.uint8))
    t = sampler.start_offset + np.arange(count) * sampler.sample_period
    idx = np.clip(np.rint(t / dt).astype(np.int64), 0, decision.size - 1)
    return BitStream(decision[idx])


def lfsr_keystream(cfg: LfsrConfig, n):
    """n bits of the autonomous LFSR output (the bit shifted out each step)."""
    state = cfg.seed_state
    width = cfg.width
    shifts = tuple(width - t for t in cfg.taps)
    out = np.empty(n, dtype=np.uint8)
    msb = width - 1
    for k in range(n):
        out[k] = state & 1
        fb = 0
        for s in shifts:
            fb ^= state >> s
        state = (state >> 1) | ((fb & 1) << msb)
    return BitStream(out)


def lfsr_whiten(stream: BitStream, cfg: LfsrConfig):
    """XOR the input with the autonomous keystream (length-preserving involution)."""
    ks = lfsr_keystream(cfg, stream.length)
    return BitStream(np.bitwise_xor(stream.bits, ks.bits))


# ------------------------------------------------------------------ packing


def pack_bits(bits):
    """LSB-first packing: bit k goes to byte k//8, bit position k%8."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def unpack_bits(payload, n):
    return np.unpackbits(
        np.frombuffer(payload, dtype=np.uint8), count=n, bitorder="little"
    )


def write_bits(stream: BitStream, path, fmt="binary"):
    """Write a bitstream file; fmt is "binary" (RTNB) or "ascii"."""
    if fmt == "binary":
        header = _BITS_HEADER.pack(_BITS_MAGIC, _BITS_VERSION, 0, stream.length)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(pack_bits(stream.bits))
    elif fmt == "ascii":
        with open(path, "w") as fh:
            fh.write(stream.to_string())
            fh.write("\n")
    else:
        raise ConfigError(f"unknown bitstream format {fmt!r}")


def read_bits(path):
    """Read a bitstream file, auto-detecting RTNB binary versus ASCII."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] == _BITS_MAGIC:
        return _read_bits_binary(raw)
    text = raw.decode("ascii", errors="replace").strip()
    if text and not set(text) <= {"0", "1"}:
        bad = next(i for i, c in enumerate(text) if c not in "01")
        raise DataFormatError(f"unexpected character {text[bad]!r} in ASCII bitstream",
                              offset=bad)
    return BitStream.from_string(text) if text else BitStream(np.empty(0, dtype=np.uint8))


def _read_bits_binary(raw):
    if len(raw) < _BITS_HEADER.size:
        raise DataFormatError("bitstream file shorter than header", offset=len(raw))
    magic, version, _, n = _BITS_HEADER.unpack_from(raw)
    if version != _BITS_VERSION:
        raise DataFormatError(f"unsupported bitstream version {version}", offset=4)
    expected = _BITS_HEADER.size + (n + 7) // 8
    if len(raw) != expected:
        raise DataFormatError(
            f"payload length mismatch: expected {expected} bytes, got {len(raw)}",
            offset=min(len(raw), expected),
        )
    payload = raw[_BITS_HEADER.size:]
    if n % 8:
        pad = payload[-1] >> (n % 8)
        if pad:
            raise DataFormatError("final byte has nonzero padding bits",
                                  offset=len(raw) - 1)
    return BitStream(unpack_bits(payload, n))
