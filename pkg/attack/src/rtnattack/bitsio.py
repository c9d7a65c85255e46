"""Bitstream file access.

Reads the two export formats the generator side publishes:

* RTNB binary: magic ``RTNB``, u16 version (1), u16 reserved (0),
  u64 little-endian bit count, then the bits packed LSB-first.
* ASCII: ``0``/``1`` characters, whitespace ignored.

This module deliberately re-implements the readers from the published
file contract rather than importing the generator package — the attack
side must be able to consume exports with nothing but the files.
"""

import struct

import numpy as np

_MAGIC = b"RTNB"
_HEADER = struct.Struct("<4sHHQ")


class DataError(ValueError):
    """Malformed or unreadable bitstream file."""


def read_bits(path):
    """Bits (uint8 0/1 array) from an RTNB or ASCII file."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if raw[:4] == _MAGIC:
        return _read_binary(raw)
    return _read_ascii(raw)


def _read_binary(raw):
    if len(raw) < _HEADER.size:
        raise DataError(f"truncated header ({len(raw)} bytes)")
    magic, version, reserved, n = _HEADER.unpack_from(raw)
    if version != 1:
        raise DataError(f"unsupported version {version}")
    if reserved != 0:
        raise DataError(f"reserved field must be 0, got {reserved}")
    payload = raw[_HEADER.size:]
    if len(payload) < (n + 7) // 8:
        raise DataError(f"payload holds {len(payload) * 8} bits, header says {n}")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=n,
                         bitorder="little")
    return bits.astype(np.uint8)


def _read_ascii(raw):
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise DataError(f"not an RTNB file and not ASCII: {exc}") from exc
    stripped = "".join(text.split())
    bad = next((i for i, c in enumerate(stripped) if c not in "01"), None)
    if bad is not None:
        raise DataError(f"unexpected character {stripped[bad]!r} at position {bad}")
    return np.frombuffer(stripped.encode(), dtype=np.uint8) - ord("0")


def write_bits(bits, path, fmt="binary"):
    """Writer mirroring the published formats (used by tests and tools)."""
    b = np.asarray(bits, dtype=np.uint8)
    if b.size and not np.isin(b, (0, 1)).all():
        raise ValueError("bits must be 0/1")
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(_MAGIC, 1, 0, b.size))
            fh.write(np.packbits(b, bitorder="little").tobytes())
    elif fmt == "ascii":
        with open(path, "w") as fh:
            fh.write("".join("01"[v] for v in b.tolist()))
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
