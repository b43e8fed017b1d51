"""Byte-level helpers: length-prefixed values and position-encoded items."""

from __future__ import annotations

import struct

from .errors import DecodeError


def pack_bytes(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def pack_u32(value: int) -> bytes:
    return struct.pack(">I", value)


def indexed_item(value: bytes, index: int) -> bytes:
    """Encode a value/position pair as length-prefixed bytes + 32-bit BE index.

    This is the canonical encoding for position-tagged items fed to PSI-CA
    (sketch entries, sampled bits, vector components).
    """
    return pack_bytes(value) + pack_u32(index)


class Reader:
    """Sequential reader over a byte payload, raising DecodeError on underrun."""

    def __init__(self, data: bytes):
        self._data = data
        self._off = 0

    def u8(self) -> int:
        return self.raw(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.raw(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.raw(8))[0]

    def raw(self, n: int) -> bytes:
        if self._off + n > len(self._data):
            raise DecodeError("truncated payload", "truncated")
        out = self._data[self._off : self._off + n]
        self._off += n
        return out

    def bytes_(self) -> bytes:
        return self.raw(self.u32())

    def done(self) -> None:
        if self._off != len(self._data):
            raise DecodeError("trailing bytes in payload", "trailing")
