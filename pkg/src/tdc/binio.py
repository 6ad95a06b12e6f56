"""Little-endian binary reader/writer helpers for the container formats."""

from __future__ import annotations

import struct

import numpy as np

from .errors import BadMagicError, FormatError, TruncatedPayloadError, VersionMismatchError


class ByteReader:
    """Sequential reader over an in-memory byte string, tracking the offset."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    @property
    def offset(self) -> int:
        return self._pos

    def take(self, n: int, what: str) -> bytes:
        if self._pos + n > len(self._data):
            raise TruncatedPayloadError(f"file ends inside {what}", self._pos)
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def expect_magic(self, magic: bytes) -> None:
        start = self._pos
        got = self.take(len(magic), "magic")
        if got != magic:
            raise BadMagicError(f"expected magic {magic!r}, found {got!r}", start)

    def expect_version(self, supported: int) -> None:
        start = self._pos
        version = self.u32("version")
        if version != supported:
            raise VersionMismatchError(
                f"unsupported container version {version}, reader supports {supported}", start
            )

    def expect_end(self) -> None:
        if self._pos != len(self._data):
            raise FormatError(f"{len(self._data) - self._pos} trailing bytes", self._pos)

    def u8(self, what: str = "u8") -> int:
        return self.take(1, what)[0]

    def u16(self, what: str = "u16") -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str = "u32") -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def f32_array(self, count: int, what: str) -> np.ndarray:
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4", count=count)


class ByteWriter:
    """Accumulates little-endian fields into a byte string."""

    def __init__(self):
        self._parts: list[bytes] = []

    def raw(self, data: bytes) -> None:
        self._parts.append(data)

    def u8(self, value: int) -> None:
        self._parts.append(struct.pack("<B", value))

    def u16(self, value: int) -> None:
        self._parts.append(struct.pack("<H", value))

    def u32(self, value: int) -> None:
        self._parts.append(struct.pack("<I", value))

    def f32_array(self, values: np.ndarray) -> None:
        self._parts.append(np.ascontiguousarray(values, dtype="<f4").tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self._parts)
