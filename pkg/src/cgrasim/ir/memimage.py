"""Flat little-endian global memory image with a JSON sidecar offset table
mapping symbolic names to (byte offset, length) regions.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path


class MemoryImage:
    def __init__(self, size: int = 0, data: bytes | bytearray | None = None):
        self.data = bytearray(data) if data is not None else bytearray(size)
        self.table: dict[str, tuple[int, int]] = {}

    def __len__(self):
        return len(self.data)

    def copy(self) -> "MemoryImage":
        img = MemoryImage(data=bytes(self.data))
        img.table = dict(self.table)
        return img

    def add_region(self, name: str, length: int) -> int:
        """Append a zeroed region and return its byte offset."""
        off = len(self.data)
        self.data.extend(bytes(length))
        self.table[name] = (off, length)
        return off

    def offset(self, name: str) -> int:
        return self.table[name][0]

    def read_word(self, addr: int) -> int:
        return struct.unpack_from("<I", self.data, addr)[0]

    def write_word(self, addr: int, value: int):
        struct.pack_into("<I", self.data, addr, value & 0xFFFFFFFF)

    def words(self, name: str) -> list[int]:
        off, length = self.table[name]
        return list(struct.unpack_from(f"<{length // 4}I", self.data, off))

    def set_words(self, name: str, values: list[int]):
        off, length = self.table[name]
        assert len(values) * 4 <= length
        struct.pack_into(f"<{len(values)}I", self.data, off, *[v & 0xFFFFFFFF for v in values])

    def save(self, path: str | Path):
        path = Path(path)
        path.write_bytes(bytes(self.data))
        sidecar = {n: {"offset": o, "length": l} for n, (o, l) in self.table.items()}
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "MemoryImage":
        path = Path(path)
        img = cls(data=path.read_bytes())
        sidecar = path.with_suffix(path.suffix + ".json")
        if sidecar.exists():
            raw = json.loads(sidecar.read_text())
            img.table = {n: (v["offset"], v["length"]) for n, v in raw.items()}
        return img
