"""Binary block file (``.edgb``).

Layout, all integers little-endian::

    b"EDGB" | version:u8 | nblocks:u16
    per block: namelen:u8 name | ninsns:u8 | ninsns * word:u32 | nexits:u8 | nexits * (len:u8 label)
"""

from __future__ import annotations

import struct

from .errors import BlockFileError, EncodingError
from .isa import Block, decode_instruction, encode_instruction, validate_block

MAGIC = b"EDGB"
VERSION = 1


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 255:
        raise BlockFileError(f"label too long: {s!r}")
    return bytes([len(raw)]) + raw


def dump_blocks(blocks) -> bytes:
    out = bytearray(MAGIC)
    out += struct.pack("<BH", VERSION, len(blocks))
    for b in blocks:
        out += _pack_str(b.name)
        out.append(len(b.instructions))
        for insn in b.instructions:
            out += struct.pack("<I", encode_instruction(insn))
        out.append(len(b.exits))
        for label in b.exits:
            out += _pack_str(label)
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise BlockFileError("truncated block file")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def string(self) -> str:
        return self.take(self.u8()).decode("utf-8")


def load_blocks(data: bytes) -> list[Block]:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise BlockFileError("bad magic, not an EDGB file")
    version, count = struct.unpack("<BH", r.take(3))
    if version != VERSION:
        raise BlockFileError(f"unsupported version {version}")
    blocks = []
    for _ in range(count):
        name = r.string()
        n = r.u8()
        words = struct.unpack(f"<{n}I", r.take(4 * n))
        try:
            insns = tuple(decode_instruction(w) for w in words)
        except EncodingError as e:
            raise BlockFileError(f"block {name}: {e}") from e
        exits = tuple(r.string() for _ in range(r.u8()))
        block = Block(name, insns, exits)
        validate_block(block)
        blocks.append(block)
    if r.pos != len(data):
        raise BlockFileError("trailing bytes after last block")
    return blocks


def write_file(path, blocks) -> None:
    with open(path, "wb") as f:
        f.write(dump_blocks(blocks))


def read_file(path) -> list[Block]:
    with open(path, "rb") as f:
        return load_blocks(f.read())
