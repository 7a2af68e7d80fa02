"""Bytecode decode/encode.

Decoded instructions keep the exact mnemonic form found in the stream
(`iload_2` stays `iload_2`, not `iload 2`) so re-encoding an untouched method
reproduces its bytes. Branch operands are decoded to absolute code offsets and
re-encoded as deltas.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..errors import InconsistentModel, MalformedClassfile
from . import opcodes as op


@dataclass
class BytecodeInstr:
    offset: int
    mnemonic: str
    args: tuple = ()
    wide: bool = False

    @property
    def fmt(self) -> str:
        return op.BY_NAME[self.mnemonic][1]

    def is_branch(self) -> bool:
        return self.fmt in op.BRANCH_FMTS or self.fmt == "switch"

    def branch_targets(self) -> list[int]:
        f = self.fmt
        if f in op.BRANCH_FMTS:
            return [self.args[0]]
        if self.mnemonic == "tableswitch":
            default, low, high, targets = self.args
            return [default, *targets]
        if self.mnemonic == "lookupswitch":
            default, pairs = self.args
            return [default, *[t for _, t in pairs]]
        return []

    def retarget(self, mapping) -> None:
        """Rewrite branch targets through `mapping` (old offset -> new offset)."""
        f = self.fmt
        if f in op.BRANCH_FMTS:
            self.args = (mapping[self.args[0]],)
        elif self.mnemonic == "tableswitch":
            default, low, high, targets = self.args
            self.args = (mapping[default], low, high, tuple(mapping[t] for t in targets))
        elif self.mnemonic == "lookupswitch":
            default, pairs = self.args
            self.args = (mapping[default], tuple((m, mapping[t]) for m, t in pairs))

    def local_index(self) -> int | None:
        """Local slot touched by a load/store/iinc/ret, else None."""
        m = self.mnemonic
        if self.fmt == "local" or m == "iinc":
            return self.args[0]
        if "_" in m:
            head, _, tail = m.rpartition("_")
            if tail.isdigit() and (head.endswith("load") or head.endswith("store")):
                return int(tail)
        return None

    def size(self, offset: int | None = None) -> int:
        if offset is None:
            offset = self.offset
        f = self.fmt
        if f == "":
            return 1
        if f in ("b", "cp1", "atype"):
            return 2
        if f in ("s", "cp2", "br2"):
            return 3
        if f == "local":
            return 4 if self.wide else 2
        if f == "iinc":
            return 6 if self.wide else 3
        if f in ("cpdim",):
            return 4
        if f in ("iface", "indy"):
            return 5
        if f == "br4":
            return 5
        if f == "switch":
            pad = (3 - offset % 4) % 4  # pad so first operand is 4-aligned
            if self.mnemonic == "tableswitch":
                _, low, high, targets = self.args
                return 1 + pad + 12 + 4 * len(targets)
            _, pairs = self.args
            return 1 + pad + 8 + 8 * len(pairs)
        raise InconsistentModel(f"unknown fmt {f} for {self.mnemonic}")

    def __repr__(self):
        a = " ".join(str(x) for x in self.args)
        w = "wide " if self.wide else ""
        return f"{self.offset}: {w}{self.mnemonic}{(' ' + a) if a else ''}"


def decode(code: bytes) -> list[BytecodeInstr]:
    """Decode a code array into instructions with absolute branch targets."""
    out: list[BytecodeInstr] = []
    pos = 0
    n = len(code)

    def u1(p):
        return code[p]

    def u2(p):
        return struct.unpack_from(">H", code, p)[0]

    def s1(p):
        return struct.unpack_from(">b", code, p)[0]

    def s2(p):
        return struct.unpack_from(">h", code, p)[0]

    def s4(p):
        return struct.unpack_from(">i", code, p)[0]

    while pos < n:
        start = pos
        opcode = code[pos]
        pos += 1
        wide = False
        if opcode == op.BY_NAME["wide"][0]:
            wide = True
            if pos >= n:
                raise MalformedClassfile("truncated wide instruction")
            opcode = code[pos]
            pos += 1
        if opcode not in op.BY_VALUE:
            raise MalformedClassfile(f"unknown opcode 0x{opcode:02x} at {start}")
        name, fmt = op.BY_VALUE[opcode]
        if wide and name not in op.WIDE_ALLOWED and fmt not in ("local",):
            raise MalformedClassfile(f"wide prefix on {name} at {start}")
        try:
            if fmt == "":
                args = ()
            elif fmt == "local":
                if wide:
                    args = (u2(pos),)
                    pos += 2
                else:
                    args = (u1(pos),)
                    pos += 1
            elif fmt == "b":
                args = (s1(pos),)
                pos += 1
            elif fmt == "s":
                args = (s2(pos),)
                pos += 2
            elif fmt == "cp1":
                args = (u1(pos),)
                pos += 1
            elif fmt in ("cp2",):
                args = (u2(pos),)
                pos += 2
            elif fmt == "br2":
                args = (start + s2(pos),)
                pos += 2
            elif fmt == "br4":
                args = (start + s4(pos),)
                pos += 4
            elif fmt == "iinc":
                if wide:
                    args = (u2(pos), s2(pos + 2))
                    pos += 4
                else:
                    args = (u1(pos), s1(pos + 1))
                    pos += 2
            elif fmt == "atype":
                args = (u1(pos),)
                pos += 1
            elif fmt == "cpdim":
                args = (u2(pos), u1(pos + 2))
                pos += 3
            elif fmt == "iface":
                args = (u2(pos), u1(pos + 2), u1(pos + 3))
                pos += 4
            elif fmt == "indy":
                args = (u2(pos),)
                pos += 4
            elif fmt == "switch":
                pad = (3 - start % 4) % 4
                p = pos + pad
                if name == "tableswitch":
                    default = start + s4(p)
                    low = s4(p + 4)
                    high = s4(p + 8)
                    if high < low:
                        raise MalformedClassfile("tableswitch high < low")
                    count = high - low + 1
                    targets = tuple(start + s4(p + 12 + 4 * i) for i in range(count))
                    args = (default, low, high, targets)
                    pos = p + 12 + 4 * count
                else:
                    default = start + s4(p)
                    npairs = s4(p + 4)
                    pairs = tuple((s4(p + 8 + 8 * i), start + s4(p + 12 + 8 * i))
                                  for i in range(npairs))
                    args = (default, pairs)
                    pos = p + 8 + 8 * npairs
            else:
                raise MalformedClassfile(f"bad fmt {fmt}")
        except struct.error as exc:
            raise MalformedClassfile(f"truncated operands for {name} at {start}") from exc
        if pos > n:
            raise MalformedClassfile(f"instruction {name} at {start} overruns code array")
        out.append(BytecodeInstr(offset=start, mnemonic=name, args=args, wide=wide))
    return out


def validate_targets(instrs: list[BytecodeInstr]) -> None:
    boundaries = {i.offset for i in instrs}
    for i in instrs:
        for t in i.branch_targets():
            if t not in boundaries:
                raise MalformedClassfile(
                    f"branch at {i.offset} targets {t}, not an instruction boundary")


def layout(instrs: list[BytecodeInstr]) -> int:
    """Assign sequential offsets (switch padding makes sizes offset-dependent).

    Returns total code length. Branch targets are not touched; callers that
    rebuild code use labels (see asm.CodeBuilder) and retarget afterwards.
    """
    pos = 0
    for i in instrs:
        i.offset = pos
        pos += i.size(pos)
    return pos


def encode(instrs: list[BytecodeInstr]) -> bytes:
    """Encode instructions whose offsets are already consistent."""
    buf = bytearray()
    boundaries = {i.offset for i in instrs}
    for i in instrs:
        if i.offset != len(buf):
            raise InconsistentModel(
                f"instruction offset {i.offset} does not match stream position {len(buf)}")
        for t in i.branch_targets():
            if t not in boundaries:
                raise InconsistentModel(
                    f"branch at {i.offset} targets {t}, not an instruction boundary")
        opcode, fmt = op.BY_NAME[i.mnemonic]
        if i.wide:
            buf.append(op.BY_NAME["wide"][0])
        buf.append(opcode)
        if fmt == "":
            pass
        elif fmt == "local":
            buf += struct.pack(">H" if i.wide else ">B", i.args[0])
        elif fmt == "b":
            buf += struct.pack(">b", i.args[0])
        elif fmt == "s":
            buf += struct.pack(">h", i.args[0])
        elif fmt == "cp1":
            buf += struct.pack(">B", i.args[0])
        elif fmt == "cp2":
            buf += struct.pack(">H", i.args[0])
        elif fmt == "br2":
            buf += struct.pack(">h", i.args[0] - i.offset)
        elif fmt == "br4":
            buf += struct.pack(">i", i.args[0] - i.offset)
        elif fmt == "iinc":
            buf += struct.pack(">Hh" if i.wide else ">Bb", i.args[0], i.args[1])
        elif fmt == "atype":
            buf += struct.pack(">B", i.args[0])
        elif fmt == "cpdim":
            buf += struct.pack(">HB", i.args[0], i.args[1])
        elif fmt == "iface":
            buf += struct.pack(">HBB", *i.args)
        elif fmt == "indy":
            buf += struct.pack(">HBB", i.args[0], 0, 0)
        elif fmt == "switch":
            pad = (3 - i.offset % 4) % 4
            buf += b"\x00" * pad
            if i.mnemonic == "tableswitch":
                default, low, high, targets = i.args
                buf += struct.pack(">iii", default - i.offset, low, high)
                for t in targets:
                    buf += struct.pack(">i", t - i.offset)
            else:
                default, pairs = i.args
                buf += struct.pack(">ii", default - i.offset, len(pairs))
                for m, t in pairs:
                    buf += struct.pack(">ii", m, t - i.offset)
        else:
            raise InconsistentModel(f"bad fmt {fmt}")
    return bytes(buf)
