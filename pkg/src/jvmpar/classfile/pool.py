"""Constant pool model.

Entries keep enough raw state to re-emit byte-identically: Utf8 keeps the
original (modified-UTF-8) bytes, Float/Double keep the raw IEEE words so NaN
payloads survive a round trip.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..errors import InconsistentModel, MalformedClassfile

TAG_UTF8 = 1
TAG_INTEGER = 3
TAG_FLOAT = 4
TAG_LONG = 5
TAG_DOUBLE = 6
TAG_CLASS = 7
TAG_STRING = 8
TAG_FIELDREF = 9
TAG_METHODREF = 10
TAG_IFACEMETHODREF = 11
TAG_NAMEANDTYPE = 12
TAG_METHODHANDLE = 15
TAG_METHODTYPE = 16
TAG_DYNAMIC = 17
TAG_INVOKEDYNAMIC = 18
TAG_MODULE = 19
TAG_PACKAGE = 20

TAG_NAMES = {
    TAG_UTF8: "Utf8", TAG_INTEGER: "Integer", TAG_FLOAT: "Float",
    TAG_LONG: "Long", TAG_DOUBLE: "Double", TAG_CLASS: "Class",
    TAG_STRING: "String", TAG_FIELDREF: "Fieldref", TAG_METHODREF: "Methodref",
    TAG_IFACEMETHODREF: "InterfaceMethodref", TAG_NAMEANDTYPE: "NameAndType",
    TAG_METHODHANDLE: "MethodHandle", TAG_METHODTYPE: "MethodType",
    TAG_DYNAMIC: "Dynamic", TAG_INVOKEDYNAMIC: "InvokeDynamic",
    TAG_MODULE: "Module", TAG_PACKAGE: "Package",
}


@dataclass
class CpEntry:
    tag: int
    # reference-style operands (indices into the pool), meaning depends on tag
    a: int = 0
    b: int = 0
    raw: bytes = b""  # Utf8 payload / Float / Double / Integer / Long raw words

    def is_wide(self) -> bool:
        return self.tag in (TAG_LONG, TAG_DOUBLE)

    @property
    def utf8(self) -> str:
        # modified UTF-8: good enough to decode the ASCII-plus subset we meet;
        # surrogate-pair and embedded-NUL forms fall back to a lossy decode
        try:
            return self.raw.decode("utf-8")
        except UnicodeDecodeError:
            return self.raw.decode("utf-8", errors="replace")

    @property
    def int_value(self) -> int:
        if self.tag == TAG_INTEGER:
            return struct.unpack(">i", self.raw)[0]
        if self.tag == TAG_LONG:
            return struct.unpack(">q", self.raw)[0]
        raise InconsistentModel(f"not a numeric entry: tag {self.tag}")

    @property
    def float_value(self) -> float:
        if self.tag == TAG_FLOAT:
            return struct.unpack(">f", self.raw)[0]
        if self.tag == TAG_DOUBLE:
            return struct.unpack(">d", self.raw)[0]
        raise InconsistentModel(f"not a float entry: tag {self.tag}")

    def __repr__(self):
        name = TAG_NAMES.get(self.tag, str(self.tag))
        if self.tag == TAG_UTF8:
            return f"Cp({name} {self.utf8!r})"
        if self.raw:
            return f"Cp({name} raw={self.raw.hex()})"
        return f"Cp({name} {self.a},{self.b})"


class ConstantPool:
    """1-based pool; Long/Double occupy two slots (the second is None)."""

    def __init__(self):
        self.entries: list[CpEntry | None] = [None]  # index 0 unused

    def __len__(self):
        return len(self.entries)

    def entry(self, index: int, expect: int | None = None) -> CpEntry:
        if not 1 <= index < len(self.entries):
            raise MalformedClassfile(f"pool index {index} out of range 1..{len(self.entries) - 1}")
        e = self.entries[index]
        if e is None:
            raise MalformedClassfile(f"pool index {index} points into a wide entry")
        if expect is not None and e.tag != expect:
            raise MalformedClassfile(
                f"pool index {index}: expected {TAG_NAMES.get(expect)}, found {TAG_NAMES.get(e.tag, e.tag)}")
        return e

    def utf8(self, index: int) -> str:
        return self.entry(index, TAG_UTF8).utf8

    def class_name(self, index: int) -> str:
        return self.utf8(self.entry(index, TAG_CLASS).a)

    def name_and_type(self, index: int) -> tuple[str, str]:
        e = self.entry(index, TAG_NAMEANDTYPE)
        return self.utf8(e.a), self.utf8(e.b)

    def member_ref(self, index: int) -> tuple[str, str, str]:
        """(owner class, member name, descriptor) for any *ref entry."""
        e = self.entry(index)
        if e.tag not in (TAG_FIELDREF, TAG_METHODREF, TAG_IFACEMETHODREF):
            raise MalformedClassfile(f"pool index {index} is not a member reference")
        owner = self.class_name(e.a)
        name, desc = self.name_and_type(e.b)
        return owner, name, desc

    # ---- builders (dedup) ------------------------------------------------

    def _find(self, tag, a=0, b=0, raw=b"") -> int | None:
        for i, e in enumerate(self.entries):
            if e is not None and e.tag == tag and e.a == a and e.b == b and e.raw == raw:
                return i
        return None

    def _add(self, entry: CpEntry) -> int:
        idx = self._find(entry.tag, entry.a, entry.b, entry.raw)
        if idx is not None:
            return idx
        idx = len(self.entries)
        self.entries.append(entry)
        if entry.is_wide():
            self.entries.append(None)
        return idx

    def add_utf8(self, s: str) -> int:
        return self._add(CpEntry(TAG_UTF8, raw=s.encode("utf-8")))

    def add_class(self, name: str) -> int:
        return self._add(CpEntry(TAG_CLASS, a=self.add_utf8(name)))

    def add_name_and_type(self, name: str, desc: str) -> int:
        return self._add(CpEntry(TAG_NAMEANDTYPE, a=self.add_utf8(name), b=self.add_utf8(desc)))

    def add_fieldref(self, owner: str, name: str, desc: str) -> int:
        return self._add(CpEntry(TAG_FIELDREF, a=self.add_class(owner),
                                 b=self.add_name_and_type(name, desc)))

    def add_methodref(self, owner: str, name: str, desc: str) -> int:
        return self._add(CpEntry(TAG_METHODREF, a=self.add_class(owner),
                                 b=self.add_name_and_type(name, desc)))

    def add_integer(self, v: int) -> int:
        return self._add(CpEntry(TAG_INTEGER, raw=struct.pack(">i", v)))

    def add_long(self, v: int) -> int:
        return self._add(CpEntry(TAG_LONG, raw=struct.pack(">q", v)))

    def add_float(self, v: float) -> int:
        return self._add(CpEntry(TAG_FLOAT, raw=struct.pack(">f", v)))

    def add_double(self, v: float) -> int:
        return self._add(CpEntry(TAG_DOUBLE, raw=struct.pack(">d", v)))

    def add_string(self, s: str) -> int:
        return self._add(CpEntry(TAG_STRING, a=self.add_utf8(s)))

    # ---- validation ------------------------------------------------------

    _REF_SHAPE = {
        TAG_CLASS: (TAG_UTF8, None),
        TAG_STRING: (TAG_UTF8, None),
        TAG_METHODTYPE: (TAG_UTF8, None),
        TAG_MODULE: (TAG_UTF8, None),
        TAG_PACKAGE: (TAG_UTF8, None),
        TAG_FIELDREF: (TAG_CLASS, TAG_NAMEANDTYPE),
        TAG_METHODREF: (TAG_CLASS, TAG_NAMEANDTYPE),
        TAG_IFACEMETHODREF: (TAG_CLASS, TAG_NAMEANDTYPE),
        TAG_NAMEANDTYPE: (TAG_UTF8, TAG_UTF8),
    }

    def validate(self):
        """Every index reachable from an entry resolves to the expected kind."""
        for i, e in enumerate(self.entries):
            if e is None:
                continue
            shape = self._REF_SHAPE.get(e.tag)
            if shape is None:
                continue
            want_a, want_b = shape
            if want_a is not None:
                self.entry(e.a, want_a)
            if want_b is not None:
                self.entry(e.b, want_b)
